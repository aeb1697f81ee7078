#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>

#include "ofgsc/config.hpp"
#include "ofgsc/experiment.hpp"
#include "ofgsc/mlp.hpp"
#include "ofgsc/seed.hpp"

namespace fs = std::filesystem;
using namespace ofgsc;
using exp::run_stage;
using recon::format_number;

namespace {

struct Common {
  std::string config;
  std::string seed;
  std::string out;
  std::string workers;
};

struct Flags {
  std::string input;
  std::string flows;
  std::string selection;
  std::string rho;
  std::string snr;
  std::string count;
  std::string height;
  std::string width;
  std::string frames;
  bool still = false;
};

config::Config resolve(const Common& common, const Flags& f) {
  config::Config c = common.config.empty() ? config::Config{} : exp::strip_manifest(config::Config::load(common.config));
  if (!common.seed.empty()) c.set("run.seed", common.seed);
  if (!common.out.empty()) c.set("runtime.out", common.out);
  if (!common.workers.empty()) c.set("runtime.workers", common.workers);
  if (!f.input.empty()) c.set("input.videos", f.input);
  if (!f.flows.empty()) c.set("io.flows", f.flows);
  if (!f.selection.empty()) c.set("io.selection", f.selection);
  if (!f.rho.empty()) c.set("sweep.rho", f.rho);
  if (!f.snr.empty()) c.set("sweep.snr_db", f.snr);
  if (!f.count.empty()) c.set("synth.count", f.count);
  if (!f.height.empty()) c.set("synth.height", f.height);
  if (!f.width.empty()) c.set("synth.width", f.width);
  if (!f.frames.empty()) c.set("synth.frames", f.frames);
  if (f.still) c.set("synth.static", "true");
  c.u64("run.seed", 0);  // validate early
  return c;
}

fs::path out_dir(const config::Config& c) { return c.str("runtime.out", "out"); }

void begin(const config::Config& c, const std::string& subcommand) {
  const fs::path out = out_dir(c);
  run_stage("output", "-", [&] {
    fs::create_directories(out);
    write_file_atomic(out / "manifest.ini", exp::manifest_text(c, subcommand));
  });
}

void write_out(const config::Config& c, const std::string& name, const std::string& contents) {
  run_stage("output", "-", [&] { write_file_atomic(out_dir(c) / name, contents); });
}

exp::ExperimentConfig experiment(const config::Config& c) {
  exp::ExperimentConfig e;
  run_stage("config", "-", [&] { e = exp::experiment_from_config(c); });
  return e;
}

const exp::VideoSource& single_video(const exp::ExperimentConfig& e) {
  if (e.videos.size() != 1) throw exp::StageError("config", "-", "exactly one input video is required", true);
  return e.videos.front();
}

std::vector<FlowField> load_flows(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw InputError("flow directory does not exist: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".flo") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no .flo files in " + dir.string());
  std::vector<FlowField> flows;
  for (const auto& p : files) flows.push_back(read_flo(p));
  return flows;
}

int cmd_flow(const config::Config& c) {
  begin(c, "flow");
  const auto e = experiment(c);
  const auto pv = exp::prepare_video(single_video(e), 0, e);
  const fs::path dir = out_dir(c) / "flow";
  std::string csv = "frame_idx,mean_u,mean_v,mean_magnitude\n";
  run_stage("output", "-", [&] {
    fs::create_directories(dir);
    for (std::size_t t = 0; t < pv.flows.size(); ++t) {
      const FlowField& f = pv.flows[t];
      char name[32];
      std::snprintf(name, sizeof name, "flow_%04zu.flo", t);
      write_flo(dir / name, f);
      double su = 0, sv = 0, sm = 0;
      for (std::size_t k = 0; k < f.u.size(); ++k) {
        su += f.u[k];
        sv += f.v[k];
        sm += std::hypot(f.u[k], f.v[k]);
      }
      const double n = static_cast<double>(f.u.size());
      csv += std::to_string(t) + "," + format_number(su / n) + "," + format_number(sv / n) + "," +
             format_number(sm / n) + "\n";
    }
  });
  write_out(c, "flow_stats.csv", csv);
  return 0;
}

int cmd_extract(const config::Config& c) {
  begin(c, "extract");
  const auto e = experiment(c);
  std::vector<FlowField> flows;
  if (c.has("io.flows")) {
    run_stage("load", "-", [&] { flows = load_flows(c.str("io.flows", "")); });
  } else {
    flows = exp::prepare_video(single_video(e), 0, e).flows;
  }
  semantic::ExtractorParams xp = e.extractor;
  xp.mask_ratio = e.rhos.front();
  semantic::SelectionResult sel;
  std::vector<semantic::FrameExtraction> trace;
  run_stage("extract", "-", [&] { sel = semantic::extract(flows, xp, derive_seed(e.seed, "extract", 0), &trace); });
  std::string csv = "frame_idx,patches,important,selected,l_th,background_inliers\n";
  for (int t = 0; t < sel.frames; ++t) {
    const auto& tr = trace[static_cast<std::size_t>(t)];
    csv += std::to_string(t) + "," + std::to_string(sel.rows * sel.cols) + "," + std::to_string(tr.classes.sr.size()) +
           "," + std::to_string(sel.selected_in_frame(t)) + "," + format_number(tr.l_th) + "," +
           std::to_string(tr.background.inlier_count) + "\n";
  }
  run_stage("output", "-", [&] { semantic::write_selection(out_dir(c) / "selection.ofsr", sel); });
  write_out(c, "extract.csv", csv);
  return 0;
}

int cmd_load(const config::Config& c) {
  begin(c, "load");
  load::LoadParams p;
  std::vector<double> rhos;
  run_stage("config", "-", [&] {
    p = exp::load_params_from_config(c);
    rhos = c.reals("sweep.rho", {0.0});
  });
  std::string csv = load::load_csv_header() + "\n";
  run_stage("load_model", "-", [&] {
    for (double r : rhos) {
      p.rho = r;
      csv += load::load_csv_row(p, load::total_load(p)) + "\n";
    }
  });
  write_out(c, "load.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_transmit(const config::Config& c) {
  begin(c, "transmit");
  const auto e = experiment(c);
  semantic::SelectionResult sel;
  run_stage("load", "-", [&] { sel = semantic::read_selection(c.str("io.selection", "selection.ofsr")); });
  std::string csv = "snr_db,patches,symbols\n";
  run_stage("output", "-", [&] { fs::create_directories(out_dir(c)); });
  for (std::size_t k = 0; k < e.snrs_db.size(); ++k) {
    const double snr = e.snrs_db[k];
    semantic::SelectionResult rx;
    std::size_t symbols = 0;
    run_stage("transmit", "-", [&] {
      rx = exp::transmit_selection(sel, e.codec, e.link, snr, derive_seed(e.seed, "fading", 0),
                                   derive_seed(e.seed, "noise", 0), &symbols);
    });
    csv += format_number(snr) + "," + std::to_string(sel.selected.size()) + "," + std::to_string(symbols) + "\n";
    const std::string name = e.snrs_db.size() == 1 ? "received.ofsr" : "received_snr" + format_number(snr) + ".ofsr";
    run_stage("output", "-", [&] { semantic::write_selection(out_dir(c) / name, rx); });
  }
  write_out(c, "transmit.csv", csv);
  return 0;
}

int cmd_reconstruct(const config::Config& c) {
  begin(c, "reconstruct");
  const auto e = experiment(c);
  const auto& src = single_video(e);
  Video reference;
  semantic::SelectionResult sel;
  run_stage("load", "-", [&] {
    reference = src.scene ? synth::render_scene(*src.scene) : load_ppm_sequence(src.directory);
    sel = semantic::read_selection(c.str("io.selection", "received.ofsr"));
  });
  Video rebuilt;
  run_stage("reconstruct", "-", [&] { rebuilt = recon::reconstruct_video(reference.frames.front(), sel); });
  recon::QualityReport q;
  run_stage("quality", "-", [&] { q = recon::frame_losses(reference, rebuilt); });
  run_stage("output", "-", [&] { save_ppm_sequence(out_dir(c) / "reconstructed", rebuilt); });
  write_out(c, "quality.csv",
            recon::quality_csv_header() + "\n" + recon::quality_csv_rows(src.id, sel.rho, e.snrs_db.front(), q));
  return 0;
}

int cmd_pipeline(const config::Config& c, bool sweep) {
  config::Config run = c;
  if (!sweep) {
    // A single point; every stage output is kept.
    run.set("sweep.rho", format_number(c.reals("sweep.rho", {0.0}).front()));
    run.set("sweep.snr_db", format_number(c.reals("sweep.snr_db", {std::numeric_limits<double>::infinity()}).front()));
    if (!run.has("io.persist")) run.set("io.persist", "true");
  }
  begin(run, sweep ? "sweep" : "pipeline");
  const auto e = experiment(run);
  const auto results = exp::run_pipeline(e);
  write_out(run, "summary.csv", exp::summary_csv(results));
  write_out(run, "quality.csv", exp::quality_csv(results));
  return 0;
}

int cmd_allocate(const config::Config& c) {
  begin(c, "allocate");
  exp::AllocationConfig a;
  run_stage("config", "-", [&] { a = exp::allocation_from_config(c); });
  const exp::AllocationReport r = exp::run_allocation(a);
  write_out(c, "learning_curve.csv", exp::learning_curve_csv(r));
  write_out(c, "allocation.csv", exp::allocation_csv(r));
  write_out(c, "comparison.csv", exp::comparison_csv(r));
  run_stage("output", "-", [&] { nn::save_snapshot(out_dir(c) / "actor.ofnn", r.training.agent.actor); });
  std::cout << exp::comparison_csv(r);
  return 0;
}

int cmd_synth(const config::Config& c) {
  begin(c, "synth");
  long long count = 0;
  int h = 0, w = 0, frames = 0;
  bool still = false;
  std::uint64_t seed = 0;
  run_stage("config", "-", [&] {
    count = c.integer("synth.count", 20);
    h = static_cast<int>(c.integer("synth.height", 64));
    w = static_cast<int>(c.integer("synth.width", 64));
    frames = static_cast<int>(c.integer("synth.frames", 8));
    still = c.boolean("synth.static", false);
    seed = c.u64("run.seed", 0);
    if (count < 1) throw InputError("synth.count must be >= 1");
  });
  std::string csv = "video_id,blocks,pan_x,pan_y\n";
  for (long long k = 0; k < count; ++k) {
    const std::uint64_t s = derive_seed(seed, "scene", static_cast<std::uint64_t>(k));
    const synth::SceneSpec spec = still ? synth::static_scene(s, h, w, frames) : synth::random_scene(s, h, w, frames);
    char id[32];
    std::snprintf(id, sizeof id, "video%03lld", k);
    run_stage("synth", id, [&] { save_ppm_sequence(out_dir(c) / id, synth::render_scene(spec)); });
    csv += std::string(id) + "," + std::to_string(spec.blocks.size()) + "," + format_number(spec.pan_x) + "," +
           format_number(spec.pan_y) + "\n";
  }
  write_out(c, "corpus.csv", csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optical-flow semantic video transmission simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", exp::kVersion);

  Common common;
  Flags flags;
  app.add_option("--config", common.config, "Config file (or a run manifest)");
  app.add_option("--seed", common.seed, "Run seed");
  app.add_option("--out", common.out, "Output directory");
  app.add_option("--workers", common.workers, "Concurrent sweep points");

  auto* flow = app.add_subcommand("flow", "Estimate optical flow and write .flo files");
  flow->add_option("--input", flags.input, "PPM sequence directory");
  auto* extract = app.add_subcommand("extract", "Select semantic flow patches");
  extract->add_option("--input", flags.input, "PPM sequence directory");
  extract->add_option("--flows", flags.flows, "Directory of .flo files (instead of --input)");
  extract->add_option("--rho", flags.rho, "Mask ratio");
  auto* load = app.add_subcommand("load", "Communication load for a list of mask ratios");
  load->add_option("--rho", flags.rho, "Comma-separated mask ratios");
  auto* transmit = app.add_subcommand("transmit", "Send a selection over the analog link");
  transmit->add_option("--selection", flags.selection, "Selection file");
  transmit->add_option("--snr", flags.snr, "Comma-separated SNRs in dB (inf = noiseless)");
  auto* reconstruct = app.add_subcommand("reconstruct", "Rebuild frames from a received selection");
  reconstruct->add_option("--input", flags.input, "Reference PPM sequence directory");
  reconstruct->add_option("--selection", flags.selection, "Received selection file");
  auto* pipeline = app.add_subcommand("pipeline", "One end-to-end run, keeping every stage output");
  pipeline->add_option("--input", flags.input, "Comma-separated PPM sequence directories");
  pipeline->add_option("--rho", flags.rho, "Mask ratio");
  pipeline->add_option("--snr", flags.snr, "SNR in dB");
  auto* sweep = app.add_subcommand("sweep", "All (video, rho, snr) combinations");
  sweep->add_option("--input", flags.input, "Comma-separated PPM sequence directories");
  sweep->add_option("--rho", flags.rho, "Comma-separated mask ratios");
  sweep->add_option("--snr", flags.snr, "Comma-separated SNRs in dB");
  auto* allocate = app.add_subcommand("allocate", "Train the bandwidth allocator on a scenario");
  auto* synth = app.add_subcommand("synth", "Write a synthetic PPM corpus");
  synth->add_option("--count", flags.count, "Number of videos");
  synth->add_option("--height", flags.height, "Frame height");
  synth->add_option("--width", flags.width, "Frame width");
  synth->add_option("--frames", flags.frames, "Frames per video");
  synth->add_flag("--static", flags.still, "No motion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    config::Config c;
    run_stage("config", "-", [&] { c = resolve(common, flags); });
    if (flow->parsed()) return cmd_flow(c);
    if (extract->parsed()) return cmd_extract(c);
    if (load->parsed()) return cmd_load(c);
    if (transmit->parsed()) return cmd_transmit(c);
    if (reconstruct->parsed()) return cmd_reconstruct(c);
    if (pipeline->parsed()) return cmd_pipeline(c, false);
    if (sweep->parsed()) return cmd_pipeline(c, true);
    if (allocate->parsed()) return cmd_allocate(c);
    if (synth->parsed()) return cmd_synth(c);
  } catch (const exp::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.bad_input() ? 2 : 1;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
