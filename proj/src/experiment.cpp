#include "ofgsc/experiment.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "ofgsc/seed.hpp"

namespace ofgsc::exp {

using recon::format_number;

StageError::StageError(std::string stage, std::string inputs_digest, const std::string& message, bool bad_input)
    : std::runtime_error("stage " + stage + " (inputs " + inputs_digest + "): " + message),
      stage_(std::move(stage)),
      digest_(std::move(inputs_digest)),
      bad_input_(bad_input) {}

void run_stage(const std::string& stage, const std::string& inputs_digest, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const InputError& e) {
    throw StageError(stage, inputs_digest, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(stage, inputs_digest, e.what(), false);
  }
}

namespace {

std::string hex_digest(const std::string& text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

std::string point_digest(const std::string& video_id, double rho, double snr_db) {
  return hex_digest(video_id + "|" + format_number(rho) + "|" + format_number(snr_db));
}

std::string point_dir_name(const std::string& video_id, double rho, double snr_db) {
  return video_id + "_rho" + format_number(rho) + "_snr" + format_number(snr_db);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!videos.empty(), "config: no input videos");
  require(!rhos.empty() && !snrs_db.empty(), "config: sweep lists must be nonempty");
  for (double r : rhos) require(r >= 0.0 && r < 1.0, "config: rho must be in [0, 1)");
  for (double s : snrs_db) require(!std::isnan(s) && s != -std::numeric_limits<double>::infinity(), "config: bad snr_db");
  require(workers >= 1, "config: workers must be >= 1");
  flow.validate();
  extractor.validate();
  codec.validate();
  link.validate();
}

load::LoadParams load_params_from_config(const config::Config& c) {
  load::LoadParams p;
  p.frames = static_cast<int>(c.integer("load.frames", p.frames));
  p.height = static_cast<int>(c.integer("load.height", p.height));
  p.width = static_cast<int>(c.integer("load.width", p.width));
  p.channels = static_cast<int>(c.integer("load.channels", p.channels));
  p.flow_channels = static_cast<int>(c.integer("load.flow_channels", p.flow_channels));
  p.bit_depth = static_cast<int>(c.integer("load.bit_depth", p.bit_depth));
  p.patch_h = static_cast<int>(c.integer("load.patch_h", p.patch_h));
  p.patch_w = static_cast<int>(c.integer("load.patch_w", p.patch_w));
  p.color_depth = static_cast<int>(c.integer("load.color_depth", p.color_depth));
  p.rho_zip = c.real("load.rho_zip", p.rho_zip);
  p.exact_mask_frames = c.boolean("load.exact_mask_frames", p.exact_mask_frames);
  return p;
}

ExperimentConfig experiment_from_config(const config::Config& c) {
  ExperimentConfig e;
  e.seed = c.u64("run.seed", 0);
  e.out = c.str("runtime.out", "out");
  e.workers = static_cast<int>(c.integer("runtime.workers", 1));
  e.persist = c.boolean("io.persist", false);

  e.patch_h = static_cast<int>(c.integer("patch.height", 16));
  e.patch_w = static_cast<int>(c.integer("patch.width", 16));

  e.flow.levels = static_cast<int>(c.integer("flow.levels", e.flow.levels));
  e.flow.iterations_per_level = static_cast<int>(c.integer("flow.iterations", e.flow.iterations_per_level));
  e.flow.smoothing_sigma = c.real("flow.smoothing_sigma", e.flow.smoothing_sigma);
  e.flow.lk_window = static_cast<int>(c.integer("flow.lk_window", e.flow.lk_window));
  e.flow.det_eps = c.real("flow.det_eps", e.flow.det_eps);

  auto& x = e.extractor;
  x.alpha1 = c.real("extractor.alpha1", x.alpha1);
  x.alpha2 = c.real("extractor.alpha2", x.alpha2);
  x.theta_th = c.real("extractor.theta_th", x.theta_th);
  x.ransac_iters = static_cast<int>(c.integer("extractor.ransac_iters", x.ransac_iters));
  x.inlier_eps = c.real("extractor.inlier_eps", x.inlier_eps);
  x.max_redraws = static_cast<int>(c.integer("extractor.max_redraws", x.max_redraws));
  x.patch_h = e.patch_h;
  x.patch_w = e.patch_w;

  e.codec.bits_per_symbol = static_cast<int>(c.integer("codec.bits", e.codec.bits_per_symbol));
  e.codec.mag_cap = c.real("codec.mag_cap", e.codec.mag_cap);
  e.codec.gamma = c.real("codec.gamma", e.codec.gamma);

  e.link.distance_m = c.real("link.distance_m", e.link.distance_m);
  e.link.carrier_hz = c.real("link.carrier_hz", e.link.carrier_hz);
  e.link.path_loss_exp = c.real("link.path_loss_exp", e.link.path_loss_exp);
  e.link.power_w = c.real("link.power_w", e.link.power_w);
  e.link.noise_w = c.real("link.noise_w", e.link.noise_w);
  e.link.bandwidth_hz = c.real("link.bandwidth_hz", e.link.bandwidth_hz);

  e.load = load_params_from_config(c);

  e.rhos = c.reals("sweep.rho", e.rhos);
  e.snrs_db = c.reals("sweep.snr_db", e.snrs_db);

  for (const auto& dir : c.strings("input.videos", {})) {
    const std::filesystem::path p(dir);
    e.videos.push_back({p.filename().empty() ? p.parent_path().filename().string() : p.filename().string(), p, {}});
  }
  const auto n_synth = c.integer("input.synthetic", 0);
  require(n_synth >= 0, "config: input.synthetic must be >= 0");
  const int sh = static_cast<int>(c.integer("input.synthetic_height", 64));
  const int sw = static_cast<int>(c.integer("input.synthetic_width", 64));
  const int sf = static_cast<int>(c.integer("input.synthetic_frames", 8));
  const bool still = c.boolean("input.synthetic_static", false);
  const std::uint64_t corpus_seed = c.u64("input.synthetic_seed", derive_seed(e.seed, "corpus"));
  for (long long k = 0; k < n_synth; ++k) {
    const std::uint64_t s = derive_seed(corpus_seed, "scene", static_cast<std::uint64_t>(k));
    char id[32];
    std::snprintf(id, sizeof id, "synth%03lld", k);
    e.videos.push_back({id, {}, still ? synth::static_scene(s, sh, sw, sf) : synth::random_scene(s, sh, sw, sf)});
  }
  return e;
}

PreparedVideo prepare_video(const VideoSource& source, std::size_t index, const ExperimentConfig& cfg) {
  PreparedVideo out;
  out.id = source.id;
  out.index = index;
  const std::string digest = hex_digest(source.id + "|" + source.directory.string());
  run_stage("load", digest, [&] {
    if (source.scene) {
      out.video = synth::render_scene(*source.scene);
    } else {
      if (!std::filesystem::is_directory(source.directory))
        throw InputError("input path does not exist: " + source.directory.string());
      out.video = load_ppm_sequence(source.directory);
    }
    out.video.validate();
  });
  run_stage("flow", digest, [&] { out.flows = flow::estimate_flow(out.video, cfg.flow); });
  if (cfg.persist) {
    const auto dir = cfg.out / "stages" / source.id / "flow";
    std::filesystem::create_directories(dir);
    for (std::size_t t = 0; t < out.flows.size(); ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "flow_%04zu.flo", t);
      write_flo(dir / name, out.flows[t]);
    }
  }
  return out;
}

semantic::SelectionResult transmit_selection(const semantic::SelectionResult& sel, const channel::CodecParams& codec,
                                             const channel::LinkParams& link, double snr_db, std::uint64_t fading_seed,
                                             std::uint64_t noise_seed, std::size_t* symbol_count) {
  semantic::SelectionResult out = sel;
  if (symbol_count) *symbol_count = 0;
  if (sel.selected.empty()) return out;

  std::vector<FlowPatch> patches;
  patches.reserve(sel.selected.size());
  for (const auto& s : sel.selected) patches.push_back(s.patch);
  const std::vector<channel::Symbol> symbols = channel::flow_encode(patches, codec);
  if (symbol_count) *symbol_count = symbols.size();

  const channel::NormalizedSymbols tx = channel::power_normalize(symbols, codec, link.power_w);
  const channel::ChannelRealization h = channel::sample_channel(link, fading_seed);
  double sigma2 = 0.0;
  if (!std::isinf(snr_db)) {
    const double per_symbol = codec.gamma * link.power_w / static_cast<double>(symbols.size());
    sigma2 = std::norm(h.h) * per_symbol / std::pow(10.0, snr_db / 10.0);
  }
  std::vector<channel::Symbol> rx = channel::transmit_analog(tx.symbols, h, sigma2, noise_seed);
  for (auto& s : rx) s /= tx.scale;

  const std::vector<FlowPatch> decoded = channel::flow_decode(rx, codec, sel.patch_h, sel.patch_w);
  for (std::size_t k = 0; k < decoded.size(); ++k) {
    FlowPatch& p = out.selected[k].patch;
    p.payload = decoded[k].payload;
  }
  return out;
}

PointResult run_point(const PreparedVideo& pv, double rho, double snr_db, const ExperimentConfig& cfg) {
  PointResult r;
  r.video_id = pv.id;
  r.rho = rho;
  r.snr_db = snr_db;
  const std::string digest = point_digest(pv.id, rho, snr_db);

  semantic::SelectionResult sel;
  run_stage("extract", digest, [&] {
    semantic::ExtractorParams xp = cfg.extractor;
    xp.mask_ratio = rho;
    sel = semantic::extract(pv.flows, xp, derive_seed(cfg.seed, "extract", pv.index));
  });
  r.selected_patches = static_cast<int>(sel.selected.size());

  run_stage("load_model", digest, [&] {
    load::LoadParams lp = cfg.load;
    lp.frames = pv.video.size();
    lp.height = pv.video.height();
    lp.width = pv.video.width();
    lp.channels = pv.video.frames.front().channels;
    lp.patch_h = cfg.patch_h;
    lp.patch_w = cfg.patch_w;
    lp.rho = rho;
    r.load = load::total_load(lp);
  });

  semantic::SelectionResult received;
  run_stage("transmit", digest, [&] {
    received = transmit_selection(sel, cfg.codec, cfg.link, snr_db, derive_seed(cfg.seed, "fading", pv.index),
                                  derive_seed(cfg.seed, "noise", pv.index), &r.symbols);
  });

  Video rebuilt;
  run_stage("reconstruct", digest, [&] { rebuilt = recon::reconstruct_video(pv.video.frames.front(), received); });
  run_stage("quality", digest, [&] { r.quality = recon::frame_losses(pv.video, rebuilt); });

  if (cfg.persist) {
    run_stage("persist", digest, [&] {
      const auto dir = cfg.out / "stages" / pv.id / point_dir_name(pv.id, rho, snr_db);
      std::filesystem::create_directories(dir);
      semantic::write_selection(dir / "selection.ofsr", sel);
      semantic::write_selection(dir / "received.ofsr", received);
      save_ppm_sequence(dir / "reconstructed", rebuilt);
    });
  }
  return r;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<PointResult> run_pipeline(const ExperimentConfig& cfg) {
  run_stage("config", "-", [&] { cfg.validate(); });
  std::vector<PreparedVideo> videos(cfg.videos.size());
  parallel_for(videos.size(), cfg.workers, [&](std::size_t v) { videos[v] = prepare_video(cfg.videos[v], v, cfg); });

  const std::size_t per_video = cfg.rhos.size() * cfg.snrs_db.size();
  std::vector<PointResult> results(videos.size() * per_video);
  parallel_for(results.size(), cfg.workers, [&](std::size_t k) {
    const std::size_t v = k / per_video, rest = k % per_video;
    results[k] = run_point(videos[v], cfg.rhos[rest / cfg.snrs_db.size()], cfg.snrs_db[rest % cfg.snrs_db.size()], cfg);
  });
  return results;
}

std::string summary_csv(const std::vector<PointResult>& results) {
  std::string out = "video_id,rho,snr_db,mean_ssim,mean_psnr,mse,selected_patches,symbols,l_first,l_sr,l_b,l_com\n";
  for (const auto& r : results) {
    out += r.video_id + "," + format_number(r.rho) + "," + format_number(r.snr_db) + "," +
           format_number(r.quality.mean_ssim) + "," + format_number(r.quality.mean_psnr) + "," +
           format_number(r.quality.mse) + "," + std::to_string(r.selected_patches) + "," + std::to_string(r.symbols) +
           "," + format_number(r.load.l_first_frame) + "," + format_number(r.load.l_sr) + "," +
           format_number(r.load.l_b) + "," + format_number(r.load.l_com) + "\n";
  }
  return out;
}

std::string quality_csv(const std::vector<PointResult>& results) {
  std::string out = recon::quality_csv_header() + "\n";
  for (const auto& r : results) out += recon::quality_csv_rows(r.video_id, r.rho, r.snr_db, r.quality);
  return out;
}

AllocationConfig allocation_from_config(const config::Config& c) {
  AllocationConfig a;
  a.seed = c.u64("run.seed", 0);
  a.scenario.bandwidth_hz = c.real("scenario.bandwidth_hz", 1e6);

  channel::LinkParams link;
  link.carrier_hz = c.real("link.carrier_hz", link.carrier_hz);
  link.path_loss_exp = c.real("link.path_loss_exp", link.path_loss_exp);
  link.power_w = c.real("link.power_w", link.power_w);
  link.noise_w = c.real("link.noise_w", link.noise_w);
  link.bandwidth_hz = a.scenario.bandwidth_hz;

  load::LoadParams lp = load_params_from_config(c);

  const auto n = c.integer("scenario.n_ue", 0);
  require(n >= 2, "scenario: n_ue must be >= 2");
  for (long long i = 0; i < n; ++i) {
    const std::string s = "ue" + std::to_string(i) + ".";
    ddpg::UserEquipment ue;
    ue.rho = c.real(s + "rho", 0.0);
    ue.distance_m = c.real(s + "distance_m", link.distance_m);
    if (c.has(s + "load_bits")) {
      ue.load_bits = c.real(s + "load_bits", 0.0);
    } else {
      lp.rho = ue.rho;
      ue.load_bits = load::total_load(lp).l_com;
    }
    if (c.has(s + "snr")) {
      ue.snr = c.real(s + "snr", 0.0);
    } else {
      channel::LinkParams l = link;
      l.distance_m = ue.distance_m;
      ue.snr = channel::sample_channel(l, derive_seed(a.seed, "fading", static_cast<std::uint64_t>(i))).snr;
    }
    a.scenario.ues.push_back(ue);
  }
  a.scenario.validate();

  auto& h = a.hyper;
  h.actor_lr = c.real("ddpg.actor_lr", h.actor_lr);
  h.critic_lr = c.real("ddpg.critic_lr", h.critic_lr);
  h.gamma = c.real("ddpg.gamma", h.gamma);
  h.tau = c.real("ddpg.tau", h.tau);
  h.noise_sigma = c.real("ddpg.noise_sigma", h.noise_sigma);
  h.noise_floor = c.real("ddpg.noise_floor", h.noise_floor);
  h.noise_decay = c.real("ddpg.noise_decay", h.noise_decay);
  h.batch = static_cast<int>(c.integer("ddpg.batch", h.batch));
  h.buffer_capacity = static_cast<int>(c.integer("ddpg.buffer_capacity", h.buffer_capacity));
  h.episode_length = static_cast<int>(c.integer("ddpg.episode_length", h.episode_length));
  h.episodes = static_cast<int>(c.integer("ddpg.episodes", h.episodes));
  h.alpha_r = c.real("ddpg.alpha_r", h.alpha_r);
  if (c.has("ddpg.hidden")) {
    h.hidden.clear();
    for (double v : c.reals("ddpg.hidden", {})) {
      require(v >= 1 && v == std::floor(v), "ddpg.hidden: layer sizes must be positive integers");
      h.hidden.push_back(static_cast<int>(v));
    }
  }
  h.validate();
  return a;
}

AllocationReport run_allocation(const AllocationConfig& cfg) {
  AllocationReport r;
  const std::string digest = hex_digest(std::to_string(cfg.seed) + "|" + std::to_string(cfg.scenario.n()));
  run_stage("baseline", digest, [&] {
    r.oracle = ddpg::oracle_allocate(cfg.scenario);
    r.equal_split = ddpg::equal_split_baseline(cfg.scenario);
  });
  run_stage("train", digest, [&] { r.training = ddpg::train_ddpg({cfg.scenario}, cfg.hyper, derive_seed(cfg.seed, "ddpg")); });
  run_stage("evaluate", digest, [&] {
    r.greedy = ddpg::greedy_allocation(r.training.agent.actor, cfg.scenario, cfg.hyper.episode_length, cfg.hyper.alpha_r);
  });
  return r;
}

std::string learning_curve_csv(const AllocationReport& r) {
  std::string out = "episode,mean_reward,greedy_t_max\n";
  for (const auto& e : r.training.curve)
    out += std::to_string(e.episode) + "," + format_number(e.mean_reward) + "," + format_number(e.greedy_t_max) + "\n";
  return out;
}

std::string allocation_csv(const AllocationReport& r) {
  std::string out = "method,ue,fraction,bandwidth_hz,t_s\n";
  auto rows = [&](const char* method, const ddpg::Allocation& a) {
    for (std::size_t i = 0; i < a.fractions.size(); ++i)
      out += std::string(method) + "," + std::to_string(i) + "," + format_number(a.fractions[i]) + "," +
             format_number(a.bandwidth_hz[i]) + "," + format_number(a.times[i]) + "\n";
  };
  rows("ddpg", r.greedy);
  rows("oracle", r.oracle);
  rows("equal_split", r.equal_split);
  return out;
}

std::string comparison_csv(const AllocationReport& r) {
  std::string out = "method,t_max,ratio_to_oracle,reduction_vs_equal\n";
  auto row = [&](const char* method, const ddpg::Allocation& a) {
    out += std::string(method) + "," + format_number(a.t_max) + "," + format_number(a.t_max / r.oracle.t_max) + "," +
           format_number(1.0 - a.t_max / r.equal_split.t_max) + "\n";
  };
  row("ddpg", r.greedy);
  row("oracle", r.oracle);
  row("equal_split", r.equal_split);
  return out;
}

std::string run_digest(const config::Config& cfg) {
  config::Config c = strip_manifest(cfg);
  c.erase_section("runtime");
  return c.digest();
}

std::string manifest_text(const config::Config& resolved, const std::string& subcommand) {
  config::Config c = strip_manifest(resolved);
  const std::string digest = run_digest(c);
  c.set("manifest.version", kVersion);
  c.set("manifest.subcommand", subcommand);
  c.set("manifest.seed", c.str("run.seed", "0"));
  c.set("manifest.config_digest", digest);
  return c.canonical();
}

config::Config strip_manifest(config::Config cfg) {
  cfg.erase_section("manifest");
  return cfg;
}

}  // namespace ofgsc::exp
