#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <sys/wait.h>

#include "helpers.hpp"
#include "ofgsc/config.hpp"
#include "ofgsc/experiment.hpp"
#include "ofgsc/seed.hpp"

using namespace ofgsc;
using testing::TempDir;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

exp::ExperimentConfig synthetic_config(int count, bool still) {
  config::Config c;
  c.set("run.seed", "11");
  c.set("input.synthetic", std::to_string(count));
  c.set("input.synthetic_static", still ? "true" : "false");
  c.set("patch.height", "8");
  c.set("patch.width", "8");
  return exp::experiment_from_config(c);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + OFGSC_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = config::Config::parse("[sweep]\nrho = 0, 0.5 ,0.9\nsnr_db = inf, -3\n[run]\nseed = 42\nflag = yes\n");
  CHECK(c.reals("sweep.rho", {}) == std::vector<double>{0.0, 0.5, 0.9});
  const auto snr = c.reals("sweep.snr_db", {});
  CHECK(std::isinf(snr[0]));
  CHECK(snr[1] == -3.0);
  CHECK(c.u64("run.seed", 0) == 42);
  CHECK(c.boolean("run.flag", false));
  CHECK(c.integer("run.missing", 7) == 7);
  CHECK_THROWS_AS(c.integer("sweep.rho", 0), InputError);
  CHECK_THROWS_AS(config::Config::parse("[run]\nseed = -1\n").u64("run.seed", 0), InputError);
  CHECK_THROWS_AS(config::Config::parse("x = 1\n[a]\ny = 2\n"), InputError);
  CHECK_THROWS_AS(config::parse_real("nan", "x"), InputError);
  CHECK_THROWS_AS(config::Config::load("/nonexistent/ofgsc.ini"), InputError);
}

TEST_CASE("canonical text is order independent and round-trips") {
  const auto a = config::Config::parse("[b]\ny = 2\nx = 1\n[a]\nz = 3\n");
  const auto b = config::Config::parse("[a]\nz = 3\n[b]\nx = 1\ny = 2\n");
  CHECK(a.canonical() == b.canonical());
  CHECK(a.digest() == b.digest());
  CHECK(config::Config::parse(a.canonical()).canonical() == a.canonical());
  auto c = a;
  c.set("b.x", "5");
  CHECK(c.digest() != a.digest());
}

TEST_CASE("run digest ignores runtime settings and manifests") {
  auto c = config::Config::parse("[run]\nseed = 3\n[sweep]\nrho = 0.5\n");
  const std::string d = exp::run_digest(c);
  c.set("runtime.out", "/tmp/elsewhere");
  c.set("runtime.workers", "8");
  CHECK(exp::run_digest(c) == d);
  const auto m = config::Config::parse(exp::manifest_text(c, "sweep"));
  CHECK(m.str("manifest.subcommand", "") == "sweep");
  CHECK(m.str("manifest.config_digest", "") == d);
  CHECK(m.str("manifest.seed", "") == "3");
  CHECK(exp::run_digest(m) == d);
  c.set("run.seed", "4");
  CHECK(exp::run_digest(c) != d);
}

TEST_CASE("experiment config validation") {
  auto e = synthetic_config(1, false);
  CHECK_NOTHROW(e.validate());
  e.rhos = {1.0};
  CHECK_THROWS_AS(e.validate(), InputError);
  e.rhos = {0.5};
  e.snrs_db = {-kInf};
  CHECK_THROWS_AS(e.validate(), InputError);
  e.snrs_db = {kInf};
  e.workers = 0;
  CHECK_THROWS_AS(e.validate(), InputError);
  e.workers = 1;
  e.videos.clear();
  CHECK_THROWS_AS(e.validate(), InputError);
}

TEST_CASE("missing input fails in the load stage as bad input") {
  exp::ExperimentConfig e;
  e.videos.push_back({"ghost", "/nonexistent/video", {}});
  try {
    exp::run_pipeline(e);
    FAIL("expected a StageError");
  } catch (const exp::StageError& err) {
    CHECK(err.stage() == "load");
    CHECK(err.bad_input());
    CHECK(err.inputs_digest().size() == 16);
  }
}

TEST_CASE("run_stage tags failures") {
  try {
    exp::run_stage("flow", "abc", [] { throw std::runtime_error("boom"); });
    FAIL("expected a StageError");
  } catch (const exp::StageError& err) {
    CHECK(err.stage() == "flow");
    CHECK_FALSE(err.bad_input());
    CHECK(std::string(err.what()).find("boom") != std::string::npos);
  }
}

TEST_CASE("parallel_for covers every index and rethrows the first failure") {
  std::vector<int> hits(50, 0);
  exp::parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  try {
    exp::parallel_for(20, 3, [](std::size_t i) {
      if (i == 7 || i == 15) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected a failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "7");
  }
}

TEST_CASE("rho 0 noiseless pipeline equals local encode and decode") {
  const auto e = synthetic_config(2, false);
  const auto pv = exp::prepare_video(e.videos[1], 1, e);
  const auto r = exp::run_point(pv, 0.0, kInf, e);

  semantic::ExtractorParams xp = e.extractor;
  const auto sel = semantic::extract(pv.flows, xp, derive_seed(e.seed, "extract", 1));
  std::vector<FlowPatch> patches;
  for (const auto& s : sel.selected) patches.push_back(s.patch);
  const auto decoded = channel::flow_decode(channel::flow_encode(patches, e.codec), e.codec, sel.patch_h, sel.patch_w);
  auto local = sel;
  for (std::size_t k = 0; k < decoded.size(); ++k) local.selected[k].patch.payload = decoded[k].payload;
  const auto q = recon::frame_losses(pv.video, recon::reconstruct_video(pv.video.frames.front(), local));

  CHECK(r.selected_patches == static_cast<int>(sel.selected.size()));
  CHECK(r.quality.mean_ssim == doctest::Approx(q.mean_ssim).epsilon(1e-9));
  CHECK(r.quality.mse == doctest::Approx(q.mse).epsilon(1e-9));
}

TEST_CASE("static video at rho 0 with a 12-bit codec is near lossless") {
  auto e = synthetic_config(1, true);
  e.codec.bits_per_symbol = 12;
  const auto results = exp::run_pipeline(e);
  REQUIRE(results.size() == 1);
  CHECK(results[0].quality.mean_ssim > 0.999);
}

TEST_CASE("sweep rows, ordering and worker independence") {
  auto e = synthetic_config(3, false);
  e.rhos = {0.0, 0.3, 0.6, 0.9};
  e.snrs_db = {kInf, 5.0};
  const auto serial = exp::run_pipeline(e);
  REQUIRE(serial.size() == 3 * 4 * 2);
  for (std::size_t k = 0; k < serial.size(); ++k) {
    CHECK(serial[k].video_id == e.videos[k / 8].id);
    CHECK(serial[k].rho == e.rhos[(k % 8) / 2]);
    CHECK(serial[k].snr_db == e.snrs_db[k % 2]);
  }
  e.workers = 3;
  CHECK(exp::summary_csv(exp::run_pipeline(e)) == exp::summary_csv(serial));
  CHECK(exp::quality_csv(serial).rfind(recon::quality_csv_header() + "\n", 0) == 0);
  // Fewer selected patches as rho grows, and the load follows.
  for (std::size_t v = 0; v < 3; ++v)
    for (std::size_t i = 1; i < 4; ++i) {
      CHECK(serial[v * 8 + 2 * i].selected_patches <= serial[v * 8 + 2 * (i - 1)].selected_patches);
      CHECK(serial[v * 8 + 2 * i].load.exact_com <= serial[v * 8 + 2 * (i - 1)].load.exact_com);
    }
}

TEST_CASE("allocation from config") {
  const auto c = config::Config::parse(
      "[run]\nseed = 2\n[scenario]\nn_ue = 2\nbandwidth_hz = 3e6\n"
      "[ue0]\nload_bits = 2e6\nsnr = 1\n[ue1]\nload_bits = 1e6\nsnr = 1\n[ddpg]\nepisodes = 3\nhidden = 8, 8\n");
  const auto a = exp::allocation_from_config(c);
  CHECK(a.scenario.n() == 2);
  CHECK(a.hyper.hidden == std::vector<int>{8, 8});
  const auto r = exp::run_allocation(a);
  CHECK(r.oracle.t_max == doctest::Approx(1.0));
  CHECK(r.training.curve.size() == 3);
  const std::string cmp = exp::comparison_csv(r);
  CHECK(cmp.rfind("method,t_max,ratio_to_oracle,reduction_vs_equal\n", 0) == 0);
  CHECK(cmp.find("oracle,1,1,0.25\n") != std::string::npos);
  CHECK(cmp.find("equal_split,1.33333") != std::string::npos);
  CHECK_THROWS_AS(exp::allocation_from_config(config::Config::parse("[scenario]\nn_ue = 1\n")), InputError);
}

TEST_CASE("CLI exit codes and outputs") {
  TempDir dir("cli");
  const std::string out = (dir / "out").string();
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("sweep --input /nonexistent/video --out " + out) == 2);
  CHECK(run_cli("load --rho 1.5 --out " + out) == 2);
  CHECK(run_cli("--config /nonexistent.ini load --out " + out) == 2);
  CHECK(run_cli("frobnicate") == 2);

  REQUIRE(run_cli("load --rho 0,0.5 --out " + out) == 0);
  const std::string load_csv = slurp(dir / "out" / "load.csv");
  CHECK(load_csv.rfind("rho,rho_zip,l_first,l_sr,l_b,l_com\n0,0,1204224,5619712,1568,", 0) == 0);
  CHECK(std::filesystem::exists(dir / "out" / "manifest.ini"));

  REQUIRE(run_cli("synth --count 2 --height 64 --width 64 --frames 3 --seed 4 --out " + (dir / "corpus").string()) == 0);
  const std::string input = (dir / "corpus" / "video000").string();
  REQUIRE(run_cli("extract --input " + input + " --rho 0.5 --out " + (dir / "x").string()) == 0);
  REQUIRE(run_cli("transmit --selection " + (dir / "x" / "selection.ofsr").string() + " --snr 20 --out " +
                  (dir / "t").string()) == 0);
  REQUIRE(run_cli("reconstruct --input " + input + " --selection " + (dir / "t" / "received.ofsr").string() +
                  " --out " + (dir / "r").string()) == 0);
  CHECK(slurp(dir / "r" / "quality.csv").rfind(recon::quality_csv_header() + "\n", 0) == 0);
  CHECK(std::filesystem::exists(dir / "r" / "reconstructed"));
}
