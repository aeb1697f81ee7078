#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "ofgsc/optical_flow.hpp"
#include "ofgsc/reconstruction.hpp"
#include "ofgsc/synthetic.hpp"
#include "oracles.hpp"

using namespace ofgsc;
using namespace ofgsc::recon;

namespace {

// Selection that carries the given flows unmasked.
semantic::SelectionResult full_selection(const std::vector<FlowField>& flows, int ph, int pw) {
  semantic::ExtractorParams p;
  p.patch_h = ph;
  p.patch_w = pw;
  p.mask_ratio = 0.0;
  return semantic::extract(flows, p, 1);
}

Frame constant_frame(int h, int w, std::uint8_t v) {
  Frame f(h, w);
  std::fill(f.data.begin(), f.data.end(), v);
  return f;
}

// Block scene with a grid-aligned block of rows x cols 16x16 patches moving 3 px right.
synth::SceneSpec block_scene(int rows, int cols, std::uint64_t seed) {
  synth::SceneSpec s;
  s.height = s.width = 160;
  s.frames = 2;
  s.background_seed = seed;
  s.blocks.push_back({48, 32, 16 * rows, 16 * cols, 3.0, 0.0, seed + 1});
  return s;
}

// MSE over the pixels of frame 1 that lie in ground-truth motion patches.
double motion_region_mse(const Video& ref, const Video& rec, const std::vector<std::uint8_t>& mask) {
  double s = 0;
  long n = 0;
  const Frame &a = ref.frames[1], &b = rec.frames[1];
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      if (!mask[static_cast<std::size_t>(y / 16) * 10 + x / 16]) continue;
      for (int c = 0; c < 3; ++c, ++n) s += std::pow(double(a.at(y, x, c)) - b.at(y, x, c), 2);
    }
  return s / static_cast<double>(n);
}

}  // namespace

TEST_CASE("dense_flow zero-fills masked patches") {
  const FlowField f = testing::random_flow(32, 32, 3);
  semantic::ExtractorParams p;
  p.patch_h = p.patch_w = 8;
  p.mask_ratio = 0.5;
  const std::vector<FlowField> flows = {f};
  const auto sel = semantic::extract(flows, p, 2);
  const FlowField d = dense_flow(sel, 0, 32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool on = sel.bit(0, y / 8, x / 8);
      CHECK(d.u[d.index(y, x)] == (on ? f.u[f.index(y, x)] : 0.0F));
      CHECK(d.v[d.index(y, x)] == (on ? f.v[f.index(y, x)] : 0.0F));
    }
}

TEST_CASE("reconstruct_video examples") {
  SUBCASE("static video with true flow is exact") {
    const Video v = synth::render_scene(synth::static_scene(4, 48, 48, 5));
    const Video r = reconstruct_video(v.frames[0], full_selection(std::vector<FlowField>(4, FlowField(48, 48)), 16, 16));
    REQUIRE(r.size() == 5);
    for (const auto& f : r.frames) CHECK(f == v.frames[0]);
    CHECK(frame_losses(v, r).mean_ssim == 1.0);
  }
  SUBCASE("integer translation with true flow") {
    synth::SceneSpec s;
    s.height = s.width = 64;
    s.frames = 4;
    s.pan_x = 2.0;
    s.background_seed = 9;
    const Video v = synth::render_scene(s);
    const Video r = reconstruct_video(v.frames[0], full_selection(std::vector<FlowField>(3, FlowField(64, 64, 2.0F, 0.0F)), 16, 16));
    for (int t = 1; t < 4; ++t)
      for (int y = 0; y < 64; ++y)
        for (int x = 2 * t; x < 64; ++x)
          for (int c = 0; c < 3; ++c) CHECK(r.frames[t].at(y, x, c) == v.frames[t].at(y, x, c));
    CHECK(frame_losses(v, r).mean_ssim > 0.95);
  }
  SUBCASE("heavy masking on a high-motion video loses quality") {
    synth::SceneSpec s = synth::random_scene(5, 64, 64, 6);
    s.blocks.push_back({8, 8, 40, 40, 2.0, -1.5, 77});
    const Video v = synth::render_scene(s);
    const auto flows = flow::estimate_flow(v, {});
    semantic::ExtractorParams p;
    p.patch_h = p.patch_w = 8;
    p.mask_ratio = 0.0;
    const double full = frame_losses(v, reconstruct_video(v.frames[0], semantic::extract(flows, p, 3))).mean_ssim;
    p.mask_ratio = 0.99;
    const double masked = frame_losses(v, reconstruct_video(v.frames[0], semantic::extract(flows, p, 3))).mean_ssim;
    CHECK(masked < full);
  }
  SUBCASE("geometry mismatch") {
    const auto sel = full_selection({FlowField(64, 64)}, 16, 16);
    CHECK_THROWS_AS(reconstruct_video(Frame(48, 64), sel), InputError);
  }
}

TEST_CASE("ssim examples") {
  const Frame a = testing::random_frame(32, 40, 1);
  CHECK(ssim(a, a) == 1.0);
  const double c1 = std::pow(0.01 * 255, 2);
  CHECK(ssim_global(constant_frame(16, 16, 100), constant_frame(16, 16, 120)) ==
        doctest::Approx((2.0 * 100 * 120 + c1) / (100.0 * 100 + 120.0 * 120 + c1)).epsilon(1e-12));
  CHECK_THROWS_AS(ssim(a, testing::random_frame(32, 41, 2)), InputError);
  // Frames smaller than the window use the global statistics.
  const Frame s1 = testing::random_frame(8, 8, 3), s2 = testing::random_frame(8, 8, 4);
  CHECK(ssim(s1, s2) == ssim_global(s1, s2));
}

TEST_CASE("ssim is symmetric and matches the oracle on luma (property)") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 10; ++k) {
    const Frame a = testing::random_frame(24, 30, rng()), b = testing::random_frame(24, 30, rng());
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    CHECK(std::abs(ssim(a, b) - oracle::brute_force_ssim(to_luma(a), to_luma(b))) < 1e-9);
  }
}

TEST_CASE("frame_losses examples") {
  Video a, b;
  for (int t = 0; t < 3; ++t) a.frames.push_back(testing::random_frame(20, 20, t));
  SUBCASE("identical") {
    const auto q = frame_losses(a, a);
    CHECK(q.mse == 0.0);
    CHECK(q.ssim_loss == 0.0);
    CHECK(std::isinf(q.mean_psnr));
  }
  SUBCASE("unit offset") {
    for (auto f : a.frames) {
      for (auto& s : f.data) s = static_cast<std::uint8_t>(std::min(254, int(s)));
      b.frames.push_back(f);
    }
    Video c = b;
    for (auto& f : c.frames)
      for (auto& s : f.data) s = static_cast<std::uint8_t>(s + 1);
    const auto q = frame_losses(b, c);
    CHECK(q.mse == doctest::Approx(1.0));
    CHECK(q.mean_psnr == doctest::Approx(10.0 * std::log10(255.0 * 255.0)));
  }
  SUBCASE("random pair vs scalar recomputation") {
    for (int t = 0; t < 3; ++t) b.frames.push_back(testing::random_frame(20, 20, 100 + t));
    const auto q = frame_losses(a, b);
    double total = 0;
    for (int t = 0; t < 3; ++t) {
      double s = 0;
      for (std::size_t k = 0; k < a.frames[t].data.size(); ++k)
        s += std::pow(double(a.frames[t].data[k]) - b.frames[t].data[k], 2);
      CHECK(q.frames[t].mse == doctest::Approx(s / a.frames[t].data.size()).epsilon(1e-12));
      CHECK(q.frames[t].ssim == doctest::Approx(ssim(a.frames[t], b.frames[t])).epsilon(1e-12));
      total += s;
    }
    CHECK(std::abs(q.mse - total / (3.0 * 20 * 20 * 3)) < 1e-9);
    CHECK(q.ssim_loss == doctest::Approx(1.0 - q.mean_ssim));
  }
  SUBCASE("shape mismatch") {
    b.frames = {a.frames[0], a.frames[1]};
    CHECK_THROWS_AS(frame_losses(a, b), InputError);
  }
}

TEST_CASE("motion_area_percentage examples") {
  CHECK(motion_area_percentage(std::vector<std::uint8_t>(196, 0)) == 0.0);
  std::vector<std::uint8_t> m(196, 0);
  std::fill(m.begin(), m.begin() + 49, 1);
  CHECK(motion_area_percentage(m) == 0.25);
  CHECK(motion_area_percentage(std::vector<std::uint8_t>(196, 1)) == 1.0);
}

TEST_CASE("MAP threshold: enough budget selects every motion patch (property)") {
  for (auto [rows, cols] : {std::pair{1, 5}, std::pair{2, 5}, std::pair{3, 4}}) {
    for (std::uint64_t seed : {11ULL, 23ULL}) {
      const auto spec = block_scene(rows, cols, seed);
      const Video v = synth::render_scene(spec);
      const auto truth = synth::motion_patch_mask(spec, 16, 16);
      const double map = motion_area_percentage(truth);
      const auto flows = flow::estimate_flow(v, {});
      semantic::ExtractorParams p;
      p.mask_ratio = 1.0 - map;  // 1 - rho == MAP
      const auto sel = semantic::extract(flows, p, seed);
      for (std::size_t k = 0; k < truth.size(); ++k)
        if (truth[k]) CHECK_MESSAGE(sel.xi[k] == 1, "block ", rows, "x", cols, " patch ", k);
      const double kept = motion_region_mse(v, reconstruct_video(v.frames[0], sel), truth);

      p.mask_ratio = 1.0 - map + 0.02;  // two motion patches short
      const auto starved = semantic::extract(flows, p, seed);
      const double lost = motion_region_mse(v, reconstruct_video(v.frames[0], starved), truth);
      CHECK_MESSAGE(kept < lost, "block ", rows, "x", cols, " kept ", kept, " lost ", lost);
    }
  }
}

TEST_CASE("quality csv") {
  QualityReport q;
  q.frames = {{1.0, std::numeric_limits<double>::infinity(), 0.0}, {0.5, 20.0, 650.25}};
  q.mean_ssim = 0.75;
  q.mean_psnr = 23.0;
  q.mse = 325.125;
  CHECK(quality_csv_header() == "video_id,rho,snr_db,frame_idx,ssim,psnr,mse");
  const std::string rows = quality_csv_rows("v", 0.5, std::numeric_limits<double>::infinity(), q);
  CHECK(rows.find("v,0.5,inf,0,1,inf,0\n") == 0);
  CHECK(rows.find("v,0.5,inf,mean,0.75,23,325.125\n") != std::string::npos);
}
