#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "ofgsc/optical_flow.hpp"
#include "ofgsc/synthetic.hpp"

using namespace ofgsc;

namespace {

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

// Interior pixels, away from the border by `margin`.
std::vector<double> interior(const FlowField& f, const std::vector<float>& plane, int margin) {
  std::vector<double> out;
  for (int y = margin; y < f.height - margin; ++y)
    for (int x = margin; x < f.width - margin; ++x) out.push_back(plane[f.index(y, x)]);
  return out;
}

Video translated_pair(int h, int w, double dx, double dy, std::uint64_t seed) {
  synth::SceneSpec s;
  s.height = h;
  s.width = w;
  s.frames = 2;
  s.pan_x = dx;
  s.pan_y = dy;
  s.background_seed = seed;
  return synth::render_scene(s);
}

Image smooth_image(int h, int w, std::uint64_t seed) {
  const Frame f = translated_pair(h, w, 0, 0, seed).frames[0];
  return to_gray(f);
}

}  // namespace

TEST_CASE("build_pyramid examples") {
  const Frame f = testing::random_frame(32, 32, 1);
  SUBCASE("one level is the grayscale input") {
    const auto p = flow::build_pyramid(f, 1);
    REQUIRE(p.levels.size() == 1);
    CHECK(p.levels[0].data == to_gray(f).data);
  }
  SUBCASE("three levels halve") {
    const auto p = flow::build_pyramid(f, 3);
    REQUIRE(p.levels.size() == 3);
    CHECK(p.levels[0].height == 8);
    CHECK(p.levels[1].height == 16);
    CHECK(p.levels[2].height == 32);
    CHECK(p.levels[0].width == 8);
  }
  SUBCASE("constant frame stays constant") {
    Frame c(32, 32);
    std::fill(c.data.begin(), c.data.end(), std::uint8_t{77});
    for (const auto& level : flow::build_pyramid(c, 3).levels)
      for (double v : level.data) CHECK(v == doctest::Approx(77.0).epsilon(1e-12));
  }
  SUBCASE("too many levels") { CHECK_THROWS_AS(flow::build_pyramid(f, 4), InputError); }
  SUBCASE("odd sizes use ceil") {
    const auto p = flow::build_pyramid(testing::random_frame(37, 45, 2), 3);
    CHECK(p.levels[1].height == 19);
    CHECK(p.levels[1].width == 23);
    CHECK(p.levels[0].height == 10);
    CHECK(p.levels[0].width == 12);
  }
}

TEST_CASE("warp_bilinear examples") {
  Image ramp(4, 6);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) ramp.at(y, x) = 10.0 * x;
  SUBCASE("zero flow is the identity") { CHECK(flow::warp_bilinear(ramp, FlowField(4, 6)).data == ramp.data); }
  SUBCASE("integer shift with clamped border") {
    const Image out = flow::warp_bilinear(ramp, FlowField(4, 6, 1.0F, 0.0F));
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 5; ++x) CHECK(out.at(y, x) == 10.0 * (x + 1));
      CHECK(out.at(y, 5) == 50.0);
    }
  }
  SUBCASE("far outside samples the border") {
    const Image out = flow::warp_bilinear(ramp, FlowField(4, 6, -1000.0F, 1000.0F));
    for (double v : out.data) CHECK(v == 0.0);
  }
  SUBCASE("half-pixel shift interpolates") {
    const Image out = flow::warp_bilinear(ramp, FlowField(4, 6, 0.5F, 0.0F));
    CHECK(out.at(2, 2) == doctest::Approx(25.0));
  }
  SUBCASE("dimension mismatch") { CHECK_THROWS_AS(flow::warp_bilinear(ramp, FlowField(3, 6)), InputError); }
}

TEST_CASE("upsample_flow examples") {
  SUBCASE("constant flow doubles") {
    const FlowField up = flow::upsample_flow(FlowField(2, 2, 1.0F, 0.0F));
    CHECK(up.height == 4);
    CHECK(up.width == 4);
    for (float u : up.u) CHECK(u == 2.0F);
    for (float v : up.v) CHECK(v == 0.0F);
  }
  SUBCASE("zero stays zero") {
    const FlowField up = flow::upsample_flow(FlowField(3, 5));
    CHECK(up.height == 6);
    for (float u : up.u) CHECK(u == 0.0F);
  }
  SUBCASE("random 4x4 mean doubles") {
    const FlowField f = testing::random_flow(4, 4, 9);
    const FlowField up = flow::upsample_flow(f);
    double m0 = 0, m1 = 0;
    for (float u : f.u) m0 += u;
    for (float u : up.u) m1 += u;
    CHECK(m1 / up.u.size() == doctest::Approx(2.0 * m0 / f.u.size()).epsilon(1e-6));
  }
}

TEST_CASE("refine_level examples") {
  flow::FlowEstimatorParams p;
  const Image ref = smooth_image(32, 32, 4);
  SUBCASE("no motion") {
    const FlowField f = flow::refine_level(FlowField(32, 32), ref, ref, p);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
      CHECK(std::abs(f.u[i]) < 1e-6);
      CHECK(std::abs(f.v[i]) < 1e-6);
    }
  }
  // target(x) = ref(x - 1): content moves right by one pixel.
  const auto pair = translated_pair(32, 32, 1.0, 0.0, 4);
  const Image a = to_gray(pair.frames[0]), b = to_gray(pair.frames[1]);
  SUBCASE("one pixel shift") {
    const FlowField f = flow::refine_level(FlowField(32, 32), a, b, p);
    CHECK(median(interior(f, f.u, 4)) == doctest::Approx(1.0).epsilon(0.25));
  }
  SUBCASE("exact initial flow leaves a small residual") {
    const FlowField f = flow::refine_level(FlowField(32, 32, 1.0F, 0.0F), a, b, p);
    const auto u = interior(f, f.u, 4), v = interior(f, f.v, 4);
    std::vector<double> mag;
    for (std::size_t i = 0; i < u.size(); ++i) mag.push_back(std::hypot(u[i] - 1.0, v[i]));
    CHECK(median(mag) < 0.05);
  }
}

TEST_CASE("estimate_flow examples") {
  flow::FlowEstimatorParams p;
  SUBCASE("static pair has no motion") {
    const auto v = translated_pair(64, 64, 0, 0, 5);
    const auto flows = flow::estimate_flow(v, p);
    REQUIRE(flows.size() == 1);
    double mean = 0;
    for (std::size_t i = 0; i < flows[0].u.size(); ++i) mean += std::hypot(flows[0].u[i], flows[0].v[i]);
    CHECK(mean / flows[0].u.size() < 0.05);
  }
  SUBCASE("two pixel horizontal translation") {
    const auto v = translated_pair(64, 64, 2.0, 0.0, 6);
    const FlowField f = flow::estimate_flow(v, p)[0];
    const double mu = median(interior(f, f.u, 6));
    CHECK(mu >= 1.5);
    CHECK(mu <= 2.5);
    std::vector<double> av;
    for (double x : interior(f, f.v, 6)) av.push_back(std::abs(x));
    CHECK(median(av) < 0.5);
  }
  SUBCASE("eight frames give seven fields") {
    synth::SceneSpec s;
    s.height = s.width = 32;
    s.frames = 8;
    s.pan_x = 0.5;
    CHECK(flow::estimate_flow(synth::render_scene(s), {3, 3, 1.0, 5, 1e-6}).size() == 7);
  }
  SUBCASE("single frame is rejected") {
    Video v;
    v.frames.push_back(Frame(32, 32));
    CHECK_THROWS_AS(flow::estimate_flow(v, p), InputError);
  }
}

TEST_CASE("flow properties on synthetic translations") {
  flow::FlowEstimatorParams p;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(-4.0, 4.0);  // within 2^levels / 4 px
  for (int k = 0; k < 6; ++k) {
    const double dx = d(rng), dy = d(rng);
    const auto v = translated_pair(64, 64, dx, dy, rng());
    const FlowField f = flow::estimate_flow(v, p)[0];
    std::vector<double> epe;
    for (int y = 8; y < 56; ++y)
      for (int x = 8; x < 56; ++x) epe.push_back(std::hypot(f.u[f.index(y, x)] - dx, f.v[f.index(y, x)] - dy));
    CHECK_MESSAGE(median(epe) < 0.5, "dx=", dx, " dy=", dy);

    // Warping the second frame by the true flow brings it back onto the first.
    const Image a = to_gray(v.frames[0]), b = to_gray(v.frames[1]);
    const Image back = flow::warp_bilinear(b, FlowField(64, 64, static_cast<float>(dx), static_cast<float>(dy)));
    double warped = 0, raw = 0;
    for (int y = 8; y < 56; ++y)
      for (int x = 8; x < 56; ++x) {
        warped += std::pow(back.at(y, x) - a.at(y, x), 2);
        raw += std::pow(b.at(y, x) - a.at(y, x), 2);
      }
    CHECK(warped < raw);
  }
  // Identical pairs: near-zero flow.
  for (int k = 0; k < 3; ++k) {
    const auto v = translated_pair(64, 64, 0, 0, rng());
    const FlowField f = flow::estimate_flow(v, p)[0];
    std::vector<double> mag;
    for (std::size_t i = 0; i < f.u.size(); ++i) mag.push_back(std::hypot(f.u[i], f.v[i]));
    CHECK(median(mag) < 0.05);
  }
}

TEST_CASE("estimate_flow is deterministic") {
  const auto v = translated_pair(64, 64, 1.3, -0.7, 8);
  CHECK(flow::estimate_flow(v, {}) == flow::estimate_flow(v, {}));
}
