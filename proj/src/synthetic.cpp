#include "ofgsc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace ofgsc::synth {

Texture Texture::random(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // Log-uniform wavelengths with amplitude growing with wavelength, roughly
  // the 1/f falloff of natural images, so every pyramid level sees structure.
  std::uniform_real_distribution<double> log_wavelength(std::log(6.0), std::log(64.0));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> jitter(0.7, 1.0);
  Texture t;
  for (auto& waves : t.waves) {
    for (int k = 0; k < 6; ++k) {
      const double wavelength = std::exp(log_wavelength(rng));
      const double f = 2.0 * std::numbers::pi / wavelength;
      const double dir = angle(rng);
      const double amp = 22.0 * jitter(rng) * std::sqrt(wavelength / 64.0);
      waves.push_back({f * std::cos(dir), f * std::sin(dir), angle(rng), amp});
    }
  }
  return t;
}

double Texture::value(double x, double y, int channel) const {
  double v = 128.0;
  for (const Wave& w : waves[channel]) v += w.amplitude * std::sin(w.fx * x + w.fy * y + w.phase);
  return v;
}

namespace {

bool inside(const MovingBlock& b, int t, double x, double y) {
  const double top = b.top + b.vy * t, left = b.left + b.vx * t;
  return y >= top && y < top + b.height && x >= left && x < left + b.width;
}

}  // namespace

Video render_scene(const SceneSpec& spec) {
  if (spec.height < 1 || spec.width < 1 || spec.frames < 2) throw InputError("synthetic scene: bad dimensions");
  const Texture bg = Texture::random(spec.background_seed);
  std::vector<Texture> block_tex;
  for (const auto& b : spec.blocks) block_tex.push_back(Texture::random(b.texture_seed));

  Video video;
  for (int t = 0; t < spec.frames; ++t) {
    Frame f(spec.height, spec.width, 3);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const Texture* tex = &bg;
        double sx = x - spec.pan_x * t, sy = y - spec.pan_y * t;
        for (std::size_t k = spec.blocks.size(); k-- > 0;) {
          const MovingBlock& b = spec.blocks[k];
          if (inside(b, t, x, y)) {
            tex = &block_tex[k];
            sx = x - b.vx * t;
            sy = y - b.vy * t;
            break;
          }
        }
        for (int c = 0; c < 3; ++c)
          f.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(tex->value(sx, sy, c)), 0L, 255L));
      }
    }
    video.frames.push_back(std::move(f));
  }
  return video;
}

std::vector<std::uint8_t> motion_patch_mask(const SceneSpec& spec, int patch_h, int patch_w) {
  const PatchGrid grid = PatchGrid::for_size(spec.height, spec.width, patch_h, patch_w);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(spec.frames - 1) * grid.count(), 0);
  for (int t = 0; t + 1 < spec.frames; ++t)
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        for (const auto& b : spec.blocks)
          if ((b.vx != 0.0 || b.vy != 0.0) && inside(b, t, x, y))
            mask[(static_cast<std::size_t>(t) * grid.rows + y / patch_h) * grid.cols + x / patch_w] = 1;
  return mask;
}

SceneSpec random_scene(std::uint64_t seed, int height, int width, int frames) {
  std::mt19937_64 rng(seed);
  SceneSpec s;
  s.height = height;
  s.width = width;
  s.frames = frames;
  s.background_seed = rng();
  if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) {
    std::uniform_real_distribution<double> pan(-0.6, 0.6);
    s.pan_x = pan(rng);
    s.pan_y = pan(rng);
  }
  const int n_blocks = std::uniform_int_distribution<int>(1, 3)(rng);
  std::uniform_int_distribution<int> size(std::max(4, height / 8), std::max(5, height / 3));
  std::uniform_real_distribution<double> vel(-2.0, 2.0);
  for (int k = 0; k < n_blocks; ++k) {
    MovingBlock b;
    b.height = size(rng);
    b.width = size(rng);
    b.top = std::uniform_int_distribution<int>(0, height - b.height)(rng);
    b.left = std::uniform_int_distribution<int>(0, width - b.width)(rng);
    b.vx = vel(rng);
    b.vy = vel(rng);
    b.texture_seed = rng();
    s.blocks.push_back(b);
  }
  return s;
}

SceneSpec static_scene(std::uint64_t seed, int height, int width, int frames) {
  SceneSpec s;
  s.height = height;
  s.width = width;
  s.frames = frames;
  s.background_seed = seed;
  return s;
}

}  // namespace ofgsc::synth
