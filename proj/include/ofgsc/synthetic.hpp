#pragma once

#include <cstdint>
#include <vector>

#include "ofgsc/video.hpp"

namespace ofgsc::synth {

// Smooth band-limited RGB texture defined on the continuous plane, so
// sub-pixel translations are exact.
struct Texture {
  struct Wave {
    double fx, fy, phase, amplitude;
  };
  std::vector<Wave> waves[3];

  static Texture random(std::uint64_t seed);
  double value(double x, double y, int channel) const;
};

struct MovingBlock {
  int top = 0;
  int left = 0;
  int height = 16;
  int width = 16;
  double vx = 0.0;  // px per frame
  double vy = 0.0;
  std::uint64_t texture_seed = 1;
};

struct SceneSpec {
  int height = 64;
  int width = 64;
  int frames = 8;
  double pan_x = 0.0;  // background px per frame
  double pan_y = 0.0;
  std::uint64_t background_seed = 0;
  std::vector<MovingBlock> blocks;
};

Video render_scene(const SceneSpec& spec);

// Ground-truth motion patches, (T-1) x rows x cols: a patch is set for flow
// frame t when any of its pixels lies inside a block in frame t.
std::vector<std::uint8_t> motion_patch_mask(const SceneSpec& spec, int patch_h, int patch_w);

// Textured background with an optional pan and 1-3 moving blocks.
SceneSpec random_scene(std::uint64_t seed, int height, int width, int frames);

// Static frames only.
SceneSpec static_scene(std::uint64_t seed, int height, int width, int frames);

}  // namespace ofgsc::synth
