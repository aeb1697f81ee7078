#pragma once

#include <vector>

#include "ofgsc/video.hpp"

namespace ofgsc::flow {

struct FlowEstimatorParams {
  int levels = 4;
  int iterations_per_level = 3;
  double smoothing_sigma = 1.0;
  int lk_window = 5;
  double det_eps = 1e-6;

  void validate() const;
};

// levels[0] is the coarsest; each level halves (ceil) the one above it.
struct Pyramid {
  std::vector<Image> levels;
};

// Finest level is the integer (R+2G+B)/4 grayscale; each coarser level is a
// Gaussian blur followed by 2x decimation. Coarsest level must be >= 8x8.
Pyramid build_pyramid(const Frame& frame, int levels, double smoothing_sigma = 1.0);
Pyramid build_pyramid(const Image& gray, int levels, double smoothing_sigma = 1.0);

// Samples the level at (x + u, y + v), clamping to the border.
Image warp_bilinear(const Image& level, const FlowField& flow);

// Bilinear 2x upsample with displacements doubled.
FlowField upsample_flow(const FlowField& flow);
// Same, resampled onto an explicit target size (odd-sized pyramid levels).
FlowField upsample_flow(const FlowField& flow, int height, int width);

// prev_flow_up + iterated Lucas-Kanade residual between ref and target warped
// by the running estimate, each pixel re-warping its own window.
FlowField refine_level(const FlowField& prev_flow_up, const Image& ref, const Image& target,
                       const FlowEstimatorParams& params);

// Coarse-to-fine flow from prev to next: zero-initialized solve on the
// coarsest level, then upsample / warp / refine / sum per finer level.
FlowField estimate_pair(const Frame& prev, const Frame& next, const FlowEstimatorParams& params);

// T-1 full-resolution fields, one per adjacent frame pair.
std::vector<FlowField> estimate_flow(const Video& video, const FlowEstimatorParams& params);

}  // namespace ofgsc::flow
