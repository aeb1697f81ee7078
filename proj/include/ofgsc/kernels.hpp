#pragma once

#include <vector>

#include "ofgsc/video.hpp"

// Data-parallel image kernels. Every kernel has a straightforward serial
// reference and an OpenMP row-parallel implementation; the public operations
// in the other modules call the parallel path, tests hold the two together.
namespace ofgsc::kernels {

enum class Exec { serial, parallel };

// Normalized sampled Gaussian with taps -radius..radius.
std::vector<double> gaussian_taps(double sigma, int radius);

// Gaussian blur, radius ceil(3 sigma), clamp-to-edge borders.
// serial: direct 2-D convolution; parallel: separable passes.
Image gaussian_blur(const Image& in, double sigma, Exec exec = Exec::parallel);

// out(y, x) = bilinear sample of `in` at (x + sign*u, y + sign*v); sample
// coordinates are clamped to the frame. Both paths are bitwise identical.
Image warp_bilinear(const Image& in, const FlowField& flow, double sign = 1.0, Exec exec = Exec::parallel);

// Windowed Lucas-Kanade: for each pixel, solves the 2x2 normal equations
//   sum_w [gx gx, gx gy; gx gy, gy gy] d = -sum_w [gx it; gy it]
// over a window x window box (clamped at borders). Pixels whose structure
// tensor determinant is below det_eps get d = 0.
struct LkSolution {
  Image du;
  Image dv;
};
LkSolution lk_solve(const Image& gx, const Image& gy, const Image& it, int window, double det_eps,
                    Exec exec = Exec::parallel);

// Iterative windowed Lucas-Kanade with per-pixel warping: each pixel keeps its
// own displacement d (starting from `init`) and, for `iterations` rounds,
// re-samples the whole window of `target` at x' + d against `ref`, solving the
// same normal equations with the fixed reference gradients. Windows whose
// tensor determinant is below det_eps keep `init`. Both paths are bitwise
// identical.
FlowField lk_iterate(const Image& ref, const Image& gx, const Image& gy, const Image& target, const FlowField& init,
                     int window, int iterations, double det_eps, Exec exec = Exec::parallel);

// Mean SSIM over all valid 11x11 Gaussian (sigma 1.5) windows.
// serial: direct per-window sums; parallel: separable filtering.
double ssim_windowed(const Image& a, const Image& b, Exec exec = Exec::parallel);

}  // namespace ofgsc::kernels
