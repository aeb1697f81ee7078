#include "ofgsc/optical_flow.hpp"

#include <algorithm>
#include <cmath>

#include "ofgsc/kernels.hpp"

namespace ofgsc::flow {

namespace {

constexpr int kMinCoarsest = 8;

// Blurred image decimated by 2; coarse pixel k is centered on fine 2k + 0.5.
Image decimate(const Image& blurred) {
  const int h = (blurred.height + 1) / 2;
  const int w = (blurred.width + 1) / 2;
  Image out(h, w);
  for (int y = 0; y < h; ++y) {
    const int y0 = 2 * y;
    const int y1 = std::min(2 * y + 1, blurred.height - 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = 2 * x;
      const int x1 = std::min(2 * x + 1, blurred.width - 1);
      out.at(y, x) = 0.25 * (blurred.at(y0, x0) + blurred.at(y0, x1) + blurred.at(y1, x0) + blurred.at(y1, x1));
    }
  }
  return out;
}

// Central differences, one-sided at the borders.
void gradients(const Image& img, Image& gx, Image& gy) {
  const int h = img.height;
  const int w = img.width;
  gx = Image(h, w);
  gy = Image(h, w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
      gx.at(y, x) = xr > xl ? (img.at(y, xr) - img.at(y, xl)) / (xr - xl) : 0.0;
      gy.at(y, x) = yd > yu ? (img.at(yd, x) - img.at(yu, x)) / (yd - yu) : 0.0;
    }
}

double sample_clamped(const std::vector<float>& plane, int h, int w, double sy, double sx) {
  sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = sx - x0, fy = sy - y0;
  auto at = [&](int y, int x) { return static_cast<double>(plane[static_cast<std::size_t>(y) * w + x]); };
  const double top = at(y0, x0) + fx * (at(y0, x1) - at(y0, x0));
  const double bot = at(y1, x0) + fx * (at(y1, x1) - at(y1, x0));
  return top + fy * (bot - top);
}

}  // namespace

void FlowEstimatorParams::validate() const {
  if (levels < 1) throw InputError("flow: levels must be >= 1");
  if (iterations_per_level < 1) throw InputError("flow: iterations_per_level must be >= 1");
  if (lk_window < 3 || lk_window % 2 == 0) throw InputError("flow: lk_window must be odd and >= 3");
  if (smoothing_sigma < 0.0) throw InputError("flow: smoothing_sigma must be >= 0");
}

Pyramid build_pyramid(const Image& gray, int levels, double smoothing_sigma) {
  if (levels < 1) throw InputError("pyramid: levels must be >= 1");
  if (levels > 1) {
    int h = gray.height, w = gray.width;
    for (int l = 1; l < levels; ++l) {
      h = (h + 1) / 2;
      w = (w + 1) / 2;
    }
    if (h < kMinCoarsest || w < kMinCoarsest) throw InputError("pyramid: too many levels for frame size");
  }
  Pyramid p;
  p.levels.resize(levels);
  p.levels[levels - 1] = gray;
  for (int l = levels - 2; l >= 0; --l)
    p.levels[l] = decimate(kernels::gaussian_blur(p.levels[l + 1], smoothing_sigma));
  return p;
}

Pyramid build_pyramid(const Frame& frame, int levels, double smoothing_sigma) {
  return build_pyramid(to_gray(frame), levels, smoothing_sigma);
}

Image warp_bilinear(const Image& level, const FlowField& flow) { return kernels::warp_bilinear(level, flow, 1.0); }

FlowField upsample_flow(const FlowField& flow, int height, int width) {
  FlowField out(height, width);
  for (int y = 0; y < height; ++y) {
    const double sy = (y + 0.5) / 2.0 - 0.5;
    for (int x = 0; x < width; ++x) {
      const double sx = (x + 0.5) / 2.0 - 0.5;
      const std::size_t k = out.index(y, x);
      out.u[k] = static_cast<float>(2.0 * sample_clamped(flow.u, flow.height, flow.width, sy, sx));
      out.v[k] = static_cast<float>(2.0 * sample_clamped(flow.v, flow.height, flow.width, sy, sx));
    }
  }
  return out;
}

FlowField upsample_flow(const FlowField& flow) { return upsample_flow(flow, 2 * flow.height, 2 * flow.width); }

FlowField refine_level(const FlowField& prev_flow_up, const Image& ref, const Image& target,
                       const FlowEstimatorParams& params) {
  if (ref.height != target.height || ref.width != target.width || prev_flow_up.height != ref.height ||
      prev_flow_up.width != ref.width)
    throw InputError("refine_level: dimension mismatch");
  Image gx, gy;
  gradients(ref, gx, gy);
  return kernels::lk_iterate(ref, gx, gy, target, prev_flow_up, params.lk_window, params.iterations_per_level,
                             params.det_eps);
}

FlowField estimate_pair(const Frame& prev, const Frame& next, const FlowEstimatorParams& params) {
  params.validate();
  const Pyramid ref = build_pyramid(prev, params.levels, params.smoothing_sigma);
  const Pyramid tgt = build_pyramid(next, params.levels, params.smoothing_sigma);
  const Image& c_ref = ref.levels.front();
  FlowField flow = refine_level(FlowField(c_ref.height, c_ref.width), c_ref, tgt.levels.front(), params);
  for (int l = 1; l < params.levels; ++l) {
    const Image& r = ref.levels[l];
    flow = refine_level(upsample_flow(flow, r.height, r.width), r, tgt.levels[l], params);
  }
  return flow;
}

std::vector<FlowField> estimate_flow(const Video& video, const FlowEstimatorParams& params) {
  video.validate();
  params.validate();
  // Surface geometry errors here; exceptions must not escape the parallel region.
  (void)build_pyramid(video.frames.front(), params.levels, params.smoothing_sigma);
  const int pairs = video.size() - 1;
  std::vector<FlowField> out(pairs);
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < pairs; ++t) out[t] = estimate_pair(video.frames[t], video.frames[t + 1], params);
  return out;
}

}  // namespace ofgsc::flow
