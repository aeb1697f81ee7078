#include "ofgsc/reconstruction.hpp"

#include <algorithm>
#include <exception>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ofgsc/kernels.hpp"

namespace ofgsc::recon {

namespace {

constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);
constexpr int kWindow = 11;

Image channel_plane(const Frame& f, int c) {
  Image out(f.height, f.width);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) out.at(y, x) = f.at(y, x, c);
  return out;
}

}  // namespace

FlowField dense_flow(const semantic::SelectionResult& sel, int t, int height, int width) {
  if (t < 0 || t >= sel.frames) throw InputError("dense_flow: frame index out of range");
  const PatchGrid grid = PatchGrid::for_size(height, width, sel.patch_h, sel.patch_w);
  if (grid.rows != sel.rows || grid.cols != sel.cols) throw InputError("selection geometry does not match frame");
  std::vector<FlowPatch> patches;
  for (const auto& s : sel.selected)
    if (s.t == t) patches.push_back(s.patch);
  return assemble_patches(patches, grid, height, width);
}

Video reconstruct_video(const Frame& first_frame, const semantic::SelectionResult& sel) {
  const int h = first_frame.height, w = first_frame.width;
  const PatchGrid grid = PatchGrid::for_size(h, w, sel.patch_h, sel.patch_w);
  if (grid.rows != sel.rows || grid.cols != sel.cols) throw InputError("selection geometry does not match frame");
  Video out;
  out.frames.reserve(sel.frames + 1);
  out.frames.push_back(first_frame);
  for (int t = 0; t < sel.frames; ++t) {
    const FlowField flow = dense_flow(sel, t, h, w);
    const Frame& prev = out.frames.back();
    Frame next(h, w, prev.channels);
    for (int c = 0; c < prev.channels; ++c) {
      const Image warped = kernels::warp_bilinear(channel_plane(prev, c), flow, -1.0);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          next.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(warped.at(y, x)), 0L, 255L));
    }
    out.frames.push_back(std::move(next));
  }
  return out;
}

double ssim(const Frame& a, const Frame& b) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels)
    throw InputError("ssim: dimension mismatch");
  const Image la = to_luma(a), lb = to_luma(b);
  if (a.height < kWindow || a.width < kWindow) return ssim_global(la, lb);
  return kernels::ssim_windowed(la, lb);
}

double ssim_global(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width) throw InputError("ssim: dimension mismatch");
  const double n = static_cast<double>(a.data.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    ma += a.data[i];
    mb += b.data[i];
  }
  ma /= n;
  mb /= n;
  double va = 0, vb = 0, cov = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double da = a.data[i] - ma, db = b.data[i] - mb;
    va += da * da;
    vb += db * db;
    cov += da * db;
  }
  va /= n;
  vb /= n;
  cov /= n;
  return ((2 * ma * mb + kC1) * (2 * cov + kC2)) / ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
}

double ssim_global(const Frame& a, const Frame& b) { return ssim_global(to_luma(a), to_luma(b)); }

double mse(const Frame& a, const Frame& b) {
  if (a.data.size() != b.data.size() || a.height != b.height || a.width != b.width)
    throw InputError("mse: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

double psnr_from_mse(double m) {
  if (m <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

QualityReport frame_losses(const Video& reference, const Video& reconstructed) {
  if (reference.size() != reconstructed.size() || reference.size() == 0)
    throw InputError("frame_losses: video shape mismatch");
  QualityReport r;
  r.frames.resize(reference.size());
  std::vector<std::exception_ptr> errors(reference.size());
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < reference.size(); ++t) {
    try {
      FrameQuality& q = r.frames[t];
      q.mse = mse(reference.frames[t], reconstructed.frames[t]);
      q.psnr = psnr_from_mse(q.mse);
      q.ssim = ssim(reference.frames[t], reconstructed.frames[t]);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  double s = 0, m = 0;
  for (const auto& q : r.frames) {
    s += q.ssim;
    m += q.mse;
  }
  const double n = static_cast<double>(r.frames.size());
  r.mean_ssim = s / n;
  r.mse = m / n;  // equal-sized frames: mean of per-frame MSE = MSE over all samples
  r.mean_psnr = psnr_from_mse(r.mse);
  r.ssim_loss = 1.0 - r.mean_ssim;
  return r;
}

double motion_area_percentage(std::span<const std::uint8_t> bitmap) {
  if (bitmap.empty()) throw InputError("motion_area_percentage: empty bitmap");
  const auto set = std::count_if(bitmap.begin(), bitmap.end(), [](std::uint8_t b) { return b != 0; });
  return static_cast<double>(set) / static_cast<double>(bitmap.size());
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string quality_csv_header() { return "video_id,rho,snr_db,frame_idx,ssim,psnr,mse"; }

std::string quality_csv_rows(const std::string& video_id, double rho, double snr_db, const QualityReport& report) {
  std::string out;
  const std::string prefix = video_id + "," + format_number(rho) + "," + format_number(snr_db) + ",";
  for (std::size_t t = 0; t < report.frames.size(); ++t) {
    const auto& q = report.frames[t];
    out += prefix + std::to_string(t) + "," + format_number(q.ssim) + "," + format_number(q.psnr) + "," +
           format_number(q.mse) + "\n";
  }
  out += prefix + "mean," + format_number(report.mean_ssim) + "," + format_number(report.mean_psnr) + "," +
         format_number(report.mse) + "\n";
  return out;
}

}  // namespace ofgsc::recon
