#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ofgsc/semantic_extractor.hpp"
#include "ofgsc/video.hpp"

namespace ofgsc::recon {

struct FrameQuality {
  double ssim = 1.0;
  double psnr = 0.0;  // +inf for identical frames
  double mse = 0.0;
};

struct QualityReport {
  std::vector<FrameQuality> frames;
  double mean_ssim = 1.0;  // the objective being maximized
  double mean_psnr = 0.0;  // PSNR of the pooled MSE; finite unless every frame is exact
  double mse = 0.0;        // over all T*H*W*C samples
  double ssim_loss = 0.0;  // 1 - mean_ssim
  double map = 0.0;        // motion area percentage, when known
};

// Dense flow for flow frame t: selected patches carry their payload, masked
// patches carry zero flow.
FlowField dense_flow(const semantic::SelectionResult& sel, int t, int height, int width);

// V~_0 = first_frame; V~_t(x, y) = bilinear V~_{t-1} at (x, y) - flow_t(x, y),
// border-clamped, rounded and clipped to [0, 255].
Video reconstruct_video(const Frame& first_frame, const semantic::SelectionResult& sel);

// Windowed SSIM on BT.601 luma (11x11 Gaussian, sigma 1.5, K1 0.01, K2 0.03,
// L 255). Frames smaller than the window fall back to the global variant.
double ssim(const Frame& a, const Frame& b);
// Single window covering the whole frame.
double ssim_global(const Image& a, const Image& b);
double ssim_global(const Frame& a, const Frame& b);

double mse(const Frame& a, const Frame& b);
double psnr_from_mse(double mse);

QualityReport frame_losses(const Video& reference, const Video& reconstructed);

double motion_area_percentage(std::span<const std::uint8_t> bitmap);

// video_id,rho,snr_db,frame_idx,ssim,psnr,mse ; the summary row has frame_idx "mean".
std::string quality_csv_header();
std::string quality_csv_rows(const std::string& video_id, double rho, double snr_db, const QualityReport& report);

std::string format_number(double v);

}  // namespace ofgsc::recon
