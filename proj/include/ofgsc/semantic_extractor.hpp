#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ofgsc/video.hpp"

namespace ofgsc::semantic {

// Mean (u, v) per patch, row-major over the grid.
struct PatchFlowGrid {
  PatchGrid grid;
  std::vector<Eigen::Vector2d> mean_flow;

  const Eigen::Vector2d& at(int i, int j) const { return mean_flow[static_cast<std::size_t>(i) * grid.cols + j]; }
};

// Quadratic background flow over patch positions: p(i, j) = phi^T q(i, j),
// q = [i^2, j^2, ij, i, j, 1].
struct BackgroundModel {
  Eigen::Matrix<double, 6, 2> phi = Eigen::Matrix<double, 6, 2>::Zero();

  static Eigen::Matrix<double, 6, 1> basis(int i, int j);
  Eigen::Vector2d predict(int i, int j) const { return phi.transpose() * basis(i, j); }
};

struct ExtractorParams {
  double alpha1 = 0.5;
  double alpha2 = 1.0;
  double theta_th = 0.98;
  int ransac_iters = 64;
  double inlier_eps = 0.5;
  double mask_ratio = 0.0;
  int patch_h = 16;
  int patch_w = 16;
  int max_redraws = 100;  // per candidate, when a 6-subset is degenerate

  void validate() const;
};

// The 6-sample design matrix is (numerically) singular.
class DegenerateSample : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PatchSample {
  int i = 0;
  int j = 0;
  Eigen::Vector2d flow = Eigen::Vector2d::Zero();
};

struct RansacResult {
  BackgroundModel model;
  std::vector<char> inliers;  // per patch, row-major
  int inlier_count = 0;
  double inlier_residual = 0.0;
};

struct Classification {
  std::vector<int> sr;           // important patches (row-major index)
  std::vector<int> lsr;          // everything else
  std::vector<double> residual;  // |dx| + |dy| against the background, per patch
};

struct SelectedPatch {
  int t = 0;
  FlowPatch patch;
};

// Selected payloads plus the T' x rows x cols position mask. `selected` is
// ordered by mask index (t, i, j), which is also the serialized order.
struct SelectionResult {
  int frames = 0;
  int rows = 0;
  int cols = 0;
  int patch_h = 0;
  int patch_w = 0;
  double rho = 0.0;
  std::vector<std::uint8_t> xi;
  std::vector<SelectedPatch> selected;

  std::size_t bit_index(int t, int i, int j) const {
    return (static_cast<std::size_t>(t) * rows + i) * cols + j;
  }
  bool bit(int t, int i, int j) const { return xi[bit_index(t, i, j)] != 0; }
  int selected_in_frame(int t) const;
  bool operator==(const SelectionResult&) const;
};

// Per-frame intermediate results, kept for diagnostics and tests.
struct FrameExtraction {
  PatchFlowGrid patch_flows;
  RansacResult background;
  double l_th = 0.0;
  Classification classes;
  std::vector<int> picked;  // in pick order
};

PatchFlowGrid patch_mean_flow(const FlowField& flow, const PatchGrid& grid);

// Exact solve of the 6x6 system; throws DegenerateSample when the smallest
// singular value of the design matrix is below 1e-9 of the largest.
BackgroundModel fit_background_lsre(std::span<const PatchSample> samples);
// Least squares over >= 6 samples (consensus refit).
BackgroundModel fit_background_least_squares(std::span<const PatchSample> samples);

RansacResult ransac_background(const PatchFlowGrid& patch_flows, const ExtractorParams& params, std::uint64_t seed);

double adaptive_threshold(const PatchFlowGrid& patch_flows, const ExtractorParams& params);

// Important iff the L1 residual exceeds l_th and cos(p', prediction) is below
// theta_th. The cosine is 1 when p' is zero or the prediction is shorter than
// inlier_eps.
Classification classify_patches(const PatchFlowGrid& patch_flows, const BackgroundModel& model, double l_th,
                                const ExtractorParams& params);

// round-half-away-from-zero of (1 - rho) * total.
int selection_count(int total, double rho);

// Important patches by descending residual, then the rest in the same order.
std::vector<int> pick_patches(const Classification& classes, int total, double rho);

// One-frame selection (frames = 1, t = 0).
SelectionResult select_patches(const Classification& classes, const std::vector<FlowPatch>& flow_patches,
                               const PatchGrid& grid, double rho);

FrameExtraction extract_frame(const FlowField& flow, const ExtractorParams& params, std::uint64_t seed);

// Per-frame RANSAC seeds are seed ^ t.
SelectionResult extract(std::span<const FlowField> flows, const ExtractorParams& params, std::uint64_t seed,
                        std::vector<FrameExtraction>* trace = nullptr);

// Little-endian: "OFSR", u32 T', rows, cols, H', W', f64 rho, LSB-first
// bitmap, then 2*H'*W' f32 per selected patch in mask order.
std::string serialize_selection(const SelectionResult& sel);
SelectionResult parse_selection(const std::string& bytes);
void write_selection(const std::filesystem::path& path, const SelectionResult& sel);
SelectionResult read_selection(const std::filesystem::path& path);

}  // namespace ofgsc::semantic
