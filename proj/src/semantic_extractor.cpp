#include "ofgsc/semantic_extractor.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

namespace ofgsc::semantic {

namespace {

constexpr double kSingularTol = 1e-9;
constexpr double kZeroNorm = 1e-12;

Eigen::Matrix<double, Eigen::Dynamic, 6> design(std::span<const PatchSample> samples) {
  Eigen::Matrix<double, Eigen::Dynamic, 6> q(static_cast<Eigen::Index>(samples.size()), 6);
  for (std::size_t k = 0; k < samples.size(); ++k)
    q.row(static_cast<Eigen::Index>(k)) = BackgroundModel::basis(samples[k].i, samples[k].j).transpose();
  return q;
}

Eigen::Matrix<double, Eigen::Dynamic, 2> targets(std::span<const PatchSample> samples) {
  Eigen::Matrix<double, Eigen::Dynamic, 2> p(static_cast<Eigen::Index>(samples.size()), 2);
  for (std::size_t k = 0; k < samples.size(); ++k) p.row(static_cast<Eigen::Index>(k)) = samples[k].flow.transpose();
  return p;
}

struct Score {
  int count = 0;
  double residual = 0.0;
};

Score score_model(const PatchFlowGrid& pf, const BackgroundModel& m, double eps, std::vector<char>* mask) {
  Score s;
  if (mask) mask->assign(pf.mean_flow.size(), 0);
  for (int i = 0; i < pf.grid.rows; ++i)
    for (int j = 0; j < pf.grid.cols; ++j) {
      const double r = (pf.at(i, j) - m.predict(i, j)).norm();
      if (r < eps) {
        ++s.count;
        s.residual += r;
        if (mask) (*mask)[static_cast<std::size_t>(i) * pf.grid.cols + j] = 1;
      }
    }
  return s;
}

bool better(const Score& a, const Score& b) {
  return a.count > b.count || (a.count == b.count && a.residual < b.residual);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

std::uint32_t get_u32(const std::string& buf, std::size_t& pos) {
  if (pos + 4 > buf.size()) throw InputError("truncated selection file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

Eigen::Matrix<double, 6, 1> BackgroundModel::basis(int i, int j) {
  const double di = i, dj = j;
  Eigen::Matrix<double, 6, 1> q;
  q << di * di, dj * dj, di * dj, di, dj, 1.0;
  return q;
}

void ExtractorParams::validate() const {
  if (ransac_iters < 1) throw InputError("extractor: ransac_iters must be >= 1");
  if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) throw InputError("extractor: mask_ratio must be in [0, 1)");
  if (!(theta_th > -1.0 && theta_th <= 1.0)) throw InputError("extractor: theta_th must be in (-1, 1]");
  if (inlier_eps <= 0.0) throw InputError("extractor: inlier_eps must be positive");
  if (patch_h < 1 || patch_w < 1) throw InputError("extractor: patch dimensions must be positive");
}

int SelectionResult::selected_in_frame(int t) const {
  const auto first = xi.begin() + static_cast<std::ptrdiff_t>(bit_index(t, 0, 0));
  return static_cast<int>(std::count(first, first + static_cast<std::ptrdiff_t>(rows) * cols, std::uint8_t{1}));
}

bool SelectionResult::operator==(const SelectionResult& o) const {
  if (frames != o.frames || rows != o.rows || cols != o.cols || patch_h != o.patch_h || patch_w != o.patch_w ||
      rho != o.rho || xi != o.xi || selected.size() != o.selected.size())
    return false;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const auto& a = selected[k];
    const auto& b = o.selected[k];
    if (a.t != b.t || a.patch.row != b.patch.row || a.patch.col != b.patch.col || a.patch.payload != b.patch.payload)
      return false;
  }
  return true;
}

PatchFlowGrid patch_mean_flow(const FlowField& flow, const PatchGrid& grid) {
  if (PatchGrid::for_size(flow.height, flow.width, grid.patch_h, grid.patch_w) != grid)
    throw InputError("patch grid does not match flow dimensions");
  PatchFlowGrid out{grid, std::vector<Eigen::Vector2d>(grid.count(), Eigen::Vector2d::Zero())};
  for (int i = 0; i < grid.rows; ++i)
    for (int j = 0; j < grid.cols; ++j) {
      const int y0 = i * grid.patch_h, y1 = std::min(y0 + grid.patch_h, flow.height);
      const int x0 = j * grid.patch_w, x1 = std::min(x0 + grid.patch_w, flow.width);
      double su = 0.0, sv = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          su += flow.u[flow.index(y, x)];
          sv += flow.v[flow.index(y, x)];
        }
      const double n = static_cast<double>(y1 - y0) * (x1 - x0);
      out.mean_flow[static_cast<std::size_t>(i) * grid.cols + j] = Eigen::Vector2d(su / n, sv / n);
    }
  return out;
}

BackgroundModel fit_background_lsre(std::span<const PatchSample> samples) {
  if (samples.size() != 6) throw InputError("LSRE expects exactly 6 samples");
  const Eigen::Matrix<double, 6, 6> q = design(samples);
  const Eigen::Matrix<double, 6, 2> p = targets(samples);
  Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(q, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(5) > kSingularTol * sv(0))) throw DegenerateSample("degenerate sample: singular design matrix");
  BackgroundModel m;
  m.phi = svd.solve(p);
  return m;
}

BackgroundModel fit_background_least_squares(std::span<const PatchSample> samples) {
  if (samples.size() < 6) throw InputError("least squares fit needs at least 6 samples");
  const auto q = design(samples);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(5) > kSingularTol * sv(0))) throw DegenerateSample("degenerate sample: rank-deficient design matrix");
  BackgroundModel m;
  m.phi = svd.solve(targets(samples));
  return m;
}

RansacResult ransac_background(const PatchFlowGrid& pf, const ExtractorParams& params, std::uint64_t seed) {
  const int n = pf.grid.count();
  if (n < 6) throw InputError("RANSAC needs at least 6 patches");
  std::mt19937_64 rng(seed);
  std::vector<int> pool(n);
  std::array<PatchSample, 6> draw;

  bool have = false;
  BackgroundModel best;
  Score best_score;
  for (int k = 0; k < params.ransac_iters; ++k) {
    for (int attempt = 0; attempt < params.max_redraws; ++attempt) {
      // Partial Fisher-Yates for 6 distinct patches.
      std::iota(pool.begin(), pool.end(), 0);
      for (int s = 0; s < 6; ++s) {
        std::uniform_int_distribution<int> pick(s, n - 1);
        std::swap(pool[s], pool[pick(rng)]);
        const int idx = pool[s];
        draw[s] = {idx / pf.grid.cols, idx % pf.grid.cols, pf.mean_flow[idx]};
      }
      try {
        const BackgroundModel cand = fit_background_lsre(draw);
        const Score sc = score_model(pf, cand, params.inlier_eps, nullptr);
        if (!have || better(sc, best_score)) {
          best = cand;
          best_score = sc;
          have = true;
        }
        break;
      } catch (const DegenerateSample&) {
      }
    }
  }
  if (!have) throw DegenerateSample("RANSAC: every draw was degenerate");

  RansacResult out;
  out.model = best;
  Score final_score = score_model(pf, best, params.inlier_eps, &out.inliers);

  // Refit on the consensus set; keep it only if support does not shrink.
  if (final_score.count >= 6) {
    std::vector<PatchSample> consensus;
    for (int idx = 0; idx < n; ++idx)
      if (out.inliers[idx]) consensus.push_back({idx / pf.grid.cols, idx % pf.grid.cols, pf.mean_flow[idx]});
    try {
      const BackgroundModel refit = fit_background_least_squares(consensus);
      std::vector<char> mask;
      const Score sc = score_model(pf, refit, params.inlier_eps, &mask);
      if (sc.count >= final_score.count) {
        out.model = refit;
        out.inliers = std::move(mask);
        final_score = sc;
      }
    } catch (const DegenerateSample&) {
    }
  }
  out.inlier_count = final_score.count;
  out.inlier_residual = final_score.residual;
  return out;
}

double adaptive_threshold(const PatchFlowGrid& pf, const ExtractorParams& params) {
  if (pf.mean_flow.empty()) return params.alpha1;
  double sum = 0.0;
  for (const auto& p : pf.mean_flow) sum += p.norm();
  return params.alpha1 + params.alpha2 * (sum / static_cast<double>(pf.mean_flow.size()));
}

Classification classify_patches(const PatchFlowGrid& pf, const BackgroundModel& model, double l_th,
                                const ExtractorParams& params) {
  Classification c;
  c.residual.resize(pf.mean_flow.size());
  for (int i = 0; i < pf.grid.rows; ++i)
    for (int j = 0; j < pf.grid.cols; ++j) {
      const int idx = i * pf.grid.cols + j;
      const Eigen::Vector2d& p = pf.mean_flow[idx];
      const Eigen::Vector2d bg = model.predict(i, j);
      const double r = std::abs(p.x() - bg.x()) + std::abs(p.y() - bg.y());
      c.residual[idx] = r;
      // A prediction shorter than the inlier tolerance has no reliable
      // direction and counts as the zero vector.
      const double np = p.norm(), nb = bg.norm();
      const double cosine = (np < kZeroNorm || nb < params.inlier_eps) ? 1.0 : p.dot(bg) / (np * nb);
      if (r > l_th && cosine < params.theta_th)
        c.sr.push_back(idx);
      else
        c.lsr.push_back(idx);
    }
  return c;
}

int selection_count(int total, double rho) {
  return static_cast<int>(std::lround((1.0 - rho) * total));
}

std::vector<int> pick_patches(const Classification& classes, int total, double rho) {
  const int n_sel = selection_count(total, rho);
  auto by_residual = [&](int a, int b) {
    if (classes.residual[a] != classes.residual[b]) return classes.residual[a] > classes.residual[b];
    return a < b;
  };
  std::vector<int> sr = classes.sr, lsr = classes.lsr;
  std::sort(sr.begin(), sr.end(), by_residual);
  std::sort(lsr.begin(), lsr.end(), by_residual);
  std::vector<int> picked;
  picked.reserve(n_sel);
  for (int idx : sr) {
    if (static_cast<int>(picked.size()) == n_sel) break;
    picked.push_back(idx);
  }
  for (int idx : lsr) {
    if (static_cast<int>(picked.size()) == n_sel) break;
    picked.push_back(idx);
  }
  return picked;
}

SelectionResult select_patches(const Classification& classes, const std::vector<FlowPatch>& flow_patches,
                               const PatchGrid& grid, double rho) {
  if (static_cast<int>(flow_patches.size()) != grid.count()) throw InputError("select: patch count mismatch");
  SelectionResult sel;
  sel.frames = 1;
  sel.rows = grid.rows;
  sel.cols = grid.cols;
  sel.patch_h = grid.patch_h;
  sel.patch_w = grid.patch_w;
  sel.rho = rho;
  sel.xi.assign(grid.count(), 0);
  for (int idx : pick_patches(classes, grid.count(), rho)) sel.xi[idx] = 1;
  for (int idx = 0; idx < grid.count(); ++idx)
    if (sel.xi[idx]) sel.selected.push_back({0, flow_patches[idx]});
  return sel;
}

FrameExtraction extract_frame(const FlowField& flow, const ExtractorParams& params, std::uint64_t seed) {
  const PatchGrid grid = PatchGrid::for_size(flow.height, flow.width, params.patch_h, params.patch_w);
  FrameExtraction fx;
  fx.patch_flows = patch_mean_flow(flow, grid);
  fx.background = ransac_background(fx.patch_flows, params, seed);
  fx.l_th = adaptive_threshold(fx.patch_flows, params);
  fx.classes = classify_patches(fx.patch_flows, fx.background.model, fx.l_th, params);
  fx.picked = pick_patches(fx.classes, grid.count(), params.mask_ratio);
  return fx;
}

SelectionResult extract(std::span<const FlowField> flows, const ExtractorParams& params, std::uint64_t seed,
                        std::vector<FrameExtraction>* trace) {
  params.validate();
  if (flows.empty()) throw InputError("extract: no flow fields");
  const FlowField& f0 = flows.front();
  for (const auto& f : flows)
    if (f.height != f0.height || f.width != f0.width) throw InputError("extract: flow dimension mismatch");
  const PatchGrid grid = PatchGrid::for_size(f0.height, f0.width, params.patch_h, params.patch_w);

  const int frames = static_cast<int>(flows.size());
  std::vector<FrameExtraction> per_frame(frames);
  std::vector<std::exception_ptr> errors(frames);
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < frames; ++t) {
    try {
      per_frame[t] = extract_frame(flows[t], params, seed ^ static_cast<std::uint64_t>(t));
    } catch (...) {
      errors[t] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  SelectionResult sel;
  sel.frames = frames;
  sel.rows = grid.rows;
  sel.cols = grid.cols;
  sel.patch_h = grid.patch_h;
  sel.patch_w = grid.patch_w;
  sel.rho = params.mask_ratio;
  sel.xi.assign(static_cast<std::size_t>(frames) * grid.count(), 0);
  for (int t = 0; t < frames; ++t) {
    for (int idx : per_frame[t].picked) sel.xi[static_cast<std::size_t>(t) * grid.count() + idx] = 1;
    const std::vector<FlowPatch> patches = partition_patches(flows[t], grid);
    for (int idx = 0; idx < grid.count(); ++idx)
      if (sel.xi[static_cast<std::size_t>(t) * grid.count() + idx]) sel.selected.push_back({t, patches[idx]});
  }
  if (trace) *trace = std::move(per_frame);
  return sel;
}

// ---------------------------------------------------------------------------
// Binary container

std::string serialize_selection(const SelectionResult& sel) {
  std::string out = "OFSR";
  put_u32(out, static_cast<std::uint32_t>(sel.frames));
  put_u32(out, static_cast<std::uint32_t>(sel.rows));
  put_u32(out, static_cast<std::uint32_t>(sel.cols));
  put_u32(out, static_cast<std::uint32_t>(sel.patch_h));
  put_u32(out, static_cast<std::uint32_t>(sel.patch_w));
  const auto rho_bits = std::bit_cast<std::uint64_t>(sel.rho);
  put_u32(out, static_cast<std::uint32_t>(rho_bits & 0xFFFFFFFFULL));
  put_u32(out, static_cast<std::uint32_t>(rho_bits >> 32));
  std::string bitmap((sel.xi.size() + 7) / 8, '\0');
  for (std::size_t k = 0; k < sel.xi.size(); ++k)
    if (sel.xi[k]) bitmap[k / 8] = static_cast<char>(static_cast<unsigned char>(bitmap[k / 8]) | (1U << (k % 8)));
  out += bitmap;
  for (const auto& s : sel.selected)
    for (float f : s.patch.payload) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

SelectionResult parse_selection(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "OFSR") != 0) throw InputError("bad selection magic");
  std::size_t pos = 4;
  SelectionResult sel;
  sel.frames = static_cast<int>(get_u32(bytes, pos));
  sel.rows = static_cast<int>(get_u32(bytes, pos));
  sel.cols = static_cast<int>(get_u32(bytes, pos));
  sel.patch_h = static_cast<int>(get_u32(bytes, pos));
  sel.patch_w = static_cast<int>(get_u32(bytes, pos));
  const std::uint64_t lo = get_u32(bytes, pos);
  const std::uint64_t hi = get_u32(bytes, pos);
  sel.rho = std::bit_cast<double>(lo | (hi << 32));
  if (sel.frames < 1 || sel.rows < 1 || sel.cols < 1 || sel.patch_h < 1 || sel.patch_w < 1 || sel.frames > 1 << 20 ||
      sel.rows > 1 << 16 || sel.cols > 1 << 16 || sel.patch_h > 1 << 16 || sel.patch_w > 1 << 16)
    throw InputError("bad selection header");
  const std::size_t bits = static_cast<std::size_t>(sel.frames) * sel.rows * sel.cols;
  if (pos + (bits + 7) / 8 > bytes.size()) throw InputError("truncated selection bitmap");
  sel.xi.assign(bits, 0);
  for (std::size_t k = 0; k < bits; ++k)
    sel.xi[k] = (static_cast<unsigned char>(bytes[pos + k / 8]) >> (k % 8)) & 1U;
  pos += (bits + 7) / 8;
  const std::size_t plane = static_cast<std::size_t>(sel.patch_h) * sel.patch_w;
  for (int t = 0; t < sel.frames; ++t)
    for (int i = 0; i < sel.rows; ++i)
      for (int j = 0; j < sel.cols; ++j) {
        if (!sel.bit(t, i, j)) continue;
        FlowPatch p{i, j, sel.patch_h, sel.patch_w, std::vector<float>(2 * plane)};
        for (float& f : p.payload) f = std::bit_cast<float>(get_u32(bytes, pos));
        sel.selected.push_back({t, std::move(p)});
      }
  return sel;
}

void write_selection(const std::filesystem::path& path, const SelectionResult& sel) {
  write_file_atomic(path, serialize_selection(sel));
}

SelectionResult read_selection(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_selection({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

}  // namespace ofgsc::semantic
