#include "ofgsc/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace ofgsc::kernels {

namespace {

constexpr int kSsimRadius = 5;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline double bilinear(const Image& in, double sx, double sy) {
  sx = std::clamp(sx, 0.0, static_cast<double>(in.width - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(in.height - 1));
  const int x0 = static_cast<int>(sx);
  const int y0 = static_cast<int>(sy);
  const int x1 = std::min(x0 + 1, in.width - 1);
  const int y1 = std::min(y0 + 1, in.height - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  const double top = in.at(y0, x0) + fx * (in.at(y0, x1) - in.at(y0, x0));
  const double bot = in.at(y1, x0) + fx * (in.at(y1, x1) - in.at(y1, x0));
  return top + fy * (bot - top);
}

inline double ssim_value(double mu_a, double mu_b, double saa, double sbb, double sab) {
  const double var_a = saa - mu_a * mu_a;
  const double var_b = sbb - mu_b * mu_b;
  const double cov = sab - mu_a * mu_b;
  return ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
         ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
}

// Horizontal then vertical pass, clamp borders.
Image separable(const Image& in, const std::vector<double>& taps) {
  const int r = static_cast<int>(taps.size() / 2);
  Image tmp(in.height, in.width);
  Image out(in.height, in.width);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += taps[k + r] * in.at(y, clampi(x + k, 0, in.width - 1));
      tmp.at(y, x) = s;
    }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += taps[k + r] * tmp.at(clampi(y + k, 0, in.height - 1), x);
      out.at(y, x) = s;
    }
  return out;
}

// Clamped box sum of side 2r+1, computed as horizontal then vertical running windows.
Image box_sum(const Image& in, int r) {
  Image tmp(in.height, in.width);
  Image out(in.height, in.width);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += in.at(y, clampi(x + k, 0, in.width - 1));
      tmp.at(y, x) = s;
    }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += tmp.at(clampi(y + k, 0, in.height - 1), x);
      out.at(y, x) = s;
    }
  return out;
}

inline void solve2x2(double a, double b, double c, double p, double q, double det_eps, double& du, double& dv) {
  // [a b; b c] d = -[p; q]
  const double det = a * c - b * b;
  if (det < det_eps) {
    du = 0.0;
    dv = 0.0;
    return;
  }
  du = (-c * p + b * q) / det;
  dv = (b * p - a * q) / det;
}

}  // namespace

std::vector<double> gaussian_taps(double sigma, int radius) {
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    taps[k + radius] = std::exp(-(k * k) / (2.0 * sigma * sigma));
    sum += taps[k + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

Image gaussian_blur(const Image& in, double sigma, Exec exec) {
  if (sigma <= 0.0) return in;
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  const std::vector<double> taps = gaussian_taps(sigma, r);
  if (exec == Exec::parallel) return separable(in, taps);

  Image out(in.height, in.width);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      double s = 0.0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          s += taps[dy + r] * taps[dx + r] *
               in.at(clampi(y + dy, 0, in.height - 1), clampi(x + dx, 0, in.width - 1));
      out.at(y, x) = s;
    }
  return out;
}

Image warp_bilinear(const Image& in, const FlowField& flow, double sign, Exec exec) {
  if (in.height != flow.height || in.width != flow.width) throw InputError("warp: dimension mismatch");
  Image out(in.height, in.width);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) {
        const std::size_t k = flow.index(y, x);
        out.at(y, x) = bilinear(in, x + sign * flow.u[k], y + sign * flow.v[k]);
      }
  } else {
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) {
        const std::size_t k = flow.index(y, x);
        out.at(y, x) = bilinear(in, x + sign * flow.u[k], y + sign * flow.v[k]);
      }
  }
  return out;
}

LkSolution lk_solve(const Image& gx, const Image& gy, const Image& it, int window, double det_eps, Exec exec) {
  if (gx.height != gy.height || gx.width != gy.width || gx.height != it.height || gx.width != it.width)
    throw InputError("lk_solve: dimension mismatch");
  if (window < 3 || window % 2 == 0) throw InputError("lk_solve: window must be odd and >= 3");
  const int h = gx.height;
  const int w = gx.width;
  const int r = window / 2;
  LkSolution sol{Image(h, w), Image(h, w)};

  if (exec == Exec::serial) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double a = 0, b = 0, c = 0, p = 0, q = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int yy = clampi(y + dy, 0, h - 1);
            const int xx = clampi(x + dx, 0, w - 1);
            const double ix = gx.at(yy, xx), iy = gy.at(yy, xx), t = it.at(yy, xx);
            a += ix * ix;
            b += ix * iy;
            c += iy * iy;
            p += ix * t;
            q += iy * t;
          }
        solve2x2(a, b, c, p, q, det_eps, sol.du.at(y, x), sol.dv.at(y, x));
      }
    return sol;
  }

  Image xx(h, w), xy(h, w), yy(h, w), xt(h, w), yt(h, w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double ix = gx.at(y, x), iy = gy.at(y, x), t = it.at(y, x);
      xx.at(y, x) = ix * ix;
      xy.at(y, x) = ix * iy;
      yy.at(y, x) = iy * iy;
      xt.at(y, x) = ix * t;
      yt.at(y, x) = iy * t;
    }
  const Image a = box_sum(xx, r), b = box_sum(xy, r), c = box_sum(yy, r), p = box_sum(xt, r), q = box_sum(yt, r);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      solve2x2(a.at(y, x), b.at(y, x), c.at(y, x), p.at(y, x), q.at(y, x), det_eps, sol.du.at(y, x), sol.dv.at(y, x));
  return sol;
}

namespace {

void lk_iterate_row(const Image& ref, const Image& gx, const Image& gy, const Image& target, const FlowField& init,
                    int r, int iterations, double det_eps, int y, FlowField& out) {
  const int h = ref.height;
  const int w = ref.width;
  for (int x = 0; x < w; ++x) {
    double a = 0, b = 0, c = 0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const int yy = clampi(y + dy, 0, h - 1);
        const int xx = clampi(x + dx, 0, w - 1);
        const double ix = gx.at(yy, xx), iy = gy.at(yy, xx);
        a += ix * ix;
        b += ix * iy;
        c += iy * iy;
      }
    const std::size_t k = init.index(y, x);
    double u = init.u[k], v = init.v[k];
    if (a * c - b * b >= det_eps) {
      for (int iter = 0; iter < iterations; ++iter) {
        double p = 0, q = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int yy = clampi(y + dy, 0, h - 1);
            const int xx = clampi(x + dx, 0, w - 1);
            const double t = bilinear(target, xx + u, yy + v) - ref.at(yy, xx);
            p += gx.at(yy, xx) * t;
            q += gy.at(yy, xx) * t;
          }
        double du = 0, dv = 0;
        solve2x2(a, b, c, p, q, det_eps, du, dv);
        u += du;
        v += dv;
      }
    }
    out.u[k] = static_cast<float>(u);
    out.v[k] = static_cast<float>(v);
  }
}

}  // namespace

FlowField lk_iterate(const Image& ref, const Image& gx, const Image& gy, const Image& target, const FlowField& init,
                     int window, int iterations, double det_eps, Exec exec) {
  const int h = ref.height;
  const int w = ref.width;
  for (const Image* im : {&gx, &gy, &target})
    if (im->height != h || im->width != w) throw InputError("lk_iterate: dimension mismatch");
  if (init.height != h || init.width != w) throw InputError("lk_iterate: dimension mismatch");
  if (window < 3 || window % 2 == 0) throw InputError("lk_iterate: window must be odd and >= 3");
  const int r = window / 2;
  FlowField out(h, w);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) lk_iterate_row(ref, gx, gy, target, init, r, iterations, det_eps, y, out);
  } else {
    for (int y = 0; y < h; ++y) lk_iterate_row(ref, gx, gy, target, init, r, iterations, det_eps, y, out);
  }
  return out;
}

double ssim_windowed(const Image& a, const Image& b, Exec exec) {
  if (a.height != b.height || a.width != b.width) throw InputError("ssim: dimension mismatch");
  const int win = 2 * kSsimRadius + 1;
  if (a.height < win || a.width < win) throw InputError("ssim: frame smaller than the 11x11 window");
  const std::vector<double> g = gaussian_taps(kSsimSigma, kSsimRadius);
  const int oh = a.height - win + 1;
  const int ow = a.width - win + 1;

  if (exec == Exec::serial) {
    double total = 0.0;
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int dy = 0; dy < win; ++dy)
          for (int dx = 0; dx < win; ++dx) {
            const double wgt = g[dy] * g[dx];
            const double va = a.at(y + dy, x + dx), vb = b.at(y + dy, x + dx);
            ma += wgt * va;
            mb += wgt * vb;
            saa += wgt * va * va;
            sbb += wgt * vb * vb;
            sab += wgt * va * vb;
          }
        total += ssim_value(ma, mb, saa, sbb, sab);
      }
    return total / (static_cast<double>(oh) * ow);
  }

  // Horizontal pass over valid columns for the five moments, then vertical.
  const std::size_t hs = static_cast<std::size_t>(a.height) * ow;
  std::vector<double> h_a(hs), h_b(hs), h_aa(hs), h_bb(hs), h_ab(hs);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < ow; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int k = 0; k < win; ++k) {
        const double va = a.at(y, x + k), vb = b.at(y, x + k);
        ma += g[k] * va;
        mb += g[k] * vb;
        saa += g[k] * (va * va);
        sbb += g[k] * (vb * vb);
        sab += g[k] * (va * vb);
      }
      const std::size_t i = static_cast<std::size_t>(y) * ow + x;
      h_a[i] = ma;
      h_b[i] = mb;
      h_aa[i] = saa;
      h_bb[i] = sbb;
      h_ab[i] = sab;
    }
  std::vector<double> row_sum(oh, 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < oh; ++y) {
    double acc = 0.0;
    for (int x = 0; x < ow; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int k = 0; k < win; ++k) {
        const std::size_t i = static_cast<std::size_t>(y + k) * ow + x;
        ma += g[k] * h_a[i];
        mb += g[k] * h_b[i];
        saa += g[k] * h_aa[i];
        sbb += g[k] * h_bb[i];
        sab += g[k] * h_ab[i];
      }
      acc += ssim_value(ma, mb, saa, sbb, sab);
    }
    row_sum[y] = acc;
  }
  double total = 0.0;
  for (double s : row_sum) total += s;
  return total / (static_cast<double>(oh) * ow);
}

}  // namespace ofgsc::kernels
