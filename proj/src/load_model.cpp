#include "ofgsc/load_model.hpp"

#include <cstdio>

#include "ofgsc/video.hpp"

namespace ofgsc::load {

namespace {

std::string fmt_bits(const Rational& r) {
  if (r.is_integer()) return r.str();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", r.to_double());
  return buf;
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void LoadParams::validate() const {
  if (frames < 1 || height < 1 || width < 1 || channels < 1 || flow_channels < 1 || bit_depth < 1 || patch_h < 1 ||
      patch_w < 1 || color_depth < 1)
    throw InputError("load: all dimensions must be positive");
  // rho = 1 is accepted as the limit case of the formula.
  if (!(rho >= 0.0 && rho <= 1.0)) throw InputError("load: rho must be in [0, 1]");
  if (!(rho_zip >= 0.0 && rho_zip < 1.0)) throw InputError("load: rho_zip must be in [0, 1)");
}

NumericLoad numeric_load(const LoadParams& p) {
  p.validate();
  const Rational pixels = Rational(p.height) * Rational(p.width);
  const Rational first = Rational(p.bit_depth) * pixels * Rational(p.channels);
  const Rational full_sr = Rational(p.frames - 1) * Rational(p.bit_depth) * pixels * Rational(p.flow_channels);
  return {first, (Rational(1) - Rational::from_double(p.rho)) * full_sr};
}

Rational numeric_load_exact(const LoadParams& p, long long selected_patches) {
  if (selected_patches < 0) throw InputError("load: negative patch count");
  return Rational(selected_patches) * Rational(p.bit_depth) * Rational(p.patch_h) * Rational(p.patch_w) *
         Rational(p.flow_channels);
}

Rational compensation_ratio(const LoadParams& p) { return Rational(1) / Rational(p.color_depth); }

Rational mask_load(const LoadParams& p) {
  p.validate();
  const int t = p.exact_mask_frames ? p.frames - 1 : p.frames;
  return compensation_ratio(p) * Rational(p.bit_depth) * Rational(t) * Rational(p.height) * Rational(p.width) /
         (Rational(p.patch_h) * Rational(p.patch_w));
}

LoadBreakdown total_load_with_sr(const LoadParams& p, const Rational& sr_bits) {
  const NumericLoad n = numeric_load(p);
  LoadBreakdown b;
  b.exact_first_frame = n.first_frame;
  b.exact_sr = sr_bits;
  b.exact_n = n.first_frame + sr_bits;
  b.exact_b = mask_load(p);
  b.exact_com = (Rational(1) - Rational::from_double(p.rho_zip)) * b.exact_n + b.exact_b;
  b.l_first_frame = b.exact_first_frame.to_double();
  b.l_sr = b.exact_sr.to_double();
  b.l_n = b.exact_n.to_double();
  b.l_b = b.exact_b.to_double();
  b.l_com = b.exact_com.to_double();
  return b;
}

LoadBreakdown total_load(const LoadParams& p) { return total_load_with_sr(p, numeric_load(p).sr); }

std::string load_csv_header() { return "rho,rho_zip,l_first,l_sr,l_b,l_com"; }

std::string load_csv_row(const LoadParams& p, const LoadBreakdown& b) {
  return fmt_real(p.rho) + "," + fmt_real(p.rho_zip) + "," + fmt_bits(b.exact_first_frame) + "," +
         fmt_bits(b.exact_sr) + "," + fmt_bits(b.exact_b) + "," + fmt_bits(b.exact_com);
}

}  // namespace ofgsc::load
