#pragma once

#include <string>
#include <vector>

#include "ofgsc/rational.hpp"
#include "ofgsc/video.hpp"

namespace ofgsc::load {

struct LoadParams {
  int frames = 8;       // T
  int height = 224;     // H
  int width = 224;      // W
  int channels = 3;     // C
  int flow_channels = 2;  // C'
  int bit_depth = 8;    // N_b
  int patch_h = 16;     // H'
  int patch_w = 16;     // W'
  int color_depth = 8;  // D
  double rho = 0.0;
  double rho_zip = 0.0;
  // Count mask bits over the T-1 flow frames instead of T.
  bool exact_mask_frames = false;

  void validate() const;
};

// Reported in bits; the exact_* fields carry the rational values they came from.
struct LoadBreakdown {
  double l_first_frame = 0;
  double l_sr = 0;
  double l_n = 0;
  double l_b = 0;
  double l_com = 0;
  Rational exact_first_frame;
  Rational exact_sr;
  Rational exact_n;
  Rational exact_b;
  Rational exact_com;
};

struct NumericLoad {
  Rational first_frame;
  Rational sr;
};

// N_b H W C and (1 - rho)(T - 1) N_b H W C'.
NumericLoad numeric_load(const LoadParams& p);
// n N_b H' W' C' for an actual count of selected patches.
Rational numeric_load_exact(const LoadParams& p, long long selected_patches);
// 1/D, the per-sample share of one bit.
Rational compensation_ratio(const LoadParams& p);
// rho_c N_b T HW / (H'W').
Rational mask_load(const LoadParams& p);
LoadBreakdown total_load(const LoadParams& p);
// Same total with l_sr replaced by an explicit bit count.
LoadBreakdown total_load_with_sr(const LoadParams& p, const Rational& sr_bits);

std::string load_csv_header();  // rho,rho_zip,l_first,l_sr,l_b,l_com
std::string load_csv_row(const LoadParams& p, const LoadBreakdown& b);

}  // namespace ofgsc::load
