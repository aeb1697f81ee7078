#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ofgsc/video.hpp"

namespace ofgsc::channel {

using Symbol = std::complex<double>;

inline constexpr double kSpeedOfLight = 299'792'458.0;

struct LinkParams {
  double distance_m = 100.0;     // d
  double carrier_hz = 2.4e9;     // f_c
  double path_loss_exp = 1.5;    // alpha
  double power_w = 0.2;          // P
  double noise_w = 4e-15;        // sigma^2
  double bandwidth_hz = 1e6;     // B

  void validate() const;
};

struct ChannelRealization {
  Symbol h{0.0, 0.0};
  double snr = 0.0;
  double bandwidth_hz = 0.0;
  double capacity_per_s = 0.0;
};

struct CodecParams {
  int bits_per_symbol = 8;
  double mag_cap = 32.0;
  double gamma = 1.0;

  void validate() const;
};

// Capacity is zero, so no finite transmit time exists.
class LinkOutage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// (c / (4 pi d f_c))^alpha
double path_gain(const LinkParams& link);
double capacity(double bandwidth_hz, double snr);

// h = path_gain * beta, beta ~ CN(0, 1) drawn from `seed` unless overridden.
ChannelRealization sample_channel(const LinkParams& link, std::uint64_t seed,
                                  std::optional<Symbol> beta_override = std::nullopt);
// Realization with an explicit linear SNR and unit coefficient.
ChannelRealization realization_from_snr(double snr, double bandwidth_hz);

double tx_time(double load_bits, const ChannelRealization& realization);

struct Polar {
  double magnitude;  // min(|d|, cap) / cap
  double angle;      // atan2(dy, dx) / 2pi + 1/2
};
Polar polar_normalize(double dx, double dy, double mag_cap);

// One complex symbol per flow vector: I carries magnitude, Q carries angle,
// each uniformly quantized and mapped onto [-1, 1]. Patch order, then raster.
std::vector<Symbol> flow_encode(std::span<const FlowPatch> patches, const CodecParams& cp);

// Inverse of flow_encode; positions of the returned patches are left at 0.
std::vector<FlowPatch> flow_decode(std::span<const Symbol> symbols, const CodecParams& cp, int patch_h, int patch_w);

struct NormalizedSymbols {
  std::vector<Symbol> symbols;
  double scale = 1.0;  // output = scale * input; the receiver divides it back out
};
// sqrt(gamma P) v / sqrt(v^H v)
NormalizedSymbols power_normalize(std::span<const Symbol> symbols, const CodecParams& cp, double power_w);
double symbol_power(std::span<const Symbol> symbols);

// y = h x + n, n ~ CN(0, sigma2); returns the zero-forcing estimate y / h,
// evaluated as x + n / h.
std::vector<Symbol> transmit_analog(std::span<const Symbol> symbols, const ChannelRealization& realization,
                                    double sigma2, std::uint64_t seed);

}  // namespace ofgsc::channel
