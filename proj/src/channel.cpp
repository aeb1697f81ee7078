#include "ofgsc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace ofgsc::channel {

namespace {

double levels(int bits) { return std::ldexp(1.0, bits) - 1.0; }

double quantize_to_symbol(double unit, double l) {
  const double q = std::round(std::clamp(unit, 0.0, 1.0) * l);
  return 2.0 * q / l - 1.0;
}

double symbol_to_unit(double s, double l) {
  const double q = std::clamp(std::round((s + 1.0) * 0.5 * l), 0.0, l);
  return q / l;
}

}  // namespace

void LinkParams::validate() const {
  if (!(distance_m > 0 && carrier_hz > 0 && path_loss_exp > 0 && power_w > 0 && noise_w > 0 && bandwidth_hz > 0))
    throw InputError("link parameters must be positive");
}

void CodecParams::validate() const {
  if (bits_per_symbol < 1 || bits_per_symbol > 16) throw InputError("codec: bits_per_symbol must be in [1, 16]");
  if (!(mag_cap > 0)) throw InputError("codec: mag_cap must be positive");
  if (!(gamma > 0)) throw InputError("codec: gamma must be positive");
}

double path_gain(const LinkParams& link) {
  return std::pow(kSpeedOfLight / (4.0 * std::numbers::pi * link.distance_m * link.carrier_hz), link.path_loss_exp);
}

double capacity(double bandwidth_hz, double snr) { return bandwidth_hz * std::log2(1.0 + snr); }

ChannelRealization sample_channel(const LinkParams& link, std::uint64_t seed, std::optional<Symbol> beta_override) {
  link.validate();
  Symbol beta;
  if (beta_override) {
    beta = *beta_override;
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    const double re = n(rng);
    const double im = n(rng);
    beta = {re, im};
  }
  ChannelRealization r;
  r.h = path_gain(link) * beta;
  r.snr = link.power_w * std::norm(r.h) / link.noise_w;
  r.bandwidth_hz = link.bandwidth_hz;
  r.capacity_per_s = capacity(link.bandwidth_hz, r.snr);
  return r;
}

ChannelRealization realization_from_snr(double snr, double bandwidth_hz) {
  if (!(snr >= 0) || !(bandwidth_hz > 0)) throw InputError("realization: need snr >= 0 and bandwidth > 0");
  return {Symbol(1.0, 0.0), snr, bandwidth_hz, capacity(bandwidth_hz, snr)};
}

double tx_time(double load_bits, const ChannelRealization& realization) {
  if (!(realization.capacity_per_s > 0)) throw LinkOutage("link outage: zero capacity");
  return load_bits / realization.capacity_per_s;
}

Polar polar_normalize(double dx, double dy, double mag_cap) {
  return {std::min(std::hypot(dx, dy), mag_cap) / mag_cap, std::atan2(dy, dx) / (2.0 * std::numbers::pi) + 0.5};
}

std::vector<Symbol> flow_encode(std::span<const FlowPatch> patches, const CodecParams& cp) {
  cp.validate();
  const double l = levels(cp.bits_per_symbol);
  std::vector<Symbol> out;
  for (const FlowPatch& p : patches) {
    const std::size_t plane = static_cast<std::size_t>(p.patch_h) * p.patch_w;
    if (p.payload.size() != 2 * plane) throw InputError("codec: malformed patch payload");
    for (std::size_t k = 0; k < plane; ++k) {
      const double dx = p.payload[k];
      const double dy = p.payload[plane + k];
      if (!std::isfinite(dx) || !std::isfinite(dy)) throw InputError("codec: non-finite flow");
      const Polar pol = polar_normalize(dx, dy, cp.mag_cap);
      out.emplace_back(quantize_to_symbol(pol.magnitude, l), quantize_to_symbol(pol.angle, l));
    }
  }
  return out;
}

std::vector<FlowPatch> flow_decode(std::span<const Symbol> symbols, const CodecParams& cp, int patch_h, int patch_w) {
  cp.validate();
  if (patch_h < 1 || patch_w < 1) throw InputError("codec: bad patch size");
  const std::size_t plane = static_cast<std::size_t>(patch_h) * patch_w;
  if (symbols.size() % plane != 0) throw InputError("codec: symbol count is not a whole number of patches");
  const double l = levels(cp.bits_per_symbol);
  std::vector<FlowPatch> out(symbols.size() / plane);
  for (std::size_t n = 0; n < out.size(); ++n) {
    FlowPatch& p = out[n];
    p.patch_h = patch_h;
    p.patch_w = patch_w;
    p.payload.assign(2 * plane, 0.0F);
    for (std::size_t k = 0; k < plane; ++k) {
      const Symbol s = symbols[n * plane + k];
      const double mag = symbol_to_unit(s.real(), l) * cp.mag_cap;
      const double ang = (symbol_to_unit(s.imag(), l) - 0.5) * 2.0 * std::numbers::pi;
      p.payload[k] = static_cast<float>(mag * std::cos(ang));
      p.payload[plane + k] = static_cast<float>(mag * std::sin(ang));
    }
  }
  return out;
}

double symbol_power(std::span<const Symbol> symbols) {
  double e = 0.0;
  for (const Symbol& s : symbols) e += std::norm(s);
  return e;
}

NormalizedSymbols power_normalize(std::span<const Symbol> symbols, const CodecParams& cp, double power_w) {
  cp.validate();
  if (!(power_w > 0)) throw InputError("power_normalize: power must be positive");
  const double energy = symbol_power(symbols);
  if (!(energy > 0)) throw InputError("power_normalize: zero vector");
  NormalizedSymbols out;
  out.scale = std::sqrt(cp.gamma * power_w) / std::sqrt(energy);
  out.symbols.reserve(symbols.size());
  for (const Symbol& s : symbols) out.symbols.push_back(out.scale * s);
  return out;
}

std::vector<Symbol> transmit_analog(std::span<const Symbol> symbols, const ChannelRealization& realization,
                                    double sigma2, std::uint64_t seed) {
  if (!(std::abs(realization.h) > 0)) throw LinkOutage("link outage: |h| = 0");
  if (!(sigma2 >= 0)) throw InputError("transmit: noise power must be >= 0");
  std::vector<Symbol> out(symbols.begin(), symbols.end());
  if (sigma2 == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, std::sqrt(sigma2 / 2.0));
  for (Symbol& s : out) {
    const double re = n(rng);
    const double im = n(rng);
    s += Symbol(re, im) / realization.h;
  }
  return out;
}

}  // namespace ofgsc::channel
