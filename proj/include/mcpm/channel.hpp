#pragma once

// Point transmitter / absorbing spherical receiver diffusion link.
//
// Units are micrometers and seconds throughout.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcpm/errors.hpp"
#include "mcpm/numeric.hpp"

namespace mcpm {

using Count = std::int64_t;

struct ChannelParams {
  double r0 = 10.0;  ///< transmitter to receiver-center distance [um]
  double rr = 5.0;   ///< receiver radius [um]
  double D = 79.4;   ///< diffusion coefficient [um^2/s]

  void validate() const {
    if (!(rr > 0.0) || !(r0 > rr)) throw ConfigError("channel: need r0 > rr > 0");
    if (!(D > 0.0)) throw ConfigError("channel: need D > 0");
  }

  /// Probability that a molecule is ever absorbed.
  double total_hit_probability() const { return rr / r0; }
};

struct SlotGrid {
  double ts = 0.0;         ///< slot duration [s]
  std::size_t slots = 0;   ///< channel memory L [slots]
  double tau = 0.0;        ///< receiver clock lag [s]

  /// L = round(t_total / ts).
  static SlotGrid from_horizon(double ts, double t_total, double tau = 0.0) {
    if (!(ts > 0.0)) throw ConfigError("slot grid: ts must be positive");
    if (!(t_total >= ts)) throw ConfigError("slot grid: t_total must be at least one slot");
    SlotGrid g{ts, static_cast<std::size_t>(std::llround(t_total / ts)), tau};
    g.validate();
    return g;
  }

  void validate() const {
    if (!(ts > 0.0)) throw ConfigError("slot grid: ts must be positive");
    if (slots < 1) throw ConfigError("slot grid: need at least one slot");
    if (!(tau >= 0.0)) throw ConfigError("slot grid: tau must be non-negative");
  }
};

/// Discretized channel response: h[0] holds h_1.
class ChannelCoefficients {
public:
  ChannelCoefficients() = default;
  explicit ChannelCoefficients(std::vector<double> h) : h_(std::move(h)) {
    for (double v : h_) {
      if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("channel coefficient outside [0, 1]");
    }
  }

  std::size_t size() const { return h_.size(); }
  bool empty() const { return h_.empty(); }
  std::span<const double> values() const { return h_; }
  double operator[](std::size_t i) const { return h_[i]; }

  /// One-based access matching the usual h_n notation.
  double tap(std::size_t n) const {
    if (n < 1 || n > h_.size()) throw std::out_of_range("channel tap index " + std::to_string(n));
    return h_[n - 1];
  }

  double sum() const {
    numeric::CompensatedSum s;
    for (double v : h_) s += v;
    return s.value();
  }

  /// h_1 strictly dominates every later tap.
  bool first_path_dominant() const {
    for (std::size_t i = 1; i < h_.size(); ++i) {
      if (!(h_[0] > h_[i])) return false;
    }
    return !h_.empty();
  }

  ChannelCoefficients truncated(std::size_t n) const {
    std::vector<double> out(h_.begin(), h_.begin() + static_cast<std::ptrdiff_t>(std::min(n, h_.size())));
    return ChannelCoefficients(std::move(out));
  }

private:
  std::vector<double> h_;
};

/// Arrival density of a single molecule t seconds after release.
inline double first_hit_density(double t, const ChannelParams& p) {
  if (!(t > 0.0)) throw std::domain_error("first_hit_density: t must be positive");
  const double d = p.r0 - p.rr;
  return (p.rr / p.r0) * (1.0 / std::sqrt(4.0 * std::numbers::pi * p.D * t)) * (d / t) *
         std::exp(-d * d / (4.0 * p.D * t));
}

/// Probability that a molecule is absorbed within [a, b] seconds after release.
///
/// The density vanishes faster than any power of t as t -> 0+, so integrating
/// from a = 0 needs no endpoint treatment; Gauss-Kronrod nodes are interior.
/// Long windows are split at t_peak * 4^k so each panel sees a smooth piece of
/// the t^(-3/2) tail.
inline double window_hit_probability(double a, double b, const ChannelParams& p) {
  if (a < 0.0) throw std::domain_error("window_hit_probability: a must be non-negative");
  if (!(b > a)) throw std::domain_error("window_hit_probability: need b > a");
  auto f = [&p](double t) { return t > 0.0 ? first_hit_density(t, p) : 0.0; };
  const double d = p.r0 - p.rr;
  double cut = d * d / (6.0 * p.D);  // density peak
  while (cut * 4.0 <= a) cut *= 4.0;
  numeric::CompensatedSum total;
  double lo = a;
  for (; cut < b; cut *= 4.0) {
    if (cut <= lo) continue;
    total.add(numeric::integrate(f, lo, cut));
    lo = cut;
  }
  total.add(numeric::integrate(f, lo, b));
  return total.value();
}

/// h_n = P(hit in [(n-1) ts + tau, n ts + tau]), n = 1..L.
inline ChannelCoefficients channel_coefficients(const ChannelParams& p, const SlotGrid& g) {
  p.validate();
  g.validate();
  std::vector<double> h(g.slots);
  for (std::size_t n = 0; n < g.slots; ++n) {
    const double a = static_cast<double>(n) * g.ts + g.tau;
    const double b = static_cast<double>(n + 1) * g.ts + g.tau;
    h[n] = window_hit_probability(a, b, p);
  }
  return ChannelCoefficients(std::move(h));
}

/// Per-slot emitted molecule counts, slot 0 first.
struct EmissionFrame {
  std::vector<Count> N;
};

/// Per-slot received molecule counts.
struct ArrivalTrace {
  std::vector<Count> R;
};

/// Poisson rates of each slot under the LTI model: lambda_m = sum_n N_{m-n+1} h_n.
inline std::vector<double> arrival_rates(const EmissionFrame& e, const ChannelCoefficients& h) {
  const std::size_t n_slots = e.N.size();
  std::vector<double> rate(n_slots, 0.0);
  const auto taps = h.values();
  for (std::size_t j = 0; j < n_slots; ++j) {
    if (e.N[j] == 0) continue;
    const double nj = static_cast<double>(e.N[j]);
    const std::size_t end = std::min(n_slots, j + taps.size());
    for (std::size_t m = j; m < end; ++m) rate[m] += nj * taps[m - j];
  }
  return rate;
}

template <class Rng>
Count sample_poisson(double mean, Rng& rng) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<Count> dist(mean);
  return dist(rng);
}

/// Draws R_m ~ Poisson(lambda_m) independently for every slot. Emissions before
/// the frame are taken as zero.
template <class Rng>
ArrivalTrace simulate_arrivals(const EmissionFrame& e, const ChannelCoefficients& h, Rng& rng) {
  for (Count n : e.N) {
    if (n < 0) throw std::domain_error("simulate_arrivals: negative emission count");
  }
  const auto rate = arrival_rates(e, h);
  ArrivalTrace out;
  out.R.resize(rate.size());
  for (std::size_t m = 0; m < rate.size(); ++m) out.R[m] = sample_poisson(rate[m], rng);
  return out;
}

}  // namespace mcpm
