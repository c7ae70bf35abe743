#pragma once

// Approximate bit error probability of MCPM with the two-stage detector.
//
// The error rate is averaged over every length-Ls conditioning sequence.
// Within a context the K slot counts of the current symbol are treated as
// independent Gaussians with mean = variance = Poisson rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcpm/channel.hpp"
#include "mcpm/errors.hpp"
#include "mcpm/modulation.hpp"
#include "mcpm/numeric.hpp"

namespace mcpm {

struct ConditionalContext {
  SymbolSequence sequence;    ///< s_{k-Ls+1} .. s_k, oldest first
  std::vector<double> rates;  ///< mean counts of the K slots of s_k
};

/// Conditional slot means of the last symbol given the whole window, using
/// taps h_1..h_{K Ls} and real-valued emission counts.
inline ConditionalContext make_context(const SymbolSequence& window, const SchemeConfig& cfg,
                                       const ChannelCoefficients& h) {
  if (cfg.scheme != Scheme::MCPM) throw ConfigError("analytic error rate is defined for MCPM only");
  const int K = cfg.K;
  const int Ls = static_cast<int>(window.size());
  if (Ls < 1) throw ConfigError("context needs at least one symbol");
  const auto taps = static_cast<std::size_t>(K * Ls);
  ConditionalContext ctx{window, std::vector<double>(static_cast<std::size_t>(K), 0.0)};
  for (int p = 0; p < K; ++p) {
    double mu = 0.0;
    for (int j = 0; j < Ls; ++j) {
      const auto& s = window[static_cast<std::size_t>(Ls - 1 - j)];
      const int off = j * K + p - (s.ppm_bin - 1);
      if (off < 0) continue;
      const auto n = static_cast<std::size_t>(off);
      if (n < taps && n < h.size()) mu += symbol_emission_count(s, cfg) * h[n];
    }
    ctx.rates[static_cast<std::size_t>(p)] = mu;
  }
  return ctx;
}

/// CDF of the largest competing count, prod_j Phi((r - mu_j) / sqrt(mu_j)).
/// A zero-mean competitor is identically zero.
inline double max_other_cdf(double r, std::span<const double> means) {
  double F = 1.0;
  for (double mu : means) {
    if (mu < 0.0) throw std::domain_error("max_other_cdf: negative mean");
    if (mu == 0.0) {
      if (r < 0.0) return 0.0;
      continue;
    }
    F *= numeric::phi_cdf((r - mu) / std::sqrt(mu));
  }
  return F;
}

namespace detail {

struct BinSplit {
  double mu;                    // mean of the target bin
  std::vector<double> others;   // competitor means
  bool zero_competitor = false;
  bool zero_lower_competitor = false;  // a zero-mean bin with lower index
};

inline BinSplit split_bins(std::span<const double> rates, int target_bin) {
  BinSplit s{rates[static_cast<std::size_t>(target_bin - 1)], {}};
  for (int j = 1; j <= static_cast<int>(rates.size()); ++j) {
    if (j == target_bin) continue;
    const double mu = rates[static_cast<std::size_t>(j - 1)];
    s.others.push_back(mu);
    if (mu == 0.0) {
      s.zero_competitor = true;
      if (j < target_bin) s.zero_lower_competitor = true;
    }
  }
  return s;
}

// Probability that a bin whose count is identically zero wins stage one.
// Ties resolve to the lowest index, so any lower-index zero bin beats it.
inline double zero_bin_win_probability(const BinSplit& s) {
  if (s.zero_lower_competitor) return 0.0;
  return max_other_cdf(0.0, s.others);
}

// Integral of F_Y(r) f_R(r) over [a, b] clipped to mean +- 10 sigma, split at
// zero when a competitor's CDF steps there.
inline double win_integral(const BinSplit& s, double a, double b) {
  const double sd = std::sqrt(s.mu);
  a = std::max(a, s.mu - 10.0 * sd);
  b = std::min(b, s.mu + 10.0 * sd);
  if (!(b > a)) return 0.0;
  auto g = [&s](double r) { return max_other_cdf(r, s.others) * numeric::gaussian_pdf(r, s.mu, s.mu); };
  if (s.zero_competitor && a < 0.0 && b > 0.0) return numeric::integrate(g, a, 0.0) + numeric::integrate(g, 0.0, b);
  return numeric::integrate(g, a, b);
}

}  // namespace detail

/// P(detected bin = target_bin and detected concentration bit = target_csk | context).
inline double detection_event_probability(const ConditionalContext& ctx, int target_bin, bool target_csk,
                                          double gamma) {
  if (gamma < 0.0) throw std::domain_error("detection_event_probability: gamma must be non-negative");
  const int K = static_cast<int>(ctx.rates.size());
  if (target_bin < 1 || target_bin > K) throw std::out_of_range("target bin");
  for (double mu : ctx.rates) {
    if (mu < 0.0) throw std::domain_error("negative slot rate");
  }
  const auto s = detail::split_bins(ctx.rates, target_bin);
  if (s.mu == 0.0) {
    // R = 0 <= gamma always decides bit 0.
    return target_csk ? 0.0 : detail::zero_bin_win_probability(s);
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  return target_csk ? detail::win_integral(s, gamma, inf) : detail::win_integral(s, -inf, gamma);
}

/// Expected fraction of the symbol's bits in error given the context.
inline double conditional_error_probability(const ConditionalContext& ctx, double gamma, const SchemeConfig& cfg) {
  const auto& truth = ctx.sequence.back();
  const double bits = 1.0 + cfg.log2K();
  numeric::CompensatedSum sum;
  for (int bin = 1; bin <= cfg.K; ++bin) {
    for (int csk = 0; csk <= 1; ++csk) {
      const McpmSymbol cand{bin, csk == 1};
      const int d = symbol_bit_distance(truth, cand);
      if (d == 0) continue;
      sum += d / bits * detection_event_probability(ctx, bin, csk == 1, gamma);
    }
  }
  return sum.value();
}

namespace detail {

inline std::size_t context_count(const SchemeConfig& cfg, int Ls) {
  constexpr double guard = 1e6;
  if (Ls < 1) throw ConfigError("Ls must be >= 1");
  const double n = std::pow(2.0 * cfg.K, static_cast<double>(Ls));
  if (n > guard) {
    throw GuardError("(2K)^Ls = " + std::to_string(static_cast<long long>(n)) +
                     " conditioning sequences exceeds 10^6; lower Ls");
  }
  return static_cast<std::size_t>(n);
}

// Calls fn(window) for every length-Ls MCPM sequence in lexicographic order.
template <class Fn>
void for_each_window(const SchemeConfig& cfg, int Ls, Fn&& fn) {
  const std::size_t n = context_count(cfg, Ls);
  const int A = 2 * cfg.K;
  SymbolSequence window(static_cast<std::size_t>(Ls));
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t rem = idx;
    for (int j = Ls - 1; j >= 0; --j) {
      window[static_cast<std::size_t>(j)] = McpmSymbol::from_code(static_cast<int>(rem % A) + 1);
      rem /= static_cast<std::size_t>(A);
    }
    fn(window);
  }
}

}  // namespace detail

/// Average bit error probability over all (2K)^Ls equiprobable contexts.
inline double analytic_ber(const SchemeConfig& cfg, const ChannelCoefficients& h, double gamma, int Ls) {
  cfg.validate();
  const double weight = 1.0 / static_cast<double>(detail::context_count(cfg, Ls));
  numeric::CompensatedSum sum;
  detail::for_each_window(cfg, Ls, [&](const SymbolSequence& w) {
    sum += weight * conditional_error_probability(make_context(w, cfg, h), gamma, cfg);
  });
  return std::clamp(sum.value(), 0.0, 1.0);
}

/// analytic_ber evaluated on an ascending list of thresholds, sharing the
/// per-context integrals between neighbouring thresholds.
inline std::vector<double> analytic_ber_profile(const SchemeConfig& cfg, const ChannelCoefficients& h,
                                                std::span<const double> gammas, int Ls) {
  cfg.validate();
  if (!std::is_sorted(gammas.begin(), gammas.end())) throw std::invalid_argument("gamma grid must be ascending");
  if (!gammas.empty() && gammas.front() < 0.0) throw std::domain_error("gamma must be non-negative");
  const std::size_t G = gammas.size();
  const double weight = 1.0 / static_cast<double>(detail::context_count(cfg, Ls));
  const double bits = 1.0 + cfg.log2K();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<numeric::CompensatedSum> acc(G);
  std::vector<double> below(G);
  detail::for_each_window(cfg, Ls, [&](const SymbolSequence& w) {
    const auto ctx = make_context(w, cfg, h);
    const auto& truth = w.back();
    for (int bin = 1; bin <= cfg.K; ++bin) {
      const auto s = detail::split_bins(ctx.rates, bin);
      const int d1 = symbol_bit_distance(truth, {bin, true});
      const int d0 = symbol_bit_distance(truth, {bin, false});
      double total = 0.0;
      if (s.mu == 0.0) {
        total = detail::zero_bin_win_probability(s);
        std::fill(below.begin(), below.end(), total);
      } else {
        double run = detail::win_integral(s, -inf, G ? gammas[0] : inf);
        for (std::size_t g = 0; g < G; ++g) {
          if (g > 0) run += detail::win_integral(s, gammas[g - 1], gammas[g]);
          below[g] = run;
        }
        total = run + detail::win_integral(s, G ? gammas[G - 1] : inf, inf);
      }
      for (std::size_t g = 0; g < G; ++g) {
        acc[g] += weight * (d1 * (total - below[g]) + d0 * below[g]) / bits;
      }
    }
  });
  std::vector<double> out(G);
  for (std::size_t g = 0; g < G; ++g) out[g] = std::clamp(acc[g].value(), 0.0, 1.0);
  return out;
}

/// Error rate of the two-stage detector with exact Poisson slot counts
/// (no Gaussian approximation), over the same context average.
inline double exact_tpcd_ber(const SchemeConfig& cfg, const ChannelCoefficients& h, double gamma, int Ls) {
  cfg.validate();
  if (gamma < 0.0) throw std::domain_error("gamma must be non-negative");
  const double weight = 1.0 / static_cast<double>(detail::context_count(cfg, Ls));
  const double bits = 1.0 + cfg.log2K();
  const int K = cfg.K;
  numeric::CompensatedSum sum;
  std::vector<std::vector<double>> pmf(static_cast<std::size_t>(K)), cdf(static_cast<std::size_t>(K));
  detail::for_each_window(cfg, Ls, [&](const SymbolSequence& w) {
    const auto ctx = make_context(w, cfg, h);
    const double mu_max = *std::max_element(ctx.rates.begin(), ctx.rates.end());
    const auto rmax = static_cast<std::size_t>(std::ceil(mu_max + 15.0 * std::sqrt(mu_max) + 30.0));
    for (int j = 0; j < K; ++j) {
      auto& p = pmf[static_cast<std::size_t>(j)];
      auto& c = cdf[static_cast<std::size_t>(j)];
      p.assign(rmax + 1, 0.0);
      c.assign(rmax + 1, 0.0);
      const double mu = ctx.rates[static_cast<std::size_t>(j)];
      double run = 0.0;
      for (std::size_t r = 0; r <= rmax; ++r) {
        const double rr = static_cast<double>(r);
        p[r] = mu == 0.0 ? (r == 0 ? 1.0 : 0.0) : std::exp(rr * std::log(mu) - mu - std::lgamma(rr + 1.0));
        run += p[r];
        c[r] = std::min(run, 1.0);
      }
    }
    const auto& truth = w.back();
    for (int b = 0; b < K; ++b) {
      const int d1 = symbol_bit_distance(truth, {b + 1, true});
      const int d0 = symbol_bit_distance(truth, {b + 1, false});
      for (std::size_t r = 0; r <= rmax; ++r) {
        double win = pmf[static_cast<std::size_t>(b)][r];
        if (win == 0.0) continue;
        for (int j = 0; j < K && win > 0.0; ++j) {
          if (j == b) continue;
          const auto& c = cdf[static_cast<std::size_t>(j)];
          win *= j < b ? (r == 0 ? 0.0 : c[r - 1]) : c[r];
        }
        const int d = static_cast<double>(r) > gamma ? d1 : d0;
        if (d) sum += weight * d * win / bits;
      }
    }
  });
  return std::clamp(sum.value(), 0.0, 1.0);
}

}  // namespace mcpm
