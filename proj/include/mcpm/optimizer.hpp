#pragma once

// Selection of the MCPM design pair (alpha, gamma).
//
// alpha minimizes a union-bound cost for an ISI-free channel in which only the
// first K taps act (the leftmost high/low constellation points), with the
// no-ISI threshold gamma_U eliminated in closed form. gamma is placed where the
// Gaussian densities of the worst-case high and low conditional counts cross,
// averaged over bins and moved to the next half-integer below.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcpm/analysis.hpp"
#include "mcpm/channel.hpp"
#include "mcpm/errors.hpp"
#include "mcpm/modulation.hpp"
#include "mcpm/montecarlo.hpp"
#include "mcpm/numeric.hpp"

namespace mcpm {

struct CostContext {
  double B = 0.0;               ///< 2 M (1 + log2 K) molecules
  std::vector<double> h_bins;   ///< h_1..h_K

  static CostContext from(const SchemeConfig& cfg, const ChannelCoefficients& h) {
    if (h.size() < static_cast<std::size_t>(cfg.K)) throw ConfigError("channel shorter than one symbol");
    auto v = h.values();
    return {cfg.emission_scale(), std::vector<double>(v.begin(), v.begin() + cfg.K)};
  }

  double h1() const { return h_bins.front(); }
  double high_mean(double alpha) const { return B * alpha * h1(); }
  double low_mean(double alpha) const { return B * (1.0 - alpha) * h1(); }
};

/// Which of the convexity conditions hold at (alpha, gamma).
struct RegimeCheck {
  bool alpha_in_range = false;
  bool gamma_in_interval = false;
  bool first_path_dominant = false;
  bool level_separation = false;  ///< B alpha h1 - B (1 - alpha) h1 > 3

  bool ok() const { return alpha_in_range && gamma_in_interval && first_path_dominant && level_separation; }
};

inline RegimeCheck check_regime(double alpha, double gamma, const CostContext& ctx) {
  RegimeCheck r;
  r.alpha_in_range = alpha > 0.5 && alpha < 1.0;
  r.gamma_in_interval = gamma > ctx.low_mean(alpha) && gamma < ctx.high_mean(alpha);
  double others = 0.0;
  for (std::size_t i = 1; i < ctx.h_bins.size(); ++i) others = std::max(others, ctx.h_bins[i]);
  r.first_path_dominant = ctx.h_bins.size() == 1 ? ctx.h1() > 0.0 : (ctx.h1() > others && others > 0.0);
  r.level_separation = ctx.high_mean(alpha) - ctx.low_mean(alpha) > 3.0;
  return r;
}

/// Union-bound cost of the leftmost high/low constellation points: two
/// threshold-crossing terms plus, per competing bin, one position-error term
/// for each concentration level.
inline double cost_C(double alpha, double gamma, const CostContext& ctx) {
  using numeric::q_function;
  if (!(alpha > 0.5 && alpha < 1.0)) throw std::domain_error("cost_C: alpha outside (0.5, 1)");
  const double hi = ctx.high_mean(alpha);
  const double lo = ctx.low_mean(alpha);
  if (!(gamma > lo && gamma < hi)) throw std::domain_error("cost_C: gamma outside (B(1-a)h1, B a h1)");
  const double h1 = ctx.h1();
  double c = q_function((hi - gamma) / std::sqrt(hi)) + q_function((gamma - lo) / std::sqrt(lo));
  for (std::size_t i = 1; i < ctx.h_bins.size(); ++i) {
    const double hd = h1 - ctx.h_bins[i];
    const double hs = h1 + ctx.h_bins[i];
    c += q_function(ctx.B * alpha * hd / std::sqrt(ctx.B * alpha * hs));
    c += q_function(ctx.B * (1.0 - alpha) * hd / std::sqrt(ctx.B * (1.0 - alpha) * hs));
  }
  return c;
}

/// Stationary point of cost_C in gamma for fixed alpha (closed form). Empty
/// when the radicand is not positive or the root leaves (B(1-a)h1, B a h1).
inline std::optional<double> gamma_star_U(double alpha, const CostContext& ctx) {
  const double Bh1 = ctx.B * ctx.h1();
  const double num = Bh1 + std::log((1.0 - alpha) / alpha) - 2.0 * Bh1 * alpha;
  const double den = 1.0 / (Bh1 * alpha * (1.0 - alpha)) - 2.0 / (Bh1 * (1.0 - alpha));
  const double radicand = num / den;
  if (!(radicand > 0.0) || !std::isfinite(radicand)) return std::nullopt;
  const double g = std::sqrt(radicand);
  if (!(g > ctx.low_mean(alpha) && g < ctx.high_mean(alpha))) return std::nullopt;
  return g;
}

struct AlphaOptimum {
  double alpha = 0.0;
  double gamma_U = 0.0;
  double cost = 0.0;
  bool theoretical = true;  ///< false when the 2-D grid fallback was used
  std::string note;
};

inline constexpr double alpha_search_lo = 0.5 + 1e-3;
inline constexpr double alpha_search_hi = 1.0 - 1e-3;

/// Smallest alpha satisfying the level-separation condition.
inline double separation_alpha_floor(const CostContext& ctx) { return 0.5 + 1.5 / (ctx.B * ctx.h1()); }

namespace detail {

inline AlphaOptimum grid_alpha_fallback(const CostContext& ctx, std::string why) {
  AlphaOptimum best{0.0, 0.0, std::numeric_limits<double>::infinity(), false, std::move(why)};
  constexpr int n_alpha = 500;
  constexpr int n_gamma = 200;
  for (int a = 0; a < n_alpha; ++a) {
    const double alpha = alpha_search_lo + (alpha_search_hi - alpha_search_lo) * a / (n_alpha - 1);
    const double lo = ctx.low_mean(alpha);
    const double hi = ctx.high_mean(alpha);
    for (int g = 1; g <= n_gamma; ++g) {
      const double gamma = lo + (hi - lo) * g / (n_gamma + 1);
      const double c = cost_C(alpha, gamma, ctx);
      if (c < best.cost) {
        best.alpha = alpha;
        best.gamma_U = gamma;
        best.cost = c;
      }
    }
  }
  return best;
}

}  // namespace detail

/// Minimizes alpha -> C(alpha, gamma*_U(alpha)) by golden-section search.
///
/// The bracket is [0.501, 0.999] raised to the level-separation floor. The
/// convexity conditions are checked at both ends and the midpoint; if any
/// fails a dense (alpha, gamma_U) grid is searched instead and the result is
/// flagged non-theoretical.
inline AlphaOptimum optimize_alpha(const CostContext& ctx) {
  if (ctx.h_bins.empty() || !(ctx.B > 0.0) || !(ctx.h1() > 0.0)) throw ConfigError("optimize_alpha: empty context");
  const double lo = std::max(alpha_search_lo, std::nextafter(separation_alpha_floor(ctx), 1.0));
  const double hi = alpha_search_hi;
  if (!(hi > lo)) return detail::grid_alpha_fallback(ctx, "level separation unattainable");
  for (double a : {lo, 0.5 * (lo + hi), hi}) {
    const auto g = gamma_star_U(a, ctx);
    if (!g) return detail::grid_alpha_fallback(ctx, "closed-form threshold invalid");
    if (!check_regime(a, *g, ctx).ok()) return detail::grid_alpha_fallback(ctx, "convexity conditions violated");
  }
  auto f = [&ctx](double a) {
    const auto g = gamma_star_U(a, ctx);
    return g ? cost_C(a, *g, ctx) : std::numeric_limits<double>::infinity();
  };
  const auto m = numeric::golden_section_minimize(f, lo, hi, 1e-4);
  return {m.x, *gamma_star_U(m.x, ctx), m.value, true, {}};
}

/// Conditional mean of the bin-i (1-based) count for concentration bit j under
/// its worst-case history of Ls - 1 earlier symbols: all low in bin 1 for j = 1,
/// all high in bin K for j = 0.
inline double worst_case_mean(int i, bool j, double alpha, const CostContext& ctx, const ChannelCoefficients& h,
                              int Ls) {
  const int K = static_cast<int>(ctx.h_bins.size());
  if (i < 1 || i > K) throw std::domain_error("worst_case_mean: bin out of range");
  if (Ls < 1) throw std::domain_error("worst_case_mean: Ls must be >= 1");
  auto tap = [&h](int n) {
    if (n < 1 || static_cast<std::size_t>(n) > h.size()) {
      throw std::domain_error("worst_case_mean: channel has no tap h_" + std::to_string(n));
    }
    return h[static_cast<std::size_t>(n - 1)];
  };
  const double B = ctx.B;
  double mu = j ? B * alpha * tap(1) : B * (1.0 - alpha) * tap(1);
  for (int c = 1; c <= Ls - 1; ++c) {
    mu += j ? B * (1.0 - alpha) * tap(c * K + i) : B * alpha * tap((c - 1) * K + i + 1);
  }
  return mu;
}

/// Point in (mu0, mu1) where the densities N(mu1, mu1) and N(mu0, mu0) cross.
inline double gamma_crossing(double mu1, double mu0) {
  if (!(mu0 > 0.0)) throw std::domain_error("gamma_crossing: mu0 must be positive");
  if (!(mu1 > mu0)) throw std::domain_error("gamma_crossing: need mu1 > mu0");
  // Log-density equality reduces to gamma^2 = mu0 mu1 (1 + ln(mu1/mu0) / (mu1 - mu0)).
  const double d = mu1 - mu0;
  const double root = std::sqrt(mu0 * mu1 * (1.0 + std::log1p(d / mu0) / d));
  if (root > mu0 && root < mu1) return root;
  auto diff = [mu0, mu1](double g) {
    return (-0.5 * std::log(mu1) - (g - mu1) * (g - mu1) / (2.0 * mu1)) -
           (-0.5 * std::log(mu0) - (g - mu0) * (g - mu0) / (2.0 * mu0));
  };
  double a = mu0;
  double b = mu1;
  if (diff(a) * diff(b) > 0.0) return 0.5 * (mu0 + mu1);  // no crossing between the means
  for (int it = 0; it < 200 && b - a > 1e-12 * b; ++it) {
    const double m = 0.5 * (a + b);
    (diff(a) * diff(m) <= 0.0 ? b : a) = m;
  }
  return 0.5 * (a + b);
}

struct GammaSelection {
  double gamma = 0.0;
  std::vector<std::optional<double>> per_bin;  ///< empty where the worst-case means do not separate
  bool fallback = false;                       ///< no bin separated; no-ISI crossing used
};

/// Symbol memory spanned by the whole channel, floor(L / K).
inline int channel_memory_symbols(const SchemeConfig& cfg, const ChannelCoefficients& h) {
  return std::max(1, static_cast<int>(h.size() / static_cast<std::size_t>(cfg.slots_per_symbol())));
}

/// gamma* = floor(mean_i gamma^w_i) + 1/2. Bins whose worst-case high mean
/// does not exceed the worst-case low mean (very strong ISI) are left out of
/// the average. Ls = 0 selects the full channel memory.
inline GammaSelection select_gamma(double alpha, const SchemeConfig& cfg, const ChannelCoefficients& h, int Ls = 0) {
  if (cfg.scheme != Scheme::MCPM) throw ConfigError("select_gamma: MCPM only");
  if (Ls == 0) Ls = channel_memory_symbols(cfg, h);
  const auto ctx = CostContext::from(cfg, h);
  GammaSelection out;
  double sum = 0.0;
  int used = 0;
  for (int i = 1; i <= cfg.K; ++i) {
    const double mu1 = worst_case_mean(i, true, alpha, ctx, h, Ls);
    const double mu0 = worst_case_mean(i, false, alpha, ctx, h, Ls);
    if (mu1 > mu0 && mu0 > 0.0) {
      const double g = gamma_crossing(mu1, mu0);
      out.per_bin.emplace_back(g);
      sum += g;
      ++used;
    } else {
      out.per_bin.emplace_back(std::nullopt);
    }
  }
  double avg = 0.0;
  if (used > 0) {
    avg = sum / used;
  } else {
    out.fallback = true;
    avg = gamma_crossing(ctx.high_mean(alpha), ctx.low_mean(alpha));
  }
  out.gamma = std::floor(avg) + 0.5;
  return out;
}

enum class DesignMethod { Theoretical, Exhaustive, Fixed };

inline std::string_view to_string(DesignMethod m) {
  switch (m) {
    case DesignMethod::Theoretical: return "theoretical";
    case DesignMethod::Exhaustive: return "exhaustive";
    case DesignMethod::Fixed: return "fixed";
  }
  return "?";
}

struct DesignPoint {
  double alpha = 0.0;
  double gamma = 0.0;
  DesignMethod method = DesignMethod::Fixed;
  bool closed_form = true;  ///< false when a fallback path produced the point
  std::optional<double> predicted_ber;
  std::string note;
};

/// Closed-form design: alpha from the convex cost, gamma from the worst-case
/// crossings over `gamma_memory` symbols (0 = whole channel).
inline DesignPoint theoretical_design(const SchemeConfig& cfg, const ChannelCoefficients& h, int gamma_memory = 0) {
  const auto a = optimize_alpha(CostContext::from(cfg, h));
  const auto g = select_gamma(a.alpha, cfg, h, gamma_memory);
  DesignPoint d{a.alpha, g.gamma, DesignMethod::Theoretical, a.theoretical && !g.fallback, std::nullopt, a.note};
  if (g.fallback) d.note += (d.note.empty() ? "" : "; ") + std::string("no bin separated under worst-case ISI");
  return d;
}

inline std::vector<double> alpha_grid(double step = 0.01) {
  std::vector<double> out;
  const auto n = static_cast<int>(std::floor(0.5 / step + 1e-9));
  for (int i = 1; i < n; ++i) out.push_back(0.5 + i * step);
  return out;
}

/// Half-integer thresholds 0.5, 1.5, ..., G - 0.5.
inline std::vector<double> half_integer_grid(std::size_t G) {
  std::vector<double> out(G);
  for (std::size_t j = 0; j < G; ++j) out[j] = static_cast<double>(j) + 0.5;
  return out;
}

/// Threshold grid size covering any slot mean the scheme can produce.
inline std::size_t threshold_grid_size(const SchemeConfig& cfg, const ChannelCoefficients& h) {
  const double peak = (cfg.scheme == Scheme::BCSK ? 2.0 * cfg.M : cfg.emission_scale()) * h.sum();
  return static_cast<std::size_t>(std::ceil(peak + 6.0 * std::sqrt(peak) + 2.0));
}

/// Grid search: `profile(alpha)` returns the error rate at every threshold of
/// `gammas`. Ties keep the first (smallest alpha, then smallest gamma).
template <class Profile>
DesignPoint grid_design_search(std::span<const double> alphas, std::span<const double> gammas, Profile&& profile) {
  DesignPoint best{0.0, 0.0, DesignMethod::Exhaustive, true, std::numeric_limits<double>::infinity(), {}};
  for (double a : alphas) {
    const std::vector<double> ber = profile(a);
    for (std::size_t j = 0; j < gammas.size() && j < ber.size(); ++j) {
      if (ber[j] < *best.predicted_ber) {
        best.alpha = a;
        best.gamma = gammas[j];
        best.predicted_ber = ber[j];
      }
    }
  }
  return best;
}

enum class Evaluator { Analytic, MonteCarlo };

struct ExhaustiveOptions {
  double alpha_step = 0.01;
  // Monte Carlo evaluator
  std::uint64_t bits_per_alpha = 100000;
  std::size_t block_symbols = 256;
  std::uint64_t seed = 1;  ///< stream root; the same blocks are reused for every alpha
  unsigned threads = 1;
};

/// Monte Carlo blocks needed for `bits` counted bits.
inline std::size_t trials_for_bits(const SchemeConfig& cfg, std::uint64_t bits, std::size_t block_symbols) {
  const auto per = static_cast<std::uint64_t>(block_symbols) * static_cast<std::uint64_t>(cfg.bits_per_symbol());
  return static_cast<std::size_t>(std::max<std::uint64_t>(1, (bits + per - 1) / per));
}

/// Warm-up long enough for the counted symbols to see the full channel memory.
inline std::size_t warmup_symbols(const SchemeConfig& cfg, const ChannelCoefficients& h) {
  const auto K = static_cast<std::size_t>(cfg.slots_per_symbol());
  return (h.size() + K - 1) / K;
}

/// Exhaustive (alpha, gamma) search for MCPM with the two-stage detector.
/// `Ls` is the analytic conditioning memory and is ignored by the Monte Carlo
/// evaluator, which simulates the full channel.
inline DesignPoint exhaustive_design_search(const SchemeConfig& cfg, const ChannelCoefficients& h, int Ls,
                                            Evaluator evaluator, const ExhaustiveOptions& opt = {}) {
  if (cfg.scheme != Scheme::MCPM) throw ConfigError("exhaustive_design_search: MCPM only");
  const auto alphas = alpha_grid(opt.alpha_step);
  const auto gammas = half_integer_grid(threshold_grid_size(cfg, h));
  if (evaluator == Evaluator::Analytic) {
    return grid_design_search(alphas, gammas, [&](double a) {
      SchemeConfig c = cfg;
      c.alpha = a;
      return analytic_ber_profile(c, h, gammas, Ls);
    });
  }
  const mc::BlockSpec spec{warmup_symbols(cfg, h), opt.block_symbols};
  const std::size_t trials = trials_for_bits(cfg, opt.bits_per_alpha, opt.block_symbols);
  return grid_design_search(alphas, gammas, [&](double a) {
    SchemeConfig c = cfg;
    c.alpha = a;
    const auto counts = mc::threshold_sweep(c, h, gammas.size(), spec, trials, opt.seed, opt.threads);
    const auto errs = counts.errors();
    std::vector<double> ber(errs.size());
    for (std::size_t j = 0; j < errs.size(); ++j) ber[j] = static_cast<double>(errs[j]) / static_cast<double>(counts.bits);
    return ber;
  });
}

/// Best BCSK threshold on a half-integer grid by Monte Carlo.
inline double bcsk_threshold_search(const SchemeConfig& cfg, const ChannelCoefficients& h, const ExhaustiveOptions& opt) {
  if (cfg.scheme != Scheme::BCSK) throw ConfigError("bcsk_threshold_search: BCSK only");
  const auto gammas = half_integer_grid(threshold_grid_size(cfg, h));
  const mc::BlockSpec spec{warmup_symbols(cfg, h), opt.block_symbols};
  const auto counts = mc::threshold_sweep(cfg, h, gammas.size(), spec,
                                          trials_for_bits(cfg, opt.bits_per_alpha, opt.block_symbols), opt.seed,
                                          opt.threads);
  const auto errs = counts.errors();
  const auto it = std::min_element(errs.begin(), errs.end());
  return gammas[static_cast<std::size_t>(it - errs.begin())];
}

}  // namespace mcpm
