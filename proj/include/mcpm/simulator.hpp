#pragma once

// Seeded Monte Carlo BER experiments and parameter sweeps over M, tb and tau
// for BCSK, K-PPM and K-MCPM under a shared normalization.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcpm/channel.hpp"
#include "mcpm/detection.hpp"
#include "mcpm/errors.hpp"
#include "mcpm/modulation.hpp"
#include "mcpm/montecarlo.hpp"
#include "mcpm/optimizer.hpp"

namespace mcpm {

enum class DesignPolicy { Theoretical, Exhaustive, Fixed };

inline std::string_view to_string(DesignPolicy p) {
  switch (p) {
    case DesignPolicy::Theoretical: return "theoretical";
    case DesignPolicy::Exhaustive: return "exhaustive";
    case DesignPolicy::Fixed: return "fixed";
  }
  return "?";
}

inline DesignPolicy parse_design_policy(std::string_view s) {
  if (s == "theoretical") return DesignPolicy::Theoretical;
  if (s == "exhaustive") return DesignPolicy::Exhaustive;
  if (s == "fixed") return DesignPolicy::Fixed;
  throw ConfigError("unknown design policy '" + std::string(s) + "'");
}

/// How the channel truncation horizon t_total is chosen for each scheme.
enum class Horizon {
  BitMultiple,     ///< t_total = value * tb
  Seconds,         ///< t_total = value
  SymbolMultiple,  ///< t_total = value * symbol duration, i.e. L = value * K slots
};

enum class SweepAxis { M, tb, tau };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::M: return "M";
    case SweepAxis::tb: return "tb";
    case SweepAxis::tau: return "tau";
  }
  return "?";
}

inline SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "M") return SweepAxis::M;
  if (s == "tb") return SweepAxis::tb;
  if (s == "tau") return SweepAxis::tau;
  throw ConfigError("unknown sweep axis '" + std::string(s) + "'");
}

struct Experiment {
  std::vector<SchemeConfig> schemes;  ///< scheme and K are taken from here; M, tb from the experiment
  double M = 50.0;
  double tb = 0.3;
  ChannelParams channel;
  Horizon horizon = Horizon::BitMultiple;
  double horizon_value = 48.0;
  double tau = 0.0;

  DetectorKind mcpm_detector = DetectorKind::TPCD;
  int Ls = 3;  ///< MLSD memory; also the analytic memory of the exhaustive analytic evaluator

  DesignPolicy policy = DesignPolicy::Theoretical;
  double fixed_alpha = 0.75;
  std::optional<double> fixed_gamma;       ///< MCPM; omitted -> worst-case crossing at fixed_alpha
  std::optional<double> fixed_bcsk_gamma;  ///< BCSK; omitted -> Monte Carlo threshold search
  Evaluator search_evaluator = Evaluator::MonteCarlo;
  ExhaustiveOptions search;

  std::uint64_t bit_budget = 100000;
  std::uint64_t min_errors = 100;
  std::uint64_t max_bits = 10000000;
  std::size_t block_symbols = 256;
  std::size_t batch_blocks = 64;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  void validate() const {
    if (schemes.empty()) throw ConfigError("experiment needs at least one scheme");
    for (const auto& s : schemes) configured(s).validate();
    channel.validate();
    if (!(horizon_value > 0.0)) throw ConfigError("horizon must be positive");
    if (!(tau >= 0.0)) throw ConfigError("tau must be non-negative");
    if (Ls < 1) throw ConfigError("Ls must be >= 1");
    if (mcpm_detector != DetectorKind::TPCD && mcpm_detector != DetectorKind::MLSD) {
      throw ConfigError("MCPM detector must be TPCD or MLSD");
    }
    if (bit_budget == 0 || max_bits < bit_budget) throw ConfigError("need 0 < bit_budget <= max_bits");
    if (block_symbols == 0 || batch_blocks == 0) throw ConfigError("block and batch sizes must be positive");
    if (!(search.alpha_step > 0.0 && search.alpha_step < 0.5)) throw ConfigError("alpha step must lie in (0, 0.5)");
  }

  /// A scheme entry with the shared M and tb applied.
  SchemeConfig configured(SchemeConfig s) const {
    s.M = M;
    s.tb = tb;
    if (s.scheme == Scheme::MCPM && !(s.alpha > 0.5 && s.alpha < 1.0)) s.alpha = 0.75;
    return s;
  }

  double t_total(const SchemeConfig& s) const {
    switch (horizon) {
      case Horizon::BitMultiple: return horizon_value * tb;
      case Horizon::Seconds: return horizon_value;
      case Horizon::SymbolMultiple: return horizon_value * s.symbol_duration();
    }
    return 0.0;
  }

  ChannelCoefficients channel_for(const SchemeConfig& s) const {
    return channel_coefficients(channel, SlotGrid::from_horizon(s.slot_duration(), t_total(s), tau));
  }
};

struct BerEstimate {
  double ber = 0.0;
  std::uint64_t bit_errors = 0;
  std::uint64_t bits = 0;
  double ci95 = 0.0;  ///< Wilson score interval half-width

  static BerEstimate from_counts(std::uint64_t errors, std::uint64_t bits) {
    if (bits == 0) throw std::domain_error("BER estimate needs bits > 0");
    constexpr double z = 1.959963984540054;
    const double n = static_cast<double>(bits);
    const double p = static_cast<double>(errors) / n;
    const double z2n = z * z / n;
    const double half = z / (1.0 + z2n) * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n));
    return {p, errors, bits, half};
  }

  double lower() const { return bit_errors == 0 ? 0.0 : std::max(0.0, wilson_center() - ci95); }
  double upper() const { return std::min(1.0, wilson_center() + ci95); }

  double wilson_center() const {
    constexpr double z = 1.959963984540054;
    const double n = static_cast<double>(bits);
    return (ber + z * z / (2.0 * n)) / (1.0 + z * z / n);
  }
};

/// True when the two 95% intervals do not overlap.
inline bool ci_separated(const BerEstimate& a, const BerEstimate& b) {
  return a.upper() < b.lower() || b.upper() < a.lower();
}

struct SchemeResult {
  SchemeConfig cfg;  ///< alpha holds the design value actually used (MCPM)
  DetectorKind detector = DetectorKind::TPCD;
  std::optional<double> alpha;  ///< MCPM only
  std::optional<double> gamma;  ///< MCPM and BCSK
  std::optional<DesignPoint> design;
  std::size_t channel_slots = 0;
  BerEstimate estimate;
  double molecules_per_bit = 0.0;  ///< measured over the counted symbols
  std::uint64_t seed = 0;          ///< master seed
};

/// Stream roots of one scheme at one sweep value. Keys use the scheme name, so
/// adding or reordering schemes never changes another scheme's streams.
struct SchemeStreams {
  std::uint64_t evaluate = 0;
  std::uint64_t design = 0;

  static SchemeStreams of(std::uint64_t master, const SchemeConfig& s, std::size_t value_index) {
    const std::uint64_t key = mc::hash_label(s.name());
    return {mc::derive_seed(master, {static_cast<std::uint64_t>(mc::Purpose::Evaluate), key, value_index}),
            mc::derive_seed(master, {static_cast<std::uint64_t>(mc::Purpose::DesignSearch), key, value_index})};
  }
};

namespace detail {

struct BlockOutcome {
  std::uint64_t bits = 0;
  std::uint64_t errors = 0;
  std::uint64_t molecules = 0;
};

inline std::uint64_t count_bit_errors(const SymbolSequence& sent, const SymbolSequence& got, std::size_t from,
                                      const SchemeConfig& cfg) {
  std::uint64_t e = 0;
  for (std::size_t k = from; k < sent.size(); ++k) {
    const auto& a = sent[k];
    const auto& b = got[k];
    e += static_cast<std::uint64_t>(std::popcount(static_cast<unsigned>((a.ppm_bin - 1) ^ (b.ppm_bin - 1))));
    if (cfg.scheme != Scheme::PPM && a.csk_bit != b.csk_bit) ++e;
  }
  return e;
}

}  // namespace detail

/// Fills in the design of one scheme (alpha/gamma) according to the policy.
inline SchemeResult design_scheme(const Experiment& exp, const SchemeConfig& base, const ChannelCoefficients& h,
                                  const SchemeStreams& streams) {
  SchemeResult r;
  r.cfg = exp.configured(base);
  r.channel_slots = h.size();
  r.seed = exp.seed;
  ExhaustiveOptions search = exp.search;
  search.seed = streams.design;
  search.threads = exp.threads;
  search.block_symbols = exp.block_symbols;
  switch (r.cfg.scheme) {
    case Scheme::PPM:
      r.detector = DetectorKind::PpmArgmax;
      break;
    case Scheme::BCSK:
      r.detector = DetectorKind::BcskThreshold;
      r.gamma = exp.policy == DesignPolicy::Fixed && exp.fixed_bcsk_gamma ? *exp.fixed_bcsk_gamma
                                                                          : bcsk_threshold_search(r.cfg, h, search);
      break;
    case Scheme::MCPM: {
      r.detector = exp.mcpm_detector;
      DesignPoint d;
      switch (exp.policy) {
        case DesignPolicy::Theoretical: d = theoretical_design(r.cfg, h); break;
        case DesignPolicy::Exhaustive:
          d = exhaustive_design_search(r.cfg, h, exp.Ls, exp.search_evaluator, search);
          break;
        case DesignPolicy::Fixed: {
          SchemeConfig c = r.cfg;
          c.alpha = exp.fixed_alpha;
          c.validate();
          d = DesignPoint{exp.fixed_alpha, exp.fixed_gamma ? *exp.fixed_gamma : select_gamma(exp.fixed_alpha, c, h).gamma,
                          DesignMethod::Fixed, true, std::nullopt, {}};
          break;
        }
      }
      r.cfg.alpha = d.alpha;
      r.alpha = d.alpha;
      r.gamma = d.gamma;
      r.design = d;
      break;
    }
  }
  return r;
}

/// Simulates one designed scheme until the stopping rule holds: at least
/// `bit_budget` bits and `min_errors` errors, or `max_bits` bits. Trials run
/// in fixed-size batches and the rule is checked only between batches, so the
/// result does not depend on the thread count.
inline void simulate_scheme(const Experiment& exp, const ChannelCoefficients& h, std::uint64_t stream,
                            SchemeResult& r) {
  const SchemeConfig& cfg = r.cfg;
  const mc::BlockSpec spec{warmup_symbols(cfg, h), exp.block_symbols};
  std::optional<TrellisModel> trellis;
  if (cfg.scheme == Scheme::MCPM && r.detector == DetectorKind::MLSD) trellis.emplace(cfg, h, exp.Ls);
  const double gamma = r.gamma.value_or(0.0);

  auto run_block = [&](std::size_t t) {
    mc::Rng rng(mc::derive_seed(stream, {t}));
    const auto b = mc::simulate_block(cfg, h, spec, rng);
    SymbolSequence got;
    switch (cfg.scheme) {
      case Scheme::PPM: got = ppm_detect(b.trace, cfg.K); break;
      case Scheme::BCSK: {
        const auto bits = bcsk_detect(b.trace, gamma);
        got.resize(bits.size());
        for (std::size_t k = 0; k < bits.size(); ++k) got[k] = {1, bits[k] != 0};
        break;
      }
      case Scheme::MCPM: got = trellis ? mlsd_detect(b.trace, *trellis) : tpcd_detect(b.trace, cfg, gamma); break;
    }
    detail::BlockOutcome o;
    o.errors = detail::count_bit_errors(b.symbols, got, spec.warmup_symbols, cfg);
    o.bits = spec.counted_symbols * static_cast<std::uint64_t>(cfg.bits_per_symbol());
    const auto sps = static_cast<std::size_t>(cfg.slots_per_symbol());
    for (std::size_t m = spec.warmup_symbols * sps; m < b.frame.N.size(); ++m) {
      o.molecules += static_cast<std::uint64_t>(b.frame.N[m]);
    }
    return o;
  };

  std::uint64_t bits = 0;
  std::uint64_t errors = 0;
  std::uint64_t molecules = 0;
  std::size_t next = 0;
  std::vector<detail::BlockOutcome> batch(exp.batch_blocks);
  while (bits < exp.max_bits && (bits < exp.bit_budget || errors < exp.min_errors)) {
    mc::parallel_for(batch.size(), exp.threads, [&](std::size_t i) { batch[i] = run_block(next + i); });
    next += batch.size();
    for (const auto& o : batch) {
      bits += o.bits;
      errors += o.errors;
      molecules += o.molecules;
    }
  }
  r.estimate = BerEstimate::from_counts(errors, bits);
  r.molecules_per_bit = static_cast<double>(molecules) / static_cast<double>(bits);
}

namespace detail {

inline std::vector<SchemeResult> run_at(const Experiment& exp, std::size_t value_index) {
  exp.validate();
  std::vector<SchemeResult> out;
  out.reserve(exp.schemes.size());
  for (const auto& s : exp.schemes) {
    const SchemeConfig cfg = exp.configured(s);
    const auto h = exp.channel_for(cfg);
    const auto streams = SchemeStreams::of(exp.seed, cfg, value_index);
    auto r = design_scheme(exp, cfg, h, streams);
    simulate_scheme(exp, h, streams.evaluate, r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace detail

/// BER of every scheme of the experiment.
inline std::vector<SchemeResult> run_ber(const Experiment& exp) { return detail::run_at(exp, 0); }

struct SweepRow {
  double value = 0.0;
  SchemeResult result;
};

inline Experiment with_axis(Experiment exp, SweepAxis axis, double v) {
  switch (axis) {
    case SweepAxis::M: exp.M = v; break;
    case SweepAxis::tb: exp.tb = v; break;
    case SweepAxis::tau: exp.tau = v; break;
  }
  return exp;
}

/// Runs every scheme at every value of `axis`; channel and design are
/// recomputed per value. One row per (value, scheme), values outermost.
inline std::vector<SweepRow> sweep(SweepAxis axis, std::span<const double> values, const Experiment& base) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (!std::is_sorted(values.begin(), values.end())) throw ConfigError("sweep values must be ascending");
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (auto& r : detail::run_at(with_axis(base, axis, values[i]), i)) rows.push_back({values[i], std::move(r)});
  }
  return rows;
}

}  // namespace mcpm
