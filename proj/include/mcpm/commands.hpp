#pragma once

// The CLI subcommands as functions from a run configuration to a CSV table.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mcpm/analysis.hpp"
#include "mcpm/channel.hpp"
#include "mcpm/config.hpp"
#include "mcpm/csv.hpp"
#include "mcpm/optimizer.hpp"
#include "mcpm/simulator.hpp"

namespace mcpm {

inline const std::vector<std::string>& ber_header() {
  static const std::vector<std::string> h = {"scheme", "K",         "M",   "tb_s", "tau_s", "alpha", "gamma",
                                             "detector", "bits", "bit_errors", "ber",  "ci95",  "seed"};
  return h;
}

inline std::vector<std::string> ber_row(const Experiment& exp, const SchemeResult& r) {
  using csv::format_number;
  return {r.cfg.name(),
          format_number(r.cfg.K),
          format_number(exp.M),
          format_number(exp.tb),
          format_number(exp.tau),
          csv::format_optional(r.alpha),
          csv::format_optional(r.gamma),
          std::string(to_string(r.detector)),
          format_number(r.estimate.bits),
          format_number(r.estimate.bit_errors),
          format_number(r.estimate.ber),
          format_number(r.estimate.ci95),
          format_number(r.seed)};
}

/// Largest analytic memory whose context count stays at or below `max_contexts`.
inline int affordable_memory(const SchemeConfig& cfg, int wanted, std::size_t max_contexts = 4096) {
  int Ls = 1;
  std::size_t n = static_cast<std::size_t>(cfg.alphabet_size());
  while (Ls < wanted && n * static_cast<std::size_t>(cfg.alphabet_size()) <= max_contexts) {
    n *= static_cast<std::size_t>(cfg.alphabet_size());
    ++Ls;
  }
  return Ls;
}

/// Analytic conditioning memory for one scheme: the configured value, or the
/// whole channel memory capped at 4096 contexts.
inline int analytic_memory(const RunConfig& rc, const SchemeConfig& cfg, const ChannelCoefficients& h) {
  if (rc.analytic_Ls) return *rc.analytic_Ls;
  return affordable_memory(cfg, channel_memory_symbols(cfg, h));
}

/// Experiments of a run: one per sweep value, or the base experiment alone.
inline std::vector<Experiment> experiment_points(const RunConfig& rc) {
  if (!rc.sweep) return {rc.experiment};
  std::vector<Experiment> out;
  for (double v : rc.sweep->values) out.push_back(with_axis(rc.experiment, rc.sweep->axis, v));
  return out;
}

/// Channel taps: the [coeffs] grid when given, otherwise the first scheme's.
inline csv::Table cmd_coeffs(const RunConfig& rc) {
  const Experiment& e = rc.experiment;
  const SchemeConfig cfg = e.configured(e.schemes.front());
  const double ts = rc.coeffs_ts.value_or(cfg.slot_duration());
  SlotGrid g = SlotGrid::from_horizon(ts, std::max(ts, e.t_total(cfg)), e.tau);
  if (rc.coeffs_slots) g.slots = *rc.coeffs_slots;
  g.validate();
  const auto h = channel_coefficients(e.channel, g);
  csv::Table t{{"n", "h_n"}, {}};
  for (std::size_t n = 0; n < h.size(); ++n) t.add({csv::format_number(static_cast<std::uint64_t>(n + 1)),
                                                    csv::format_number(h[n])});
  return t;
}

/// Theoretical design of every MCPM scheme, plus the exhaustive or fixed
/// point when configured, each with its analytic BER.
inline csv::Table cmd_design(const RunConfig& rc) {
  csv::Table t{{"scheme", "K", "M", "tb_s", "tau_s", "method", "alpha", "gamma", "regime", "predicted_ber", "Ls",
                "note"},
               {}};
  const auto points = experiment_points(rc);
  for (std::size_t vi = 0; vi < points.size(); ++vi) {
    const Experiment& e = points[vi];
    for (const auto& s : e.schemes) {
      if (s.scheme != Scheme::MCPM) continue;
      const SchemeConfig cfg = e.configured(s);
      const auto h = e.channel_for(cfg);
      const int Ls = analytic_memory(rc, cfg, h);
      std::vector<DesignPoint> designs{theoretical_design(cfg, h)};
      const auto streams = SchemeStreams::of(e.seed, cfg, vi);
      if (rc.report_exhaustive || e.policy == DesignPolicy::Exhaustive) {
        Experiment x = e;
        x.policy = DesignPolicy::Exhaustive;
        designs.push_back(*design_scheme(x, cfg, h, streams).design);
      }
      if (e.policy == DesignPolicy::Fixed) designs.push_back(*design_scheme(e, cfg, h, streams).design);
      for (auto& d : designs) {
        SchemeConfig c = cfg;
        c.alpha = d.alpha;
        const double ber = analytic_ber(c, h, d.gamma, Ls);
        t.add({cfg.name(), csv::format_number(cfg.K), csv::format_number(e.M), csv::format_number(e.tb),
               csv::format_number(e.tau), std::string(to_string(d.method)), csv::format_number(d.alpha),
               csv::format_number(d.gamma), d.closed_form ? "closed_form" : "fallback", csv::format_number(ber),
               csv::format_number(Ls), d.note});
      }
    }
  }
  return t;
}

inline csv::Table cmd_simulate(const RunConfig& rc) {
  csv::Table t{ber_header(), {}};
  for (const auto& r : run_ber(rc.experiment)) t.add(ber_row(rc.experiment, r));
  return t;
}

inline csv::Table cmd_sweep(const RunConfig& rc) {
  if (!rc.sweep) throw ConfigError("sweep command needs a [sweep] section");
  csv::Table t{ber_header(), {}};
  for (const auto& row : sweep(rc.sweep->axis, rc.sweep->values, rc.experiment)) {
    t.add(ber_row(with_axis(rc.experiment, rc.sweep->axis, row.value), row.result));
  }
  return t;
}

/// Analytic, exact-Poisson (K = 2) and simulated BER of every MCPM scheme
/// with the two-stage detector.
inline csv::Table cmd_analytic(const RunConfig& rc) {
  csv::Table t{{"scheme", "K", "M", "tb_s", "tau_s", "alpha", "gamma", "Ls", "analytic_ber", "exact_ber", "sim_ber",
                "ci95", "bits", "bit_errors", "seed"},
               {}};
  const auto points = experiment_points(rc);
  for (std::size_t vi = 0; vi < points.size(); ++vi) {
    Experiment e = points[vi];
    e.mcpm_detector = DetectorKind::TPCD;
    for (const auto& s : e.schemes) {
      if (s.scheme != Scheme::MCPM) continue;
      const SchemeConfig cfg = e.configured(s);
      const auto h = e.channel_for(cfg);
      const auto streams = SchemeStreams::of(e.seed, cfg, vi);
      auto r = design_scheme(e, cfg, h, streams);
      const int Ls = analytic_memory(rc, r.cfg, h);
      const double analytic = analytic_ber(r.cfg, h, *r.gamma, Ls);
      std::optional<double> exact;
      if (rc.analytic_exact && cfg.K == 2) exact = exact_tpcd_ber(r.cfg, h, *r.gamma, Ls);
      simulate_scheme(e, h, streams.evaluate, r);
      t.add({cfg.name(), csv::format_number(cfg.K), csv::format_number(e.M), csv::format_number(e.tb),
             csv::format_number(e.tau), csv::format_number(*r.alpha), csv::format_number(*r.gamma),
             csv::format_number(Ls), csv::format_number(analytic), csv::format_optional(exact),
             csv::format_number(r.estimate.ber), csv::format_number(r.estimate.ci95),
             csv::format_number(r.estimate.bits), csv::format_number(r.estimate.bit_errors),
             csv::format_number(e.seed)});
    }
  }
  return t;
}

}  // namespace mcpm
