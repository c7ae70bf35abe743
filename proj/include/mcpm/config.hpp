#pragma once

// INI run configuration. Every key is listed in `schema()` with its unit;
// unknown sections or keys are rejected.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mcpm/errors.hpp"
#include "mcpm/simulator.hpp"

namespace mcpm {

struct ConfigKey {
  std::string_view section;
  std::string_view key;
  std::string_view unit;
  std::string_view meaning;
};

inline const std::vector<ConfigKey>& schema() {
  static const std::vector<ConfigKey> keys = {
      {"channel", "r0_um", "um", "transmitter to receiver-center distance"},
      {"channel", "rr_um", "um", "receiver radius"},
      {"channel", "D_um2_per_s", "um^2/s", "diffusion coefficient"},
      {"schemes", "list", "-", "comma-separated labels: BCSK, K-PPM, K-MCPM"},
      {"link", "M", "molecules/bit", "average molecules per bit"},
      {"link", "tb_s", "s", "bit duration"},
      {"link", "tau_s", "s", "receiver clock lag"},
      {"horizon", "mode", "-", "tb_multiple | seconds | symbol_multiple"},
      {"horizon", "value", "-", "t_total in units of the mode (tb, s, or symbol durations)"},
      {"detector", "mcpm", "-", "TPCD | MLSD"},
      {"detector", "Ls", "symbols", "MLSD memory"},
      {"design", "policy", "-", "theoretical | exhaustive | fixed"},
      {"design", "alpha", "-", "fixed-policy concentration split"},
      {"design", "gamma", "molecules", "fixed-policy MCPM threshold"},
      {"design", "bcsk_gamma", "molecules", "fixed-policy BCSK threshold"},
      {"design", "evaluator", "-", "exhaustive search evaluator: montecarlo | analytic"},
      {"design", "alpha_step", "-", "exhaustive search alpha grid step"},
      {"design", "bits_per_alpha", "bits", "Monte Carlo bits per alpha in threshold searches"},
      {"design", "report_exhaustive", "bool", "design command: add the exhaustive point"},
      {"simulation", "bit_budget", "bits", "minimum simulated bits per point"},
      {"simulation", "min_errors", "errors", "minimum bit errors per point"},
      {"simulation", "max_bits", "bits", "hard cap on simulated bits per point"},
      {"simulation", "block_symbols", "symbols", "counted symbols per trial block"},
      {"simulation", "batch_blocks", "blocks", "blocks between stopping-rule checks"},
      {"simulation", "seed", "-", "master seed (u64)"},
      {"simulation", "threads", "-", "worker threads"},
      {"sweep", "axis", "-", "M | tb | tau"},
      {"sweep", "values", "axis unit", "comma-separated ascending values"},
      {"analytic", "Ls", "symbols", "conditioning memory, or auto (whole channel)"},
      {"analytic", "exact", "bool", "add the exact Poisson column for K = 2"},
      {"coeffs", "ts_s", "s", "slot duration (default: first scheme's)"},
      {"coeffs", "slots", "slots", "number of taps L (default: from the horizon)"},
      {"output", "path", "-", "default CSV path"},
  };
  return keys;
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::M;
  std::vector<double> values;
};

struct RunConfig {
  Experiment experiment;
  std::optional<SweepSpec> sweep;
  std::optional<int> analytic_Ls;  ///< empty -> whole channel memory
  bool analytic_exact = true;
  bool report_exhaustive = false;
  std::optional<double> coeffs_ts;
  std::optional<std::size_t> coeffs_slots;
  std::string output_path;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (at <= s.size()) {
    const auto comma = s.find(',', at);
    const auto piece = trim(s.substr(at, comma == std::string_view::npos ? std::string_view::npos : comma - at));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    at = comma + 1;
  }
  return out;
}

inline std::string where(std::string_view section, std::string_view key) {
  return "[" + std::string(section) + "] " + std::string(key);
}

inline double to_double(const std::string& s, std::string_view section, std::string_view key) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ConfigError(where(section, key) + ": expected a number, got '" + s + "'");
  }
  return v;
}

inline std::uint64_t to_u64(const std::string& s, std::string_view section, std::string_view key) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ConfigError(where(section, key) + ": expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

inline bool to_bool(const std::string& s, std::string_view section, std::string_view key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(where(section, key) + ": expected true or false, got '" + s + "'");
}

}  // namespace config_detail

/// Parses an INI document into a run configuration.
inline RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  using namespace config_detail;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      const bool known = std::any_of(schema().begin(), schema().end(),
                                     [&](const ConfigKey& k) { return k.section == section && k.key == key; });
      if (!known) throw ConfigError("unknown key " + where(section, key));
    }
  }
  auto get = [&tree](std::string_view section, std::string_view key) -> std::optional<std::string> {
    const auto s = tree.get_child_optional(pt::ptree::path_type(std::string(section), '\0'));
    if (!s) return std::nullopt;
    const auto v = s->get_optional<std::string>(pt::ptree::path_type(std::string(key), '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  };
  auto num = [&](std::string_view s, std::string_view k, double& dst) {
    if (auto v = get(s, k)) dst = to_double(*v, s, k);
  };
  auto u64 = [&](std::string_view s, std::string_view k, auto& dst) {
    if (auto v = get(s, k)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(to_u64(*v, s, k));
  };

  RunConfig rc;
  Experiment& e = rc.experiment;
  num("channel", "r0_um", e.channel.r0);
  num("channel", "rr_um", e.channel.rr);
  num("channel", "D_um2_per_s", e.channel.D);

  if (auto v = get("schemes", "list")) {
    for (const auto& label : split_list(*v)) e.schemes.push_back(parse_scheme_name(label));
  }
  num("link", "M", e.M);
  num("link", "tb_s", e.tb);
  num("link", "tau_s", e.tau);

  if (auto v = get("horizon", "mode")) {
    if (*v == "tb_multiple") {
      e.horizon = Horizon::BitMultiple;
    } else if (*v == "seconds") {
      e.horizon = Horizon::Seconds;
    } else if (*v == "symbol_multiple") {
      e.horizon = Horizon::SymbolMultiple;
    } else {
      throw ConfigError("[horizon] mode: unknown value '" + *v + "'");
    }
  }
  num("horizon", "value", e.horizon_value);

  if (auto v = get("detector", "mcpm")) {
    if (*v == "TPCD") {
      e.mcpm_detector = DetectorKind::TPCD;
    } else if (*v == "MLSD") {
      e.mcpm_detector = DetectorKind::MLSD;
    } else {
      throw ConfigError("[detector] mcpm: expected TPCD or MLSD, got '" + *v + "'");
    }
  }
  u64("detector", "Ls", e.Ls);

  if (auto v = get("design", "policy")) e.policy = parse_design_policy(*v);
  num("design", "alpha", e.fixed_alpha);
  if (auto v = get("design", "gamma")) e.fixed_gamma = to_double(*v, "design", "gamma");
  if (auto v = get("design", "bcsk_gamma")) e.fixed_bcsk_gamma = to_double(*v, "design", "bcsk_gamma");
  if (auto v = get("design", "evaluator")) {
    if (*v == "montecarlo") {
      e.search_evaluator = Evaluator::MonteCarlo;
    } else if (*v == "analytic") {
      e.search_evaluator = Evaluator::Analytic;
    } else {
      throw ConfigError("[design] evaluator: expected montecarlo or analytic, got '" + *v + "'");
    }
  }
  num("design", "alpha_step", e.search.alpha_step);
  u64("design", "bits_per_alpha", e.search.bits_per_alpha);
  if (auto v = get("design", "report_exhaustive")) rc.report_exhaustive = to_bool(*v, "design", "report_exhaustive");

  u64("simulation", "bit_budget", e.bit_budget);
  u64("simulation", "min_errors", e.min_errors);
  u64("simulation", "max_bits", e.max_bits);
  u64("simulation", "block_symbols", e.block_symbols);
  u64("simulation", "batch_blocks", e.batch_blocks);
  u64("simulation", "seed", e.seed);
  u64("simulation", "threads", e.threads);

  const auto axis = get("sweep", "axis");
  const auto values = get("sweep", "values");
  if (axis || values) {
    if (!axis || !values) throw ConfigError("[sweep] needs both axis and values");
    SweepSpec s;
    s.axis = parse_sweep_axis(*axis);
    for (const auto& x : split_list(*values)) s.values.push_back(to_double(x, "sweep", "values"));
    if (s.values.empty()) throw ConfigError("[sweep] values: empty list");
    if (!std::is_sorted(s.values.begin(), s.values.end())) throw ConfigError("[sweep] values must be ascending");
    rc.sweep = std::move(s);
  }

  if (auto v = get("analytic", "Ls"); v && *v != "auto") {
    rc.analytic_Ls = static_cast<int>(to_u64(*v, "analytic", "Ls"));
    if (*rc.analytic_Ls < 1) throw ConfigError("[analytic] Ls must be >= 1");
  }
  if (auto v = get("analytic", "exact")) rc.analytic_exact = to_bool(*v, "analytic", "exact");

  if (auto v = get("coeffs", "ts_s")) rc.coeffs_ts = to_double(*v, "coeffs", "ts_s");
  if (auto v = get("coeffs", "slots")) rc.coeffs_slots = static_cast<std::size_t>(to_u64(*v, "coeffs", "slots"));
  if (auto v = get("output", "path")) rc.output_path = *v;

  e.validate();
  return rc;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace mcpm
