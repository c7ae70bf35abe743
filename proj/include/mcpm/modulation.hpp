#pragma once

// BCSK, K-PPM and K-MCPM transmitters under per-bit molecule (M) and bit
// duration (tb) normalization.

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcpm/channel.hpp"
#include "mcpm/errors.hpp"

namespace mcpm {

using Bits = std::vector<std::uint8_t>;

enum class Scheme { BCSK, PPM, MCPM };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::BCSK: return "BCSK";
    case Scheme::PPM: return "PPM";
    case Scheme::MCPM: return "MCPM";
  }
  return "?";
}

struct SchemeConfig {
  Scheme scheme = Scheme::MCPM;
  int K = 4;            ///< PPM order; 1 for BCSK
  double M = 50.0;      ///< average molecules per bit
  double tb = 0.3;      ///< bit duration [s]
  double alpha = 0.75;  ///< concentration split, MCPM only

  int log2K() const { return std::countr_zero(static_cast<unsigned>(K)); }

  int bits_per_symbol() const {
    switch (scheme) {
      case Scheme::BCSK: return 1;
      case Scheme::PPM: return log2K();
      case Scheme::MCPM: return 1 + log2K();
    }
    return 0;
  }

  /// Number of slots (sub-intervals) per symbol.
  int slots_per_symbol() const { return scheme == Scheme::BCSK ? 1 : K; }

  /// Size of the symbol alphabet.
  int alphabet_size() const {
    switch (scheme) {
      case Scheme::BCSK: return 2;
      case Scheme::PPM: return K;
      case Scheme::MCPM: return 2 * K;
    }
    return 0;
  }

  double symbol_duration() const { return bits_per_symbol() * tb; }
  double slot_duration() const { return symbol_duration() / slots_per_symbol(); }

  /// B = 2 M (1 + log2 K): emission budget scale of an MCPM symbol.
  double emission_scale() const { return 2.0 * M * (1.0 + log2K()); }

  void validate() const {
    if (scheme == Scheme::BCSK) {
      if (K != 1) throw ConfigError("BCSK requires K = 1");
    } else {
      if (K < 2 || !std::has_single_bit(static_cast<unsigned>(K))) {
        throw ConfigError("K must be a power of two >= 2, got " + std::to_string(K));
      }
    }
    if (!(M > 0.0)) throw ConfigError("M must be positive");
    if (!(tb > 0.0)) throw ConfigError("tb must be positive");
    if (scheme == Scheme::MCPM && !(alpha > 0.5 && alpha < 1.0)) {
      throw ConfigError("alpha must lie in (0.5, 1)");
    }
  }

  /// "BCSK", "4-PPM", "8-MCPM".
  std::string name() const {
    if (scheme == Scheme::BCSK) return "BCSK";
    return std::to_string(K) + "-" + std::string(to_string(scheme));
  }
};

/// Parses a scheme label such as "BCSK", "4-PPM" or "2-MCPM".
inline SchemeConfig parse_scheme_name(std::string_view label) {
  SchemeConfig cfg;
  if (label == "BCSK") {
    cfg.scheme = Scheme::BCSK;
    cfg.K = 1;
    return cfg;
  }
  const auto dash = label.find('-');
  if (dash == std::string_view::npos) throw ConfigError("unknown scheme '" + std::string(label) + "'");
  const auto kind = label.substr(dash + 1);
  if (kind == "PPM") {
    cfg.scheme = Scheme::PPM;
  } else if (kind == "MCPM") {
    cfg.scheme = Scheme::MCPM;
  } else {
    throw ConfigError("unknown scheme '" + std::string(label) + "'");
  }
  try {
    std::size_t used = 0;
    cfg.K = std::stoi(std::string(label.substr(0, dash)), &used);
    if (used != dash) throw ConfigError("bad scheme order");
  } catch (const std::logic_error&) {
    throw ConfigError("bad scheme order in '" + std::string(label) + "'");
  }
  if (cfg.K < 2 || !std::has_single_bit(static_cast<unsigned>(cfg.K))) {
    throw ConfigError("scheme order must be a power of two >= 2 in '" + std::string(label) + "'");
  }
  return cfg;
}

/// One transmitted symbol. BCSK uses ppm_bin = 1; PPM symbols always carry
/// csk_bit = 1 (the pulse is on).
struct McpmSymbol {
  int ppm_bin = 1;  ///< 1..K
  bool csk_bit = false;

  /// Integer label n in 1..2K of the bit vector (bin bits, csk bit).
  int code() const { return 2 * (ppm_bin - 1) + (csk_bit ? 1 : 0) + 1; }
  static McpmSymbol from_code(int n) { return {(n - 1) / 2 + 1, ((n - 1) & 1) != 0}; }

  friend bool operator==(const McpmSymbol&, const McpmSymbol&) = default;
};

using SymbolSequence = std::vector<McpmSymbol>;

/// Dense 0-based index of a symbol within its scheme's alphabet, ordered
/// lexicographically by (bin, concentration bit).
inline int symbol_index(const McpmSymbol& s, const SchemeConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::BCSK: return s.csk_bit ? 1 : 0;
    case Scheme::PPM: return s.ppm_bin - 1;
    case Scheme::MCPM: return s.code() - 1;
  }
  return 0;
}

inline McpmSymbol symbol_from_index(int i, const SchemeConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::BCSK: return {1, i != 0};
    case Scheme::PPM: return {i + 1, true};
    case Scheme::MCPM: return McpmSymbol::from_code(i + 1);
  }
  return {};
}

/// Hamming distance between the bit vectors of two MCPM symbols.
inline int symbol_bit_distance(const McpmSymbol& a, const McpmSymbol& b) {
  return std::popcount(static_cast<unsigned>((a.ppm_bin - 1) ^ (b.ppm_bin - 1))) + (a.csk_bit != b.csk_bit ? 1 : 0);
}

inline Bits bits_from_string(std::string_view s) {
  Bits out;
  for (char c : s) {
    if (c == '0' || c == '1') {
      out.push_back(static_cast<std::uint8_t>(c - '0'));
    } else if (c != ' ') {
      throw ConfigError("bit string may only contain 0, 1 and spaces");
    }
  }
  return out;
}

/// Groups bits per symbol. The first log2 K bits of a group, read MSB first,
/// select the bin (value + 1); for MCPM the last bit is the concentration bit.
inline SymbolSequence bits_to_symbols(std::span<const std::uint8_t> bits, const SchemeConfig& cfg) {
  const auto bps = static_cast<std::size_t>(cfg.bits_per_symbol());
  if (bits.size() % bps != 0) {
    throw ConfigError("bit count " + std::to_string(bits.size()) + " is not a multiple of " + std::to_string(bps));
  }
  const int pos_bits = cfg.scheme == Scheme::BCSK ? 0 : cfg.log2K();
  SymbolSequence out;
  out.reserve(bits.size() / bps);
  for (std::size_t i = 0; i < bits.size(); i += bps) {
    int value = 0;
    for (int b = 0; b < pos_bits; ++b) value = (value << 1) | (bits[i + b] & 1);
    McpmSymbol s{value + 1, true};
    if (cfg.scheme != Scheme::PPM) s.csk_bit = (bits[i + bps - 1] & 1) != 0;
    out.push_back(s);
  }
  return out;
}

inline Bits symbols_to_bits(const SymbolSequence& symbols, const SchemeConfig& cfg) {
  const int pos_bits = cfg.scheme == Scheme::BCSK ? 0 : cfg.log2K();
  Bits out;
  out.reserve(symbols.size() * static_cast<std::size_t>(cfg.bits_per_symbol()));
  for (const auto& s : symbols) {
    for (int b = pos_bits - 1; b >= 0; --b) out.push_back(static_cast<std::uint8_t>(((s.ppm_bin - 1) >> b) & 1));
    if (cfg.scheme != Scheme::PPM) out.push_back(s.csk_bit ? 1 : 0);
  }
  return out;
}

/// Real-valued molecule count of one emission (analytic formulas use this).
inline double symbol_emission_count(const McpmSymbol& sym, const SchemeConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::BCSK: return sym.csk_bit ? 2.0 * cfg.M : 0.0;
    case Scheme::PPM: return cfg.log2K() * cfg.M;
    case Scheme::MCPM: {
      const double scale = 2.0 * (1.0 + cfg.log2K()) * cfg.M;
      return sym.csk_bit ? cfg.alpha * scale : (1.0 - cfg.alpha) * scale;
    }
  }
  return 0.0;
}

/// Integer molecule count actually released (nearest integer).
inline Count emitted_molecules(const McpmSymbol& sym, const SchemeConfig& cfg) {
  return std::llround(symbol_emission_count(sym, cfg));
}

inline EmissionFrame symbols_to_frame(const SymbolSequence& symbols, const SchemeConfig& cfg) {
  const auto sps = static_cast<std::size_t>(cfg.slots_per_symbol());
  EmissionFrame f;
  f.N.assign(symbols.size() * sps, 0);
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    f.N[k * sps + static_cast<std::size_t>(symbols[k].ppm_bin - 1)] = emitted_molecules(symbols[k], cfg);
  }
  return f;
}

inline EmissionFrame modulate(std::span<const std::uint8_t> bits, const SchemeConfig& cfg) {
  cfg.validate();
  return symbols_to_frame(bits_to_symbols(bits, cfg), cfg);
}

}  // namespace mcpm
