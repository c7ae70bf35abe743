#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mcpm/modulation.hpp"

using namespace mcpm;

namespace {

SchemeConfig mcpm_cfg(int K, double M = 50.0, double alpha = 0.7, double tb = 0.3) {
  return {Scheme::MCPM, K, M, tb, alpha};
}

}  // namespace

TEST(SchemeConfig, Timing) {
  const auto c = mcpm_cfg(4);
  EXPECT_EQ(c.bits_per_symbol(), 3);
  EXPECT_DOUBLE_EQ(c.symbol_duration(), 0.9);
  EXPECT_NEAR(c.slot_duration(), 0.225, 1e-15);
  const SchemeConfig b{Scheme::BCSK, 1, 50.0, 0.3, 0.0};
  EXPECT_DOUBLE_EQ(b.slot_duration(), 0.3);
  const SchemeConfig p{Scheme::PPM, 8, 50.0, 0.3, 0.0};
  EXPECT_EQ(p.bits_per_symbol(), 3);
  EXPECT_NEAR(p.slot_duration(), 0.1125, 1e-15);
}

TEST(SchemeConfig, Validation) {
  EXPECT_THROW(mcpm_cfg(3).validate(), ConfigError);
  EXPECT_THROW(mcpm_cfg(1).validate(), ConfigError);
  EXPECT_THROW(mcpm_cfg(4, 50.0, 0.5).validate(), ConfigError);
  EXPECT_THROW(mcpm_cfg(4, 0.0).validate(), ConfigError);
  EXPECT_THROW((SchemeConfig{Scheme::BCSK, 2, 50.0, 0.3, 0.0}).validate(), ConfigError);
  EXPECT_NO_THROW(mcpm_cfg(8).validate());
}

TEST(SchemeConfig, NamesRoundTrip) {
  for (const char* n : {"BCSK", "2-PPM", "4-PPM", "8-PPM", "2-MCPM", "4-MCPM", "8-MCPM"}) {
    EXPECT_EQ(parse_scheme_name(n).name(), n);
  }
  EXPECT_THROW(parse_scheme_name("3-MCPM"), ConfigError);
  EXPECT_THROW(parse_scheme_name("4-FSK"), ConfigError);
  EXPECT_THROW(parse_scheme_name("x-PPM"), ConfigError);
  EXPECT_THROW(parse_scheme_name("4x-PPM"), ConfigError);
}

TEST(BitsToSymbols, Conventions) {
  const auto k4 = mcpm_cfg(4);
  EXPECT_EQ(bits_to_symbols(bits_from_string("001"), k4).front(), (McpmSymbol{1, true}));
  EXPECT_EQ(bits_to_symbols(bits_from_string("110"), k4).front(), (McpmSymbol{4, false}));
  EXPECT_EQ(bits_to_symbols(bits_from_string("10"), mcpm_cfg(2)).front(), (McpmSymbol{2, false}));
}

TEST(BitsToSymbols, RejectsPartialGroups) {
  EXPECT_THROW(bits_to_symbols(bits_from_string("0110"), mcpm_cfg(4)), ConfigError);
}

TEST(BitsToSymbols, RoundTrip) {
  std::mt19937_64 rng(3);
  for (auto cfg : {mcpm_cfg(2), mcpm_cfg(4), mcpm_cfg(8), SchemeConfig{Scheme::PPM, 4, 50, 0.3, 0},
                   SchemeConfig{Scheme::BCSK, 1, 50, 0.3, 0}}) {
    Bits b(static_cast<std::size_t>(cfg.bits_per_symbol()) * 40);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 1);
    EXPECT_EQ(symbols_to_bits(bits_to_symbols(b, cfg), cfg), b) << cfg.name();
  }
}

TEST(McpmSymbol, CodeBijection) {
  for (int n = 1; n <= 16; ++n) EXPECT_EQ(McpmSymbol::from_code(n).code(), n);
  const auto cfg = mcpm_cfg(8);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(symbol_index(symbol_from_index(i, cfg), cfg), i);
}

TEST(EmissionCount, Levels) {
  const auto c = mcpm_cfg(4, 50.0, 0.7);
  EXPECT_EQ(emitted_molecules({1, true}, c), 210);
  EXPECT_EQ(emitted_molecules({1, false}, c), 90);
  const auto half = mcpm_cfg(4, 50.0, 0.5);
  EXPECT_DOUBLE_EQ(symbol_emission_count({2, true}, half), symbol_emission_count({2, false}, half));
  EXPECT_DOUBLE_EQ(symbol_emission_count({2, true}, half), 150.0);
}

TEST(EmissionCount, RoundsToNearest) {
  const auto c = mcpm_cfg(2, 33.0, 0.761);
  EXPECT_NEAR(symbol_emission_count({1, true}, c), 100.452, 1e-9);
  EXPECT_EQ(emitted_molecules({1, true}, c), 100);
  EXPECT_EQ(emitted_molecules({1, false}, c), 32);  // 31.548
}

TEST(Modulate, McpmFrame) {
  const auto f = modulate(bits_from_string("01 10"), mcpm_cfg(2, 50.0, 0.8));
  EXPECT_EQ(f.N, (std::vector<Count>{160, 0, 0, 40}));
}

TEST(Modulate, BcskFrame) {
  const auto f = modulate(bits_from_string("101"), SchemeConfig{Scheme::BCSK, 1, 50.0, 0.3, 0.0});
  EXPECT_EQ(f.N, (std::vector<Count>{100, 0, 100}));
}

TEST(Modulate, PpmFrame) {
  const auto f = modulate(bits_from_string("10 01"), SchemeConfig{Scheme::PPM, 4, 50.0, 0.3, 0.0});
  EXPECT_EQ(f.N, (std::vector<Count>{0, 0, 100, 0, 0, 100, 0, 0}));
}

TEST(Modulate, OneNonzeroSlotPerMcpmSymbol) {
  const auto cfg = mcpm_cfg(8);
  std::mt19937_64 rng(11);
  Bits b(4 * 50);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 1);
  const auto f = modulate(b, cfg);
  ASSERT_EQ(f.N.size(), 50u * 8u);
  for (std::size_t k = 0; k < 50; ++k) {
    int nonzero = 0;
    for (std::size_t p = 0; p < 8; ++p) nonzero += f.N[k * 8 + p] != 0;
    EXPECT_EQ(nonzero, 1);
  }
}

TEST(Normalization, EquiprobableAverageIsM) {
  for (auto cfg : {mcpm_cfg(2, 37.0, 0.83), mcpm_cfg(4, 50.0, 0.7), mcpm_cfg(8, 21.0, 0.6),
                   SchemeConfig{Scheme::PPM, 2, 37.0, 0.3, 0}, SchemeConfig{Scheme::PPM, 8, 37.0, 0.3, 0},
                   SchemeConfig{Scheme::BCSK, 1, 37.0, 0.3, 0}}) {
    double total = 0.0;
    for (int i = 0; i < cfg.alphabet_size(); ++i) total += symbol_emission_count(symbol_from_index(i, cfg), cfg);
    EXPECT_NEAR(total / cfg.alphabet_size() / cfg.bits_per_symbol(), cfg.M, 1e-12) << cfg.name();
  }
}

TEST(Timing, FrameDurationEqualsBitsTimesTb) {
  for (auto cfg : {mcpm_cfg(2), mcpm_cfg(4), mcpm_cfg(8), SchemeConfig{Scheme::PPM, 4, 50, 0.3, 0},
                   SchemeConfig{Scheme::BCSK, 1, 50, 0.3, 0}}) {
    const std::size_t nbits = 24;
    const auto f = modulate(Bits(nbits, 0), cfg);
    EXPECT_NEAR(static_cast<double>(f.N.size()) * cfg.slot_duration(), nbits * cfg.tb, 1e-12) << cfg.name();
  }
}
