#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mcpm/channel.hpp"
#include "mcpm/detection.hpp"
#include "mcpm/modulation.hpp"

using namespace mcpm;

namespace {

SchemeConfig mcpm_cfg(int K, double M = 10.0, double alpha = 0.8) { return {Scheme::MCPM, K, M, 0.3, alpha}; }

ArrivalTrace trace_of(std::vector<Count> r) { return ArrivalTrace{std::move(r)}; }

SymbolSequence random_symbols(std::size_t S, const SchemeConfig& cfg, std::mt19937_64& rng) {
  SymbolSequence s(S);
  for (auto& x : s) x = symbol_from_index(static_cast<int>(rng() % static_cast<unsigned>(cfg.alphabet_size())), cfg);
  return s;
}

// Poisson log-likelihood written out directly: rates by explicit convolution
// with the first K Ls taps, then sum of log-pmfs without the factorial term.
double direct_log_likelihood(const std::vector<Count>& R, const SymbolSequence& cand, const SchemeConfig& cfg,
                             const std::vector<double>& h, int Ls) {
  const int K = cfg.K;
  std::vector<double> N(R.size(), 0.0);
  for (std::size_t k = 0; k < cand.size(); ++k) {
    N[k * K + cand[k].ppm_bin - 1] = static_cast<double>(emitted_molecules(cand[k], cfg));
  }
  double ll = 0.0;
  for (std::size_t m = 0; m < R.size(); ++m) {
    double lam = 0.0;
    for (std::size_t n = 0; n < static_cast<std::size_t>(K * Ls) && n < h.size() && n <= m; ++n) lam += N[m - n] * h[n];
    if (lam == 0.0) {
      if (R[m] > 0) return -INFINITY;
      continue;
    }
    ll += R[m] * std::log(lam) - lam;
  }
  return ll;
}

}  // namespace

TEST(LogLikelihood, MatchesDirectPoissonSum) {
  const auto cfg = mcpm_cfg(2, 5.0, 0.8);  // emissions 16 and 4
  const std::vector<double> h{0.5, 0.25, 0.125, 0.0625, 0.03};
  const ChannelCoefficients hc(h);
  const std::vector<Count> R{7, 2, 1, 5, 0, 3};
  const SymbolSequence cand{{1, true}, {2, false}, {1, false}};
  const double got = sequence_log_likelihood(trace_of(R), cand, cfg, hc, 2);
  EXPECT_NEAR(got, direct_log_likelihood(R, cand, cfg, h, 2), 1e-12);
  EXPECT_NEAR(sequence_log_likelihood(trace_of(R), cand, cfg, hc, 3), direct_log_likelihood(R, cand, cfg, h, 3), 1e-12);
}

TEST(LogLikelihood, HandComputedSmallCase) {
  // K = 2, Ls = 2, emissions high = 16, low = 4, taps (0.5, 0.25, 0.125, 0.0625).
  const auto cfg = mcpm_cfg(2, 5.0, 0.8);
  const ChannelCoefficients h({0.5, 0.25, 0.125, 0.0625});
  const std::vector<Count> R{7, 2, 1, 5};
  const SymbolSequence cand{{1, true}, {2, false}};
  // slot1: 16*0.5 = 8; slot2: 16*0.25 = 4; slot3: 16*0.125 = 2; slot4: 16*0.0625 + 4*0.5 = 3.
  const double hand = (7 * std::log(8.0) - 8.0) + (2 * std::log(4.0) - 4.0) + (1 * std::log(2.0) - 2.0) +
                      (5 * std::log(3.0) - 3.0);
  EXPECT_NEAR(sequence_log_likelihood(trace_of(R), cand, cfg, h, 2), hand, 1e-12);
}

TEST(LogLikelihood, ZeroTraceIsMinusTotalRate) {
  const auto cfg = mcpm_cfg(2, 5.0, 0.8);
  const ChannelCoefficients h({0.5, 0.25, 0.125, 0.0625});
  const SymbolSequence cand{{1, false}, {1, false}};
  const double v = sequence_log_likelihood(trace_of({0, 0, 0, 0}), cand, cfg, h, 2);
  EXPECT_NEAR(v, -4.0 * (0.5 + 0.25 + 0.125 + 0.0625) - 4.0 * (0.5 + 0.25), 1e-12);
}

TEST(LogLikelihood, ImpossibleCandidate) {
  const auto cfg = mcpm_cfg(2, 5.0, 0.8);
  const ChannelCoefficients h({0.5, 0.0, 0.0, 0.0});
  // Pulse in slot 2 only; a candidate with bin 1 cannot produce counts in slot 2.
  const double v = sequence_log_likelihood(trace_of({0, 3}), SymbolSequence{{1, true}}, cfg, h, 1);
  EXPECT_TRUE(std::isinf(v) && v < 0);
}

TEST(LogLikelihood, NoiselessDominance) {
  const auto cfg = mcpm_cfg(4, 2000.0, 0.8);
  const ChannelCoefficients h({0.3, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001});
  const SymbolSequence a{{2, true}, {3, false}};
  const SymbolSequence b{{4, true}, {3, false}};
  std::vector<Count> R(8);
  const auto lam = arrival_rates(symbols_to_frame(a, cfg), h);
  for (std::size_t m = 0; m < 8; ++m) R[m] = std::llround(lam[m]);
  EXPECT_GT(sequence_log_likelihood(trace_of(R), a, cfg, h, 2), sequence_log_likelihood(trace_of(R), b, cfg, h, 2));
}

TEST(Mlsd, NoiselessTraceRecovered) {
  const auto cfg = mcpm_cfg(4, 5000.0, 0.8);
  const ChannelCoefficients h({0.3, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001, 0.0005, 0.0002, 0.0001, 0.00005});
  std::mt19937_64 rng(4);
  const auto s = random_symbols(20, cfg, rng);
  const auto lam = arrival_rates(symbols_to_frame(s, cfg), h);
  ArrivalTrace t;
  for (double l : lam) t.R.push_back(std::llround(l));
  EXPECT_EQ(mlsd_detect(t, cfg, h, 3), s);
}

TEST(Mlsd, ZeroTraceGivesLowConcentration) {
  const auto cfg = mcpm_cfg(2, 20.0, 0.8);
  const ChannelCoefficients h({0.3, 0.15, 0.08, 0.04, 0.02, 0.01});
  const auto out = mlsd_detect(trace_of(std::vector<Count>(10, 0)), cfg, h, 3);
  for (const auto& s : out) EXPECT_FALSE(s.csk_bit);
  EXPECT_EQ(out, exhaustive_mlsd_detect(trace_of(std::vector<Count>(10, 0)), cfg, h, 3));
}

TEST(Mlsd, AgreesWithExhaustiveSearch) {
  std::mt19937_64 rng(2024);
  const ChannelCoefficients h2({0.25, 0.12, 0.07, 0.04, 0.025, 0.015});
  const ChannelCoefficients h4({0.2, 0.1, 0.06, 0.04, 0.03, 0.02, 0.015, 0.01});
  int checked = 0;
  for (int K : {2, 4}) {
    for (int Ls : {1, 2, 3}) {
      if (K == 4 && Ls == 3) continue;
      const auto& h = K == 2 ? h2 : h4;
      for (int i = 0; i < 40; ++i) {
        const auto cfg = mcpm_cfg(K, 4.0 + static_cast<double>(rng() % 20), 0.6 + 0.3 * (rng() % 100) / 100.0);
        const std::size_t S = 1 + rng() % (K == 2 ? 6 : 4);
        std::mt19937_64 ch(rng());
        const auto s = random_symbols(S, cfg, rng);
        const auto t = simulate_arrivals(symbols_to_frame(s, cfg), h, ch);
        ASSERT_EQ(mlsd_detect(t, cfg, h, Ls), exhaustive_mlsd_detect(t, cfg, h, Ls))
            << "K=" << K << " Ls=" << Ls << " i=" << i;
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 200);
}

TEST(Mlsd, TiesResolveLexicographically) {
  // With no signal at all every candidate scores zero: the smallest sequence wins.
  const auto cfg = mcpm_cfg(2, 5.0, 0.8);
  const ChannelCoefficients h({0.0, 0.0, 0.0, 0.0});
  const auto out = mlsd_detect(trace_of({0, 0, 0, 0, 0, 0}), cfg, h, 2);
  EXPECT_EQ(out, (SymbolSequence{{1, false}, {1, false}, {1, false}}));
  EXPECT_EQ(out, exhaustive_mlsd_detect(trace_of({0, 0, 0, 0, 0, 0}), cfg, h, 2));
}

TEST(Mlsd, SingleSymbolMatchesDirectArgmax) {
  const auto cfg = mcpm_cfg(4, 10.0, 0.75);
  const ChannelCoefficients h({0.3, 0.1, 0.05, 0.02});
  const std::vector<Count> R{2, 9, 3, 1};
  double best = -INFINITY;
  McpmSymbol arg{};
  for (int i = 0; i < 8; ++i) {
    const SymbolSequence c{symbol_from_index(i, cfg)};
    const double v = sequence_log_likelihood(trace_of(R), c, cfg, h, 1);
    if (v > best) {
      best = v;
      arg = c[0];
    }
  }
  EXPECT_EQ(exhaustive_mlsd_detect(trace_of(R), cfg, h, 1), SymbolSequence{arg});
  EXPECT_EQ(mlsd_detect(trace_of(R), cfg, h, 1), SymbolSequence{arg});
}

TEST(Mlsd, ExhaustiveGuard) {
  const auto cfg = mcpm_cfg(4);
  const ChannelCoefficients h({0.3, 0.1});
  EXPECT_THROW(exhaustive_mlsd_detect(trace_of(std::vector<Count>(4 * 8, 1)), cfg, h, 1), GuardError);
}

TEST(Tpcd, Examples) {
  const auto k4 = mcpm_cfg(4);
  EXPECT_EQ(tpcd_detect(trace_of({3, 9, 2, 5}), k4, 6.5).front(), (McpmSymbol{2, true}));
  EXPECT_EQ(tpcd_detect(trace_of({3, 9, 2, 5}), k4, 9.0).front(), (McpmSymbol{2, false}));
  EXPECT_EQ(tpcd_detect(trace_of({7, 7}), mcpm_cfg(2), 5.0).front(), (McpmSymbol{1, true}));
  EXPECT_THROW(tpcd_detect(trace_of({1, 2}), mcpm_cfg(2), -1.0), std::domain_error);
  EXPECT_THROW(tpcd_detect(trace_of({1, 2, 3}), mcpm_cfg(2), 1.0), ConfigError);
}

TEST(Tpcd, ThresholdMonotone) {
  std::mt19937_64 rng(8);
  const auto cfg = mcpm_cfg(4);
  ArrivalTrace t;
  for (int i = 0; i < 400; ++i) t.R.push_back(static_cast<Count>(rng() % 30));
  auto prev = tpcd_detect(t, cfg, 0.0);
  for (double g = 0.5; g < 32.0; g += 0.5) {
    const auto cur = tpcd_detect(t, cfg, g);
    for (std::size_t k = 0; k < cur.size(); ++k) {
      EXPECT_EQ(cur[k].ppm_bin, prev[k].ppm_bin);
      EXPECT_FALSE(cur[k].csk_bit && !prev[k].csk_bit);
    }
    prev = cur;
  }
}

TEST(Baselines, Bcsk) {
  EXPECT_EQ(bcsk_detect(trace_of({12, 3}), 7.5), bits_from_string("10"));
  EXPECT_EQ(bcsk_detect(trace_of({7, 8}), 7.0), bits_from_string("01"));
}

TEST(Baselines, Ppm) {
  EXPECT_EQ(ppm_detect(trace_of({0, 0, 1, 0}), 4).front().ppm_bin, 3);
  EXPECT_EQ(ppm_detect(trace_of({0, 0, 0, 0}), 4).front().ppm_bin, 1);
}

TEST(Detectors, Deterministic) {
  const auto cfg = mcpm_cfg(2, 20.0);
  const ChannelCoefficients h({0.3, 0.15, 0.08, 0.04, 0.02, 0.01});
  std::mt19937_64 rng(12);
  const auto s = random_symbols(50, cfg, rng);
  const auto t = simulate_arrivals(symbols_to_frame(s, cfg), h, rng);
  EXPECT_EQ(mlsd_detect(t, cfg, h, 3), mlsd_detect(t, cfg, h, 3));
  EXPECT_EQ(tpcd_detect(t, cfg, 10.5), tpcd_detect(t, cfg, 10.5));
}
