#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mcpm/analysis.hpp"
#include "mcpm/channel.hpp"

using namespace mcpm;

namespace {

SchemeConfig mcpm_cfg(int K, double M, double alpha) { return {Scheme::MCPM, K, M, 0.3, alpha}; }

double poisson_cdf(int r, double mu) {
  double term = std::exp(-mu);
  double s = term;
  for (int i = 1; i <= r; ++i) {
    term *= mu / i;
    s += term;
  }
  return s;
}

std::vector<double> poisson_pmf(double mu, int n) {
  std::vector<double> p(static_cast<std::size_t>(n) + 1);
  for (int r = 0; r <= n; ++r) p[static_cast<std::size_t>(r)] = std::exp(r * std::log(mu) - mu - std::lgamma(r + 1.0));
  return p;
}

// Exact two-slot detection probabilities: enumerate both counts and apply the
// two-stage rule (ties to slot 1, concentration bit iff count > gamma).
double exact_event_k2(double mu1, double mu2, int bin, bool csk, double gamma, int n = 300) {
  const auto p1 = poisson_pmf(mu1, n);
  const auto p2 = poisson_pmf(mu2, n);
  double s = 0.0;
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; b <= n; ++b) {
      const int q = b > a ? 2 : 1;
      const int peak = q == 1 ? a : b;
      if (q == bin && (peak > gamma) == csk) s += p1[static_cast<std::size_t>(a)] * p2[static_cast<std::size_t>(b)];
    }
  }
  return s;
}

double tie_mass_k2(double mu1, double mu2, int n = 300) {
  const auto p1 = poisson_pmf(mu1, n);
  const auto p2 = poisson_pmf(mu2, n);
  double s = 0.0;
  for (int a = 0; a <= n; ++a) s += p1[static_cast<std::size_t>(a)] * p2[static_cast<std::size_t>(a)];
  return s;
}

}  // namespace

TEST(MaxOtherCdf, Limits) {
  const std::vector<double> m{4.0, 9.0, 16.0};
  EXPECT_NEAR(max_other_cdf(1e6, m), 1.0, 1e-15);
  EXPECT_NEAR(max_other_cdf(-1e6, m), 0.0, 1e-15);
  EXPECT_NEAR(max_other_cdf(7.0, std::vector<double>{7.0}), 0.5, 1e-15);
}

TEST(MaxOtherCdf, ThreeBinsAgainstPoisson) {
  const std::vector<double> m{4.0, 9.0, 16.0};
  const double exact = poisson_cdf(12, 4.0) * poisson_cdf(12, 9.0) * poisson_cdf(12, 16.0);
  EXPECT_NEAR(max_other_cdf(12.0, m), exact, 0.05);
}

TEST(MaxOtherCdf, ZeroAndNegativeMeans) {
  EXPECT_EQ(max_other_cdf(-0.5, std::vector<double>{0.0, 5.0}), 0.0);
  EXPECT_NEAR(max_other_cdf(5.0, std::vector<double>{0.0, 5.0}), 0.5, 1e-15);
  EXPECT_THROW(max_other_cdf(1.0, std::vector<double>{-1.0}), std::domain_error);
}

TEST(DetectionEvent, PartitionOfOutcomes) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    const int K = 2 << (i % 3);
    ConditionalContext ctx;
    ctx.sequence = {{1, true}};
    for (int p = 0; p < K; ++p) ctx.rates.push_back(0.5 + 80.0 * u(rng) * u(rng));
    const double gamma = 0.5 + std::floor(60.0 * u(rng));
    double s = 0.0;
    for (int b = 1; b <= K; ++b) {
      s += detection_event_probability(ctx, b, true, gamma) + detection_event_probability(ctx, b, false, gamma);
    }
    EXPECT_NEAR(s, 1.0, 1e-6) << i;
  }
}

TEST(DetectionEvent, PartitionWithZeroBins) {
  ConditionalContext ctx{{{2, false}}, {0.0, 12.0, 0.0, 3.0}};
  double s = 0.0;
  for (int b = 1; b <= 4; ++b) {
    s += detection_event_probability(ctx, b, true, 6.5) + detection_event_probability(ctx, b, false, 6.5);
  }
  EXPECT_NEAR(s, 1.0, 1e-6);
  EXPECT_EQ(detection_event_probability(ctx, 3, false, 6.5), 0.0);  // bin 1 wins all-zero ties
}

TEST(DetectionEvent, StrongPulse) {
  const ConditionalContext ctx{{{1, true}}, {100.0, 1.0}};
  const double v = detection_event_probability(ctx, 1, true, 50.0);
  EXPECT_GE(v, 0.99);
  EXPECT_NEAR(v, exact_event_k2(100.0, 1.0, 1, true, 50.0), 1e-3);
}

TEST(DetectionEvent, ZeroThresholdLowerTail) {
  const ConditionalContext ctx{{{1, true}}, {40.0, 5.0}};
  EXPECT_LT(detection_event_probability(ctx, 1, false, 0.0), 1e-9);
  EXPECT_THROW(detection_event_probability(ctx, 1, false, -1.0), std::domain_error);
}

TEST(DetectionEvent, GaussianCloseToExactForLargeMeans) {
  for (double mu1 : {10.0, 25.0, 60.0}) {
    for (double mu2 : {10.0, 18.0, 40.0}) {
      const ConditionalContext ctx{{{1, true}}, {mu1, mu2}};
      // Discrete ties all go to slot 1; the continuous model splits them evenly.
      const double tol = 0.02 + tie_mass_k2(mu1, mu2);
      for (double g : {8.5, 20.5, 35.5}) {
        for (int b = 1; b <= 2; ++b) {
          for (bool c : {false, true}) {
            EXPECT_NEAR(detection_event_probability(ctx, b, c, g), exact_event_k2(mu1, mu2, b, c, g), tol)
                << mu1 << " " << mu2 << " " << g << " " << b << c;
          }
        }
      }
    }
  }
}

TEST(ConditionalError, CleanContextIsErrorFree) {
  const auto cfg = mcpm_cfg(4, 50.0, 0.75);
  const ConditionalContext ctx{{{3, true}}, {0.0, 0.0, 400.0, 0.0}};
  EXPECT_LT(conditional_error_probability(ctx, 200.5, cfg), 1e-12);
}

TEST(ConditionalError, HypercubeAverageDistance) {
  // Mean normalized Hamming distance from any vertex to all 2K vertices is 1/2.
  for (int K : {2, 4, 8}) {
    const auto cfg = mcpm_cfg(K, 10.0, 0.7);
    for (int i = 0; i < 2 * K; ++i) {
      double s = 0.0;
      for (int j = 0; j < 2 * K; ++j) s += symbol_bit_distance(symbol_from_index(i, cfg), symbol_from_index(j, cfg));
      EXPECT_DOUBLE_EQ(s / (2 * K) / cfg.bits_per_symbol(), 0.5);
    }
  }
}

TEST(ConditionalError, MatchesMonteCarlo) {
  // Large counts keep the Gaussian model accurate at the 10^6-trial resolution.
  const auto cfg = mcpm_cfg(2, 10.0, 0.75);
  const ConditionalContext ctx{{{1, true}}, {2500.0, 2420.0}};
  const double gamma = 2470.5;
  const double predicted = conditional_error_probability(ctx, gamma, cfg);
  std::mt19937_64 rng(17);
  std::poisson_distribution<long> r1(2500.0), r2(2420.0);
  const int n = 1000000;
  long errors = 0;
  for (int i = 0; i < n; ++i) {
    const long a = r1(rng);
    const long b = r2(rng);
    const bool second = b > a;
    const long peak = second ? b : a;
    errors += (second ? 1 : 0) + (peak > gamma ? 0 : 1);
  }
  const double freq = static_cast<double>(errors) / (2.0 * n);
  // Per-symbol error fractions take values in {0, 1/2, 1}; the variance is bounded by 1/4 per symbol.
  double se = std::sqrt(0.25 / n);
  EXPECT_NEAR(predicted, freq, 3.0 * se);
}

TEST(AnalyticBer, VanishingNoise) {
  const auto cfg = mcpm_cfg(4, 5000.0, 0.75);
  const ChannelCoefficients h({0.3, 1e-6, 1e-6, 1e-6, 1e-6, 1e-6, 1e-6, 1e-6});
  const double mid = 0.5 * (cfg.emission_scale() * 0.3);
  EXPECT_LT(analytic_ber(cfg, h, std::floor(mid) + 0.5, 2), 1e-12);
}

TEST(AnalyticBer, GuardRefuses) {
  const auto cfg = mcpm_cfg(8, 50.0, 0.75);
  const ChannelCoefficients h(std::vector<double>(80, 0.01));
  EXPECT_THROW(analytic_ber(cfg, h, 10.5, 5), GuardError);
}

TEST(AnalyticBer, WithinUnitInterval) {
  const auto cfg = mcpm_cfg(2, 5.0, 0.6);
  const ChannelCoefficients h({0.2, 0.15, 0.1, 0.08});
  for (double g : {0.0, 0.5, 3.5, 10.5, 100.5}) {
    const double b = analytic_ber(cfg, h, g, 2);
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 1.0);
  }
}

TEST(AnalyticBer, ProfileMatchesPointwise) {
  const auto cfg = mcpm_cfg(4, 30.0, 0.72);
  const ChannelCoefficients h({0.2, 0.08, 0.05, 0.035, 0.026, 0.02, 0.016, 0.013});
  const std::vector<double> gammas{2.5, 7.5, 9.5, 14.5, 30.5};
  const auto prof = analytic_ber_profile(cfg, h, gammas, 2);
  for (std::size_t i = 0; i < gammas.size(); ++i) EXPECT_NEAR(prof[i], analytic_ber(cfg, h, gammas[i], 2), 1e-9);
}

TEST(AnalyticBer, ScalingDownDoesNotHelp) {
  const auto cfg = mcpm_cfg(2, 40.0, 0.75);
  const std::vector<double> base{0.2, 0.1, 0.05, 0.03};
  const double gamma = 20.5;
  double prev = -1.0;
  for (double c : {1.0, 0.8, 0.6, 0.4}) {
    std::vector<double> h = base;
    for (auto& x : h) x *= c;
    const double b = analytic_ber(cfg, ChannelCoefficients(h), gamma * c, 2);
    EXPECT_GE(b, prev - 1e-12) << c;
    prev = b;
  }
}

TEST(ExactBer, MatchesIndependentEnumeration) {
  // K = 2, Ls = 2: average the enumerated two-slot outcomes over the 16 contexts.
  const auto cfg = mcpm_cfg(2, 6.0, 0.75);
  const std::vector<double> h{0.3, 0.2, 0.12, 0.08};
  const double gamma = 6.5;
  double oracle = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const auto prev = symbol_from_index(i, cfg);
      const auto cur = symbol_from_index(j, cfg);
      double mu[2] = {0.0, 0.0};
      for (int p = 0; p < 2; ++p) {
        const int own = p - (cur.ppm_bin - 1);
        if (own >= 0) mu[p] += symbol_emission_count(cur, cfg) * h[static_cast<std::size_t>(own)];
        mu[p] += symbol_emission_count(prev, cfg) * h[static_cast<std::size_t>(2 + p - (prev.ppm_bin - 1))];
      }
      double e = 0.0;
      for (int b = 1; b <= 2; ++b) {
        for (bool c : {false, true}) {
          e += symbol_bit_distance(cur, {b, c}) / 2.0 * exact_event_k2(mu[0], mu[1], b, c, gamma, 120);
        }
      }
      oracle += e / 16.0;
    }
  }
  const ChannelCoefficients hc(h);
  EXPECT_NEAR(exact_tpcd_ber(cfg, hc, gamma, 2), oracle, 1e-9);
  const double approx = analytic_ber(cfg, hc, gamma, 2);
  ASSERT_GE(oracle, 1e-2);
  EXPECT_NEAR(approx / oracle, 1.0, 0.10);
}
