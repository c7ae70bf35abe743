#pragma once

// Symbol detectors: maximum-likelihood sequence detection over the truncated
// LTI-Poisson model (Viterbi and brute force), the two-stage
// position/concentration detector, and the BCSK / PPM baselines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mcpm/channel.hpp"
#include "mcpm/errors.hpp"
#include "mcpm/modulation.hpp"

namespace mcpm {

enum class DetectorKind { MLSD, TPCD, ExhaustiveMLSD, BcskThreshold, PpmArgmax };

inline std::string_view to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::MLSD: return "MLSD";
    case DetectorKind::TPCD: return "TPCD";
    case DetectorKind::ExhaustiveMLSD: return "ExhaustiveMLSD";
    case DetectorKind::BcskThreshold: return "BcskThreshold";
    case DetectorKind::PpmArgmax: return "PpmArgmax";
  }
  return "?";
}

struct DetectorConfig {
  DetectorKind kind = DetectorKind::TPCD;
  int Ls = 3;          ///< symbol memory of the sequence detectors
  double gamma = 0.0;  ///< concentration threshold (TPCD, BCSK)
};

/// Time-invariant branch statistics of the truncated channel
/// (taps h_1..h_{K Ls}) for a trellis whose state is the previous Ls - 1
/// symbols.
///
/// Symbols are dense alphabet indices; the extra index `alphabet()` marks a
/// silent (pre-block) position. State digit 0 is the most recent symbol.
/// Rates are built from the integer emission counts the transmitter releases.
class TrellisModel {
public:
  static constexpr std::size_t max_table_entries = std::size_t{1} << 24;

  TrellisModel(const SchemeConfig& cfg, const ChannelCoefficients& h, int Ls)
      : cfg_(cfg), Ls_(Ls), A_(cfg.alphabet_size()), K_(cfg.slots_per_symbol()) {
    cfg.validate();
    if (Ls < 1) throw ConfigError("symbol memory Ls must be >= 1");
    base_ = static_cast<std::size_t>(A_) + 1;
    n_states_ = 1;
    for (int j = 0; j < Ls - 1; ++j) {
      n_states_ *= base_;
      if (n_states_ * static_cast<std::size_t>(A_ * K_) > max_table_entries) {
        throw GuardError("trellis too large; lower Ls");
      }
    }
    top_ = n_states_ / base_;  // base^(Ls-2), unused when Ls == 1

    const std::size_t taps = static_cast<std::size_t>(K_) * static_cast<std::size_t>(Ls);
    std::vector<double> tap(taps, 0.0);
    for (std::size_t n = 0; n < std::min(taps, h.size()); ++n) tap[n] = h[n];

    std::vector<double> emit(base_, 0.0);
    std::vector<int> slot(base_, 0);
    for (int i = 0; i < A_; ++i) {
      const auto s = symbol_from_index(i, cfg);
      emit[i] = static_cast<double>(emitted_molecules(s, cfg));
      slot[i] = s.ppm_bin - 1;
    }

    rate_.assign(n_states_ * static_cast<std::size_t>(A_ * K_), 0.0);
    log_rate_.assign(rate_.size(), 0.0);
    std::vector<int> digits(static_cast<std::size_t>(std::max(Ls - 1, 0)));
    for (std::size_t st = 0; st < n_states_; ++st) {
      std::size_t rem = st;
      for (auto& d : digits) {
        d = static_cast<int>(rem % base_);
        rem /= base_;
      }
      for (int c = 0; c < A_; ++c) {
        for (int p = 0; p < K_; ++p) {
          double lam = 0.0;
          if (p >= slot[c]) lam += emit[c] * tap[static_cast<std::size_t>(p - slot[c])];
          for (int j = 1; j < Ls; ++j) {
            const int d = digits[static_cast<std::size_t>(j - 1)];
            if (d == A_) continue;
            const std::size_t off = static_cast<std::size_t>(j * K_ + p - slot[d]);
            if (off < taps) lam += emit[d] * tap[off];
          }
          const std::size_t at = index(st, c, p);
          rate_[at] = lam;
          log_rate_[at] = lam > 0.0 ? std::log(lam) : -std::numeric_limits<double>::infinity();
        }
      }
    }
  }

  const SchemeConfig& scheme() const { return cfg_; }
  int memory() const { return Ls_; }
  int alphabet() const { return A_; }
  int slots_per_symbol() const { return K_; }
  std::size_t state_count() const { return n_states_; }

  /// The all-silent state the block starts from.
  std::size_t initial_state() const { return n_states_ - 1; }

  std::size_t next_state(std::size_t st, int c) const {
    if (Ls_ == 1) return 0;
    return static_cast<std::size_t>(c) + base_ * (st % top_);
  }

  double rate(std::size_t st, int c, int p) const { return rate_[index(st, c, p)]; }

  /// sum_p R_p ln(lambda_p) - lambda_p over one symbol's slots. A zero rate
  /// contributes nothing when R_p = 0 and makes the branch impossible otherwise.
  double branch_metric(const Count* R, std::size_t st, int c) const {
    const std::size_t at = index(st, c, 0);
    double m = 0.0;
    for (int p = 0; p < K_; ++p) {
      const double lam = rate_[at + static_cast<std::size_t>(p)];
      if (lam == 0.0) {
        if (R[p] > 0) return -std::numeric_limits<double>::infinity();
        continue;
      }
      m += static_cast<double>(R[p]) * log_rate_[at + static_cast<std::size_t>(p)] - lam;
    }
    return m;
  }

private:
  std::size_t index(std::size_t st, int c, int p) const {
    return (st * static_cast<std::size_t>(A_) + static_cast<std::size_t>(c)) * static_cast<std::size_t>(K_) +
           static_cast<std::size_t>(p);
  }

  SchemeConfig cfg_;
  int Ls_;
  int A_;
  int K_;
  std::size_t base_ = 0;
  std::size_t n_states_ = 0;
  std::size_t top_ = 1;
  std::vector<double> rate_;
  std::vector<double> log_rate_;
};

namespace detail {

inline void require_whole_symbols(const ArrivalTrace& trace, int K) {
  if (trace.R.size() % static_cast<std::size_t>(K) != 0) {
    throw ConfigError("trace length " + std::to_string(trace.R.size()) + " is not a multiple of " + std::to_string(K));
  }
}

inline std::vector<int> to_indices(const SymbolSequence& s, const SchemeConfig& cfg) {
  std::vector<int> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = symbol_index(s[i], cfg);
  return out;
}

inline SymbolSequence from_indices(const std::vector<int>& idx, const SchemeConfig& cfg) {
  SymbolSequence out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = symbol_from_index(idx[i], cfg);
  return out;
}

}  // namespace detail

/// Log-likelihood (up to the sum of ln R_m!) of a candidate sequence, with
/// silence before the block.
inline double sequence_log_likelihood(const ArrivalTrace& trace, const SymbolSequence& candidate,
                                      const TrellisModel& model) {
  const auto K = static_cast<std::size_t>(model.slots_per_symbol());
  if (trace.R.size() != candidate.size() * K) throw ConfigError("candidate length does not match trace");
  double total = 0.0;
  std::size_t st = model.initial_state();
  for (std::size_t k = 0; k < candidate.size(); ++k) {
    const int c = symbol_index(candidate[k], model.scheme());
    total += model.branch_metric(trace.R.data() + k * K, st, c);
    st = model.next_state(st, c);
  }
  return total;
}

inline double sequence_log_likelihood(const ArrivalTrace& trace, const SymbolSequence& candidate,
                                      const SchemeConfig& cfg, const ChannelCoefficients& h, int Ls) {
  return sequence_log_likelihood(trace, candidate, TrellisModel(cfg, h, Ls));
}

/// Viterbi maximum-likelihood sequence detection. Ties resolve to the
/// lexicographically smallest sequence.
inline SymbolSequence mlsd_detect(const ArrivalTrace& trace, const TrellisModel& model) {
  const int K = model.slots_per_symbol();
  detail::require_whole_symbols(trace, K);
  const std::size_t S = trace.R.size() / static_cast<std::size_t>(K);
  const std::size_t n = model.state_count();
  const int A = model.alphabet();
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  if (S == 0) return {};

  std::vector<double> metric(n, ninf), next_metric(n, ninf);
  std::vector<char> alive(n, 0), next_alive(n, 0);
  std::vector<std::uint32_t> back(S * n, 0);
  std::vector<std::int32_t> choice(S * n, 0);
  alive[model.initial_state()] = 1;
  metric[model.initial_state()] = 0.0;

  // Symbols of the survivor ending in `st` after stage `k`, oldest first.
  auto trace_path = [&](std::size_t k, std::size_t st) {
    std::vector<int> path(k + 1);
    for (std::size_t t = k + 1; t-- > 0;) {
      path[t] = choice[t * n + st];
      st = back[t * n + st];
    }
    return path;
  };

  for (std::size_t k = 0; k < S; ++k) {
    std::fill(next_alive.begin(), next_alive.end(), 0);
    const Count* R = trace.R.data() + k * static_cast<std::size_t>(K);
    std::uint32_t* bk = back.data() + k * n;
    std::int32_t* ch = choice.data() + k * n;
    for (std::size_t st = 0; st < n; ++st) {
      if (!alive[st]) continue;
      for (int c = 0; c < A; ++c) {
        const std::size_t ns = model.next_state(st, c);
        const double m = metric[st] + model.branch_metric(R, st, c);
        bool take = !next_alive[ns] || m > next_metric[ns];
        if (!take && m == next_metric[ns]) {
          auto a = k > 0 ? trace_path(k - 1, st) : std::vector<int>{};
          auto b = k > 0 ? trace_path(k - 1, bk[ns]) : std::vector<int>{};
          a.push_back(c);
          b.push_back(ch[ns]);
          take = a < b;
        }
        if (take) {
          next_alive[ns] = 1;
          next_metric[ns] = m;
          bk[ns] = static_cast<std::uint32_t>(st);
          ch[ns] = c;
        }
      }
    }
    metric.swap(next_metric);
    alive.swap(next_alive);
  }

  std::size_t best = n;
  for (std::size_t st = 0; st < n; ++st) {
    if (!alive[st]) continue;
    if (best == n || metric[st] > metric[best] ||
        (metric[st] == metric[best] && trace_path(S - 1, st) < trace_path(S - 1, best))) {
      best = st;
    }
  }
  return detail::from_indices(trace_path(S - 1, best), model.scheme());
}

inline SymbolSequence mlsd_detect(const ArrivalTrace& trace, const SchemeConfig& cfg, const ChannelCoefficients& h,
                                  int Ls) {
  return mlsd_detect(trace, TrellisModel(cfg, h, Ls));
}

/// Brute-force maximum-likelihood sequence search; the reference for the
/// Viterbi detector. Refuses blocks with more than 10^6 candidates.
inline SymbolSequence exhaustive_mlsd_detect(const ArrivalTrace& trace, const TrellisModel& model) {
  constexpr double guard = 1e6;
  const int K = model.slots_per_symbol();
  detail::require_whole_symbols(trace, K);
  const std::size_t S = trace.R.size() / static_cast<std::size_t>(K);
  const int A = model.alphabet();
  if (std::pow(static_cast<double>(A), static_cast<double>(S)) > guard) {
    throw GuardError("exhaustive MLSD: alphabet^S exceeds 10^6 candidates");
  }
  if (S == 0) return {};

  std::vector<int> cur(S, 0), best(S, 0);
  std::vector<double> partial(S + 1, 0.0);
  std::vector<std::size_t> state(S + 1, model.initial_state());
  double best_score = 0.0;
  bool have_best = false;

  // Depth-first in lexicographic order; partial sums accumulate in stage
  // order so scores match the Viterbi recursion bit for bit.
  auto recurse = [&](auto&& self, std::size_t k) -> void {
    if (k == S) {
      if (!have_best || partial[S] > best_score) {
        best_score = partial[S];
        best = cur;
        have_best = true;
      }
      return;
    }
    const Count* R = trace.R.data() + k * static_cast<std::size_t>(K);
    for (int c = 0; c < A; ++c) {
      cur[k] = c;
      partial[k + 1] = partial[k] + model.branch_metric(R, state[k], c);
      state[k + 1] = model.next_state(state[k], c);
      self(self, k + 1);
    }
  };
  recurse(recurse, 0);
  return detail::from_indices(best, model.scheme());
}

inline SymbolSequence exhaustive_mlsd_detect(const ArrivalTrace& trace, const SchemeConfig& cfg,
                                             const ChannelCoefficients& h, int Ls) {
  return exhaustive_mlsd_detect(trace, TrellisModel(cfg, h, Ls));
}

/// Index of the largest count in [first, first + K); ties go to the lowest index.
inline int argmax_slot(const Count* R, int K) {
  int best = 0;
  for (int p = 1; p < K; ++p) {
    if (R[p] > R[best]) best = p;
  }
  return best;
}

/// Two-stage detector: position by maximum count, then concentration by a
/// strict threshold test on that count (R = gamma decides bit 0).
inline SymbolSequence tpcd_detect(const ArrivalTrace& trace, const SchemeConfig& cfg, double gamma) {
  if (gamma < 0.0) throw std::domain_error("tpcd_detect: gamma must be non-negative");
  const int K = cfg.K;
  detail::require_whole_symbols(trace, K);
  const std::size_t S = trace.R.size() / static_cast<std::size_t>(K);
  SymbolSequence out(S);
  for (std::size_t k = 0; k < S; ++k) {
    const Count* R = trace.R.data() + k * static_cast<std::size_t>(K);
    const int q = argmax_slot(R, K);
    out[k] = {q + 1, static_cast<double>(R[q]) > gamma};
  }
  return out;
}

inline Bits bcsk_detect(const ArrivalTrace& trace, double gamma) {
  if (gamma < 0.0) throw std::domain_error("bcsk_detect: gamma must be non-negative");
  Bits out(trace.R.size());
  for (std::size_t m = 0; m < trace.R.size(); ++m) out[m] = static_cast<double>(trace.R[m]) > gamma ? 1 : 0;
  return out;
}

/// Maximum-count PPM decoder. Returned symbols carry csk_bit = 1.
inline SymbolSequence ppm_detect(const ArrivalTrace& trace, int K) {
  detail::require_whole_symbols(trace, K);
  const std::size_t S = trace.R.size() / static_cast<std::size_t>(K);
  SymbolSequence out(S);
  for (std::size_t k = 0; k < S; ++k) out[k] = {argmax_slot(trace.R.data() + k * static_cast<std::size_t>(K), K) + 1, true};
  return out;
}

}  // namespace mcpm
