#pragma once

// Monte Carlo building blocks shared by the design search and the BER
// simulator: counter-based seed derivation, a deterministic parallel loop,
// random trial blocks, and threshold-sweep error counting.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <initializer_list>
#include <mutex>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

#include "mcpm/channel.hpp"
#include "mcpm/detection.hpp"
#include "mcpm/modulation.hpp"

namespace mcpm::mc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the stream addressed by `path` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

/// FNV-1a; used to key streams by scheme identity rather than list position.
inline std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stream purposes.
enum class Purpose : std::uint64_t { Evaluate = 1, DesignSearch = 2, ThresholdSearch = 3 };

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write
/// results into per-index slots, so the outcome does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

struct BlockSpec {
  std::size_t warmup_symbols = 0;   ///< leading symbols excluded from error counts
  std::size_t counted_symbols = 256;
};

struct Block {
  SymbolSequence symbols;
  EmissionFrame frame;
  ArrivalTrace trace;
};

/// Equiprobable random symbols through the LTI-Poisson channel, starting from
/// an empty channel.
template <class R>
Block simulate_block(const SchemeConfig& cfg, const ChannelCoefficients& h, const BlockSpec& spec, R& rng) {
  const std::size_t S = spec.warmup_symbols + spec.counted_symbols;
  const auto mask = static_cast<std::uint64_t>(cfg.alphabet_size() - 1);  // alphabet sizes are powers of two
  Block b;
  b.symbols.resize(S);
  for (auto& s : b.symbols) s = symbol_from_index(static_cast<int>(rng() & mask), cfg);
  b.frame = symbols_to_frame(b.symbols, cfg);
  b.trace = simulate_arrivals(b.frame, h, rng);
  return b;
}

/// Error counts of a threshold detector for every threshold gamma_j = j + 1/2,
/// j = 0..G-1, gathered from one set of simulated blocks. The stage-one
/// decision (largest slot) does not depend on the threshold.
struct ThresholdSweepCounts {
  std::uint64_t bits = 0;
  std::uint64_t position_errors = 0;  ///< bit errors from wrong bins
  std::vector<std::uint64_t> peak_given_high;  ///< histogram of the winning count, high-concentration symbols
  std::vector<std::uint64_t> peak_given_low;

  explicit ThresholdSweepCounts(std::size_t G = 0) : peak_given_high(G + 1, 0), peak_given_low(G + 1, 0) {}

  std::size_t thresholds() const { return peak_given_high.size() - 1; }

  void merge(const ThresholdSweepCounts& o) {
    bits += o.bits;
    position_errors += o.position_errors;
    for (std::size_t i = 0; i < peak_given_high.size(); ++i) {
      peak_given_high[i] += o.peak_given_high[i];
      peak_given_low[i] += o.peak_given_low[i];
    }
  }

  /// Total bit errors at each threshold index.
  std::vector<std::uint64_t> errors() const {
    const std::size_t G = thresholds();
    std::vector<std::uint64_t> out(G);
    std::uint64_t low_above = 0;  // low-concentration peaks above gamma_j
    for (std::size_t r = 0; r <= G; ++r) low_above += peak_given_low[r];
    std::uint64_t high_below = 0;
    for (std::size_t j = 0; j < G; ++j) {
      high_below += peak_given_high[j];  // high peaks r <= j fall below j + 1/2
      low_above -= peak_given_low[j];
      out[j] = position_errors + high_below + low_above;
    }
    return out;
  }
};

/// Accumulates one block's counted symbols into `out` (TPCD for MCPM,
/// single-slot threshold for BCSK).
inline void accumulate_threshold_sweep(const Block& b, const SchemeConfig& cfg, const BlockSpec& spec,
                                       ThresholdSweepCounts& out) {
  const int K = cfg.slots_per_symbol();
  const std::size_t G = out.thresholds();
  for (std::size_t k = spec.warmup_symbols; k < b.symbols.size(); ++k) {
    const Count* R = b.trace.R.data() + k * static_cast<std::size_t>(K);
    const int q = argmax_slot(R, K);
    const auto& s = b.symbols[k];
    out.position_errors += static_cast<std::uint64_t>(std::popcount(static_cast<unsigned>(q ^ (s.ppm_bin - 1))));
    const auto peak = static_cast<std::size_t>(std::min<Count>(R[q], static_cast<Count>(G)));
    (s.csk_bit ? out.peak_given_high : out.peak_given_low)[peak] += 1;
    out.bits += static_cast<std::uint64_t>(cfg.bits_per_symbol());
  }
}

/// Threshold sweep over `trials` independent blocks drawn from the streams
/// derive_seed(seed, {trial}).
inline ThresholdSweepCounts threshold_sweep(const SchemeConfig& cfg, const ChannelCoefficients& h, std::size_t G,
                                            const BlockSpec& spec, std::size_t trials, std::uint64_t seed,
                                            unsigned threads) {
  std::vector<ThresholdSweepCounts> per(trials, ThresholdSweepCounts(G));
  parallel_for(trials, threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, {t}));
    accumulate_threshold_sweep(simulate_block(cfg, h, spec, rng), cfg, spec, per[t]);
  });
  ThresholdSweepCounts total(G);
  for (const auto& p : per) total.merge(p);
  return total;
}

}  // namespace mcpm::mc
