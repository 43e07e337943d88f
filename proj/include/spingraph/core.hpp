#pragma once

#include <algorithm>
#include <atomic>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace spingraph {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383280;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Default tolerances used throughout the library.  Matrix residuals are
/// measured in the Frobenius norm unless noted otherwise.
inline constexpr double kRankTol = 1e-10;     // relative SVD cutoff for rank decisions
inline constexpr double kHermitianTol = 1e-10;  // relative tolerance on A B† hermiticity
inline constexpr double kUnitaryTol = 1e-9;   // ||T† T - I||_F bound for transitions
inline constexpr double kBlockDecompTol = 1e-10;  // scalar * SU(2) decomposition guard

/// Numerical failure (singular system, unitarity loss, non-convergence), as
/// opposed to invalid input.  The CLI maps this to a distinct exit code.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Run fn(block, begin, end) over `blocks` contiguous index ranges of [0, n)
/// using up to `threads` workers.  The partition depends only on n and
/// `blocks`, so per-block results (and their merge order) are independent of
/// the thread count.
inline void parallel_blocks(int n, int blocks, int threads,
                            const std::function<void(int, int, int)>& fn) {
  if (n <= 0) return;
  blocks = std::max(1, std::min(blocks, n));
  threads = std::max(1, threads);
  std::vector<std::pair<int, int>> ranges;
  ranges.reserve(static_cast<std::size_t>(blocks));
  for (int b = 0; b < blocks; ++b) {
    const int lo = static_cast<int>(static_cast<long long>(n) * b / blocks);
    const int hi = static_cast<int>(static_cast<long long>(n) * (b + 1) / blocks);
    if (lo < hi) ranges.emplace_back(lo, hi);
  }
  if (threads == 1 || ranges.size() == 1) {
    for (std::size_t b = 0; b < ranges.size(); ++b) {
      fn(static_cast<int>(b), ranges[b].first, ranges[b].second);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= ranges.size()) return;
      fn(static_cast<int>(b), ranges[b].first, ranges[b].second);
    }
  };
  std::vector<std::thread> pool;
  const int nw = std::min<int>(threads, static_cast<int>(ranges.size()));
  pool.reserve(static_cast<std::size_t>(nw));
  for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace spingraph
