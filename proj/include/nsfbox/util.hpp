#ifndef NSFBOX_UTIL_HPP
#define NSFBOX_UTIL_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

namespace nsfbox {

// Shortest decimal that round-trips to the same double.
inline std::string format_shortest(double v) {
  std::array<char, 32> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), p);
}

// Fixed-topology pairwise reduction. Every integral and norm in the code goes
// through this, so sums are bit-identical regardless of how the contribution
// buffers were filled (serially or by several threads with disjoint writes).
inline double pairwise_sum(const double* a, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(a, half) + pairwise_sum(a + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& a) {
  return pairwise_sum(a.data(), a.size());
}

// Static range split over [0, n). Threads only ever do disjoint elementwise
// writes; reductions stay sequential, so results do not depend on nthreads.
template <typename Fn>
void parallel_for(std::size_t n, int nthreads, Fn&& fn) {
  if (nthreads <= 1 || n < 2048) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t nt = static_cast<std::size_t>(nthreads);
  const std::size_t chunk = (n + nt - 1) / nt;
  std::vector<std::thread> pool;
  pool.reserve(nt - 1);
  for (std::size_t t = 1; t < nt; ++t) {
    std::size_t lo = t * chunk;
    if (lo >= n) break;
    std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  fn(std::size_t{0}, std::min(n, chunk));
  for (auto& th : pool) th.join();
}

// splitmix64; self-contained so streams are reproducible across platforms.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
};

}  // namespace nsfbox

#endif
