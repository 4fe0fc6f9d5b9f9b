#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ghp {

// Error taxonomy; the CLI maps these onto distinct exit codes.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct StationarityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double sigmoid_deriv(double z) {
  const double s = sigmoid(z);
  return s * (1.0 - s);
}

inline double softplus(double z) {
  if (z > 30.0) return z;
  return std::log1p(std::exp(z));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based stream derivation: every parallel task gets its own seed from
// the root seed plus integer tags, so scheduling cannot change results.
inline std::uint64_t derive_seed(std::uint64_t root) { return splitmix64(root); }

template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag, Tags... rest) {
  return derive_seed(splitmix64(root ^ (tag + 0x9e3779b97f4a7c15ull + (root << 6) + (root >> 2))),
                     rest...);
}

// Deterministic random source. All variate transforms are implemented here so
// results do not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x853c49e6748fea9bull)) {}

  std::uint64_t next_u64() {
    // xorshift128+ style step on splitmix-expanded state
    std::uint64_t x = state_;
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    state_ = x;
    return splitmix64(x);
  }

  // uniform in [0, 1)
  double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]
  double uniform01_open_low() { return 1.0 - uniform01(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // inclusive bounds, unbiased via rejection
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return lo + static_cast<int>(v % span);
  }

  double exponential(double rate) { return -std::log(uniform01_open_low()) / rate; }

  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01_open_low();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * M_PI * u2);
    has_cached_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Index-parallel map. Each index must be self-contained (own seed, own output
// slot); results are identical for any thread count.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += nw) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline int default_thread_count() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace ghp
