#pragma once

// Shared plumbing: error types, deterministic RNG streams, seed derivation,
// and a thread-local warning sink.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eagcl {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto exit codes (usage=1, data=2, numeric=3).
// ---------------------------------------------------------------------------

struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Warnings: recoverable oddities (zero-norm rows, clamped probabilities)
// accumulate here instead of aborting the run.
// ---------------------------------------------------------------------------

inline std::vector<std::string>& warning_sink() {
  thread_local std::vector<std::string> sink;
  return sink;
}

inline void push_warning(std::string msg) { warning_sink().push_back(std::move(msg)); }

inline std::vector<std::string> drain_warnings() {
  std::vector<std::string> out;
  out.swap(warning_sink());
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic randomness. Every random choice in the project flows through
// an explicit 64-bit seed; derived seeds come from splitmix64 over a running
// mix so(seed, tag, indices...) forms a reproducible tree of streams.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
  return splitmix64(base ^ (0x632be59bd9b4e019ULL * (tag + 1)));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose,
                                 std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t h = base;
  for (char ch : purpose) h = splitmix64(h ^ static_cast<std::uint64_t>(ch));
  h = mix_seed(h, a);
  h = mix_seed(h, b);
  h = mix_seed(h, c);
  return h;
}

// Small self-contained generator (xoshiro-free: splitmix64 stream) so draws
// are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x5851f42d4c957f2dULL)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    // Rejection-free modulo; bias is negligible for n << 2^64.
    return n == 0 ? 0 : next_u64() % n;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  double normal() {
    // Box-Muller, one value per call (the sibling draw is discarded).
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Knuth multiplication method; adequate for the small lambdas used here.
  std::uint64_t poisson(double lambda) {
    double limit = std::exp(-lambda);
    double prod = 1.0;
    std::uint64_t k = 0;
    do {
      prod *= next_double();
      ++k;
    } while (prod > limit);
    return k - 1;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) throw ContractError("sample_without_replacement: k > n");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(next_below(n - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  std::uint64_t state_;
};

// ceil(L * alpha) guarded against the float fuzz of products like 10 * 0.3.
inline std::size_t ceil_fraction(std::size_t length, double alpha) {
  double x = static_cast<double>(length) * alpha;
  auto k = static_cast<std::size_t>(std::ceil(x - 1e-9));
  return k > length ? length : k;
}

}  // namespace eagcl
