#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace samedge {

inline constexpr const char* kToolName = "samedge";
inline constexpr const char* kToolVersion = "0.1.0";

// Shortest round-trippable decimal form; keeps emitted CSV/JSON numbers
// byte-stable across runs.
inline std::string format_compact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Exit codes shared by the CLI and documented in the README.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  schema = 3,
  infeasible = 4,
  internal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

// Bad input documents, malformed graphs, violated invariants.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ExitCode::schema, what) {}
};

// A cycle found while validating a layer DAG; names one offending edge.
class CycleError : public ValidationError {
 public:
  CycleError(int from, int to)
      : ValidationError("cycle detected: back edge " + std::to_string(from) + " -> " +
                        std::to_string(to)),
        from_(from),
        to_(to) {}
  int from() const { return from_; }
  int to() const { return to_; }

 private:
  int from_, to_;
};

// No configuration satisfies the latency budget. Carries the best achievable
// latency so callers can report how far off the budget is.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double min_achievable_ms)
      : Error(ExitCode::infeasible, what), min_achievable_ms_(min_achievable_ms) {}
  double min_achievable_ms() const { return min_achievable_ms_; }

 private:
  double min_achievable_ms_;
};

// A bandwidth trace ended before a transfer completed, or does not cover a
// requested window.
class TraceError : public Error {
 public:
  explicit TraceError(const std::string& what) : Error(ExitCode::schema, what) {}
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Sub-seed derivation: all randomness flows from one top-level seed; each
// component derives its own stream as splitmix64(seed ^ fnv1a64(name)).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view component) {
  std::uint64_t z = seed ^ fnv1a64(component);
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Thin deterministic RNG wrapper. mt19937_64's sequence is fixed by the
// standard; the helpers below avoid distribution objects whose output is
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller standard normal.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace samedge
