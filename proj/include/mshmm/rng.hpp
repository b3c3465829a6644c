#ifndef MSHMM_RNG_HPP
#define MSHMM_RNG_HPP

#include <cstdint>
#include <cmath>
#include <vector>

// Deterministic, counter-based random streams.
//
// Every stream is identified by (seed, purpose, sample index j, macro index n).
// The n-th output is a pure function of the stream key and the draw counter,
// so replaying any computation with the same identifiers reproduces the draw
// sequence bit-for-bit, and disjoint identifiers give independent sequences
// without storing paths.

namespace mshmm {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// Finalizer of the splitmix64 generator (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

} // namespace detail

enum class StreamPurpose : std::uint64_t {
  MacroNoise = 1, // Wiener increments of the macro integrators
  MicroNoise = 2, // micro-solver noise, per (sample j, macro step n)
  Replica = 3,    // independent Monte Carlo replicas
  General = 4,
};

/// Counter-based random stream. Value type; cheap to construct and copy.
class RngStream {
public:
  RngStream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t j = 0,
            std::uint64_t n = 0) {
    key_ = detail::mix64(seed + detail::kGolden);
    key_ = detail::mix64(key_ ^ detail::mix64(static_cast<std::uint64_t>(purpose) + 0x1000000001ull));
    key_ = detail::mix64(key_ ^ detail::mix64(j + 0x2000000002ull));
    key_ = detail::mix64(key_ ^ detail::mix64(n + 0x3000000003ull));
  }

  std::uint64_t next_u64() {
    counter_ += detail::kGolden;
    return detail::mix64(key_ + counter_);
  }

  /// Uniform draw in the open interval (0, 1).
  double uniform() {
    // 53 significant bits, shifted off zero so log() below is always finite.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw (Box-Muller, second member of each pair cached).
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// A realized Wiener path on a uniform grid: increments[i] ~ N(0, dt).
struct BrownianPath {
  double dt = 0.0;
  std::vector<double> increments;
};

inline BrownianPath make_brownian_path(RngStream stream, double dt,
                                       std::size_t n) {
  BrownianPath path;
  path.dt = dt;
  path.increments.resize(n);
  const double s = std::sqrt(dt);
  for (std::size_t i = 0; i < n; ++i) path.increments[i] = s * stream.gaussian();
  return path;
}

} // namespace mshmm

#endif // MSHMM_RNG_HPP
