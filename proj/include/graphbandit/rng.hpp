#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>

namespace graphbandit {

/// Seed for repetition `run_index` of a sweep started from `master_seed`.
/// run_seed = master ^ ((run_index + 1) * 0x9E3779B97F4A7C15), mod 2^64.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index) noexcept {
  return master_seed ^ ((run_index + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Deterministic 64-bit generator. All randomness in the library goes through
/// this type so that a seed fully determines a run.
///
/// Uniforms use the top 53 bits of one mt19937_64 output. Gaussians use the
/// cosine branch of Box-Muller and consume exactly two uniforms per draw, so
/// the number of engine calls per draw never depends on the values drawn.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: empty range");
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Standard normal draw.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
};

/// Inverse-CDF sampling over `p` in index order for a given uniform `u`.
/// Mass lost to rounding at the tail goes to the last positive entry.
inline std::size_t sample_index(std::span<const double> p, double u) {
  double acc = 0.0;
  std::size_t last_positive = p.size();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last_positive = i;
    if (u < acc) return i;
  }
  if (last_positive == p.size()) throw std::invalid_argument("sample_index: no positive mass");
  return last_positive;
}

}  // namespace graphbandit
