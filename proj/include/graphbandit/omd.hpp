#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphbandit {

class OmdError : public std::runtime_error {
 public:
  OmdError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

inline constexpr double kOmdTolerance = 1e-12;
inline constexpr int kOmdMaxSteps = 200;

/// One log-barrier mirror-descent step. Finds lambda in [min loss, max loss]
/// with sum_i 1 / (1/q_i + eta_i (loss_i - lambda)) = 1 by bisection and
/// returns q' with 1/q'_i = 1/q_i + eta_i (loss_i - lambda).
///
/// The left side is increasing in lambda and blows up at the first pole
/// min_i (loss_i + 1/(q_i eta_i)), so the bracket is cut at that pole when it
/// lies inside [min loss, max loss].
inline std::vector<double> log_barrier_omd(std::span<const double> q, std::span<const double> loss,
                                           std::span<const double> eta) {
  const std::size_t k = q.size();
  if (k == 0 || loss.size() != k || eta.size() != k) throw std::invalid_argument("log_barrier_omd: size mismatch");
  for (std::size_t i = 0; i < k; ++i) {
    if (!(q[i] > 0.0)) throw std::invalid_argument("log_barrier_omd: q must be strictly positive");
    if (!(eta[i] > 0.0)) throw std::invalid_argument("log_barrier_omd: learning rates must be positive");
    if (!std::isfinite(loss[i])) throw std::invalid_argument("log_barrier_omd: non-finite loss");
  }

  auto residual = [&](double lambda) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double denom = 1.0 / q[i] + eta[i] * (loss[i] - lambda);
      if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
      sum += 1.0 / denom;
    }
    return sum - 1.0;
  };

  double lo = *std::min_element(loss.begin(), loss.end());
  double hi = *std::max_element(loss.begin(), loss.end());
  for (std::size_t i = 0; i < k; ++i) hi = std::min(hi, loss[i] + 1.0 / (q[i] * eta[i]));

  double lambda = lo;
  double r = residual(lo);
  if (std::abs(r) > kOmdTolerance) {
    double best = lo;
    double best_r = r;
    for (int step = 0; step < kOmdMaxSteps; ++step) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;  // bracket at machine resolution
      const double rm = residual(mid);
      if (std::abs(rm) < std::abs(best_r)) {
        best = mid;
        best_r = rm;
      }
      if (std::abs(rm) <= kOmdTolerance) break;
      (rm < 0.0 ? lo : hi) = mid;
    }
    lambda = best;
    r = best_r;
  }
  // A bracket collapsed to adjacent doubles can leave a residual a few ulps
  // above the tolerance; that is renormalized away below. Anything larger
  // means the inputs are numerically pathological.
  if (!(std::abs(r) <= 1e-9)) {
    throw OmdError("log_barrier_omd: no normalizing lambda found, residual " + std::to_string(r), r);
  }

  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = 1.0 / (1.0 / q[i] + eta[i] * (loss[i] - lambda));
  if (std::abs(r) > kOmdTolerance) {
    const double sum = std::accumulate(out.begin(), out.end(), 0.0);
    for (double& x : out) x /= sum;
  }
  return out;
}

}  // namespace graphbandit
