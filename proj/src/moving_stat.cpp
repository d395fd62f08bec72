#include "adasecant/moving_stat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adasecant {

MovingStat update(MovingStat s, double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("MovingStat update: non-finite observation");
  }
  const double w = 1.0 / s.tau;
  s.mean = (1.0 - w) * s.mean + w * x;
  s.mean_sq = (1.0 - w) * s.mean_sq + w * x * x;
  ++s.count;
  return s;
}

MovingStat observe(MovingStat s, double x) {
  if (s.count == 0) {
    if (!std::isfinite(x)) {
      throw std::domain_error("MovingStat observe: non-finite observation");
    }
    s.mean = x;
    s.mean_sq = x * x;
    s.count = 1;
    return s;
  }
  return update(s, x);
}

MovingStat update_tau(MovingStat s) {
  if (s.mean_sq <= kVarianceFloor) return s;
  // The two estimates update jointly, so the ratio can numerically exceed 1.
  const double ratio =
      std::clamp(s.mean * s.mean / s.mean_sq, 0.0, 1.0);
  s.tau = (1.0 - ratio) * s.tau + 1.0;
  return s;
}

MovingStat reset_memory(MovingStat s) {
  s.tau = kTauReset;
  return s;
}

bool is_outlier(const MovingStat& s, double x, double k) {
  if (s.count == 0 || s.mean_sq <= kVarianceFloor) return false;
  return std::abs(x - s.mean) > k * std::sqrt(variance(s));
}

double rms(const MovingStat& s) { return std::sqrt(std::max(0.0, s.mean_sq)); }

double variance(const MovingStat& s) {
  return std::max(0.0, s.mean_sq - s.mean * s.mean);
}

}  // namespace adasecant
