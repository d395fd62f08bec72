#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace adasecant {

// Per-coordinate moving estimates of E[x] and E[x^2] with a memory time
// constant tau. The update rule is
//
//   mean'    = (1 - 1/tau) * mean    + (1/tau) * x
//   mean_sq' = (1 - 1/tau) * mean_sq + (1/tau) * x^2
//
// and tau itself adapts so that consistent signals shorten the memory
// (tau -> 1, estimates track instantly) while noisy ones lengthen it:
//
//   tau' = (1 - mean^2 / mean_sq) * tau + 1
//
// Outliers reset tau to kTauReset, which weights the current observation
// and the history roughly equally.
struct MovingStat {
  double mean = 0.0;
  double mean_sq = 0.0;
  double tau = 2.2;
  std::uint64_t count = 0;
};

inline constexpr double kTauReset = 2.2;

// Below this mean-square the coordinate is treated as degenerate (dead
// unit): tau updates are skipped and nothing is flagged as an outlier.
inline constexpr double kVarianceFloor = 1e-30;

// One moving-average fold. Does not touch tau. Throws std::domain_error on
// non-finite x (a divergent gradient upstream).
MovingStat update(MovingStat s, double x);

// First observation seeds the estimates directly (mean = x, mean_sq = x^2);
// subsequent ones fold via update().
MovingStat observe(MovingStat s, double x);

// Adapts tau; the mean^2/mean_sq ratio is clamped to [0,1] so tau' >= 1.
// Skipped when mean_sq <= kVarianceFloor.
MovingStat update_tau(MovingStat s);

MovingStat reset_memory(MovingStat s);

// True iff |x - mean| > k * sqrt(max(0, mean_sq - mean^2)). Always false for
// an unseeded or degenerate stat.
bool is_outlier(const MovingStat& s, double x, double k);

// sqrt(max(0, mean_sq))
double rms(const MovingStat& s);

// max(0, mean_sq - mean^2)
double variance(const MovingStat& s);

// Per-parameter array of MovingStat for one tracked quantity.
struct StatBank {
  std::vector<MovingStat> stats;

  StatBank() = default;
  explicit StatBank(std::size_t dimension) : stats(dimension) {}

  std::size_t dimension() const { return stats.size(); }
  void observe_at(std::size_t i, double x) { stats[i] = observe(stats[i], x); }
};

}  // namespace adasecant
