#pragma once

#include <cstdint>
#include <vector>

namespace adasecant {

// Counter-based generator: draw i of stream s under seed k is a pure function
// of (k, s, i), so identical seeds give identical sequences on every platform
// and a run can be resumed from a step index alone.
std::uint64_t mix64(std::uint64_t x);

class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double next_double();   // uniform [0, 1)
  double next_normal();   // standard normal, Box-Muller
  double next_uniform(double lo, double hi);

  // Fisher-Yates permutation of [0, n)
  std::vector<std::int32_t> permutation(std::int32_t n);

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace adasecant
