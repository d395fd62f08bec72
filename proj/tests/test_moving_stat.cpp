#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "adasecant/moving_stat.hpp"
#include "adasecant/rng.hpp"

using namespace adasecant;

TEST_CASE("update folds with weight 1/tau") {
  MovingStat s;
  s.tau = 1.0;
  CHECK(update(s, 4.0).mean == doctest::Approx(4.0));
  CHECK(update(s, 4.0).mean_sq == doctest::Approx(16.0));

  s.tau = 2.0;
  const MovingStat t = update(s, 4.0);
  CHECK(t.mean == doctest::Approx(2.0));
  CHECK(t.mean_sq == doctest::Approx(8.0));
  CHECK(t.count == 1);
  CHECK(t.tau == 2.0);  // update never touches tau
}

TEST_CASE("update fixed point") {
  MovingStat s;
  s.mean = 3.0;
  s.mean_sq = 9.0;
  s.tau = 5.0;
  const MovingStat t = update(s, 3.0);
  CHECK(t.mean == doctest::Approx(3.0));
  CHECK(t.mean_sq == doctest::Approx(9.0));
}

TEST_CASE("update rejects non-finite observations") {
  MovingStat s;
  CHECK_THROWS_AS(update(s, std::nan("")), std::domain_error);
  CHECK_THROWS_AS(update(s, INFINITY), std::domain_error);
}

TEST_CASE("observe seeds on the first sample") {
  MovingStat s;
  s = observe(s, -2.5);
  CHECK(s.mean == -2.5);
  CHECK(s.mean_sq == 6.25);
  CHECK(s.count == 1);
  CHECK(s.tau == kTauReset);
}

TEST_CASE("update_tau hand values") {
  MovingStat s;
  s.tau = 7.0;

  // constant signal: ratio exactly 1
  s.mean = 2.0;
  s.mean_sq = 4.0;
  CHECK(update_tau(s).tau == doctest::Approx(1.0));

  // zero mean: ratio exactly 0
  s.mean = 0.0;
  s.mean_sq = 1.0;
  CHECK(update_tau(s).tau == doctest::Approx(8.0));

  s.mean = 1.0;
  s.mean_sq = 2.0;
  s.tau = 3.0;
  CHECK(update_tau(s).tau == doctest::Approx(2.5));
}

TEST_CASE("update_tau skips degenerate coordinates") {
  MovingStat s;
  s.mean = 0.0;
  s.mean_sq = 1e-31;
  s.tau = 5.0;
  CHECK(update_tau(s).tau == 5.0);
}

TEST_CASE("reset_memory") {
  MovingStat s;
  s.tau = 57.3;
  CHECK(reset_memory(s).tau == kTauReset);
  s.tau = kTauReset;
  CHECK(reset_memory(s).tau == kTauReset);
  s.tau = 1.0;
  CHECK(reset_memory(s).tau == kTauReset);  // reset may increase tau
}

TEST_CASE("is_outlier") {
  MovingStat s;
  s.mean = 0.0;
  s.mean_sq = 1.0;
  s.count = 10;
  CHECK_FALSE(is_outlier(s, s.mean, 2.0));
  CHECK(is_outlier(s, 3.0, 2.0));
  CHECK_FALSE(is_outlier(s, 1.5, 2.0));

  // unseeded or degenerate stats never flag
  MovingStat fresh;
  CHECK_FALSE(is_outlier(fresh, 100.0, 2.0));
  s.mean_sq = 1e-31;
  s.mean = 0.0;
  CHECK_FALSE(is_outlier(s, 100.0, 2.0));
}

TEST_CASE("is_outlier is scale covariant") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    MovingStat s;
    s.mean = rng.next_normal();
    const double sd = std::abs(rng.next_normal()) + 0.1;
    s.mean_sq = s.mean * s.mean + sd * sd;
    s.count = 5;
    const double x = rng.next_normal() * 3.0;
    const double c = std::exp(rng.next_normal());
    MovingStat scaled = s;
    scaled.mean *= c;
    scaled.mean_sq *= c * c;
    CHECK(is_outlier(s, x, 2.0) == is_outlier(scaled, c * x, 2.0));
  }
}

TEST_CASE("rms") {
  MovingStat s;
  s.mean_sq = 4.0;
  CHECK(rms(s) == doctest::Approx(2.0));
  s.mean_sq = 0.0;
  CHECK(rms(s) == 0.0);

  // alternating +-3 with tau = 1 keeps mean_sq at 9
  MovingStat t;
  t.tau = 1.0;
  t = observe(t, -3.0);
  t.tau = 1.0;
  t = update(t, 3.0);
  t.tau = 1.0;
  t = update(t, -3.0);
  CHECK(rms(t) == doctest::Approx(3.0));
}

TEST_CASE("tau >= 1 and mean_sq >= 0 on random sequences") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    MovingStat s;
    for (int k = 0; k < 200; ++k) {
      const double x = rng.next_normal() * std::exp(rng.next_normal());
      s = observe(s, x);
      s = update_tau(s);
      CHECK(s.tau >= 1.0);
      CHECK(s.mean_sq >= 0.0);
    }
  }
}

TEST_CASE("constant feed drives mean to x and tau to 1") {
  MovingStat s;
  for (int k = 0; k < 50; ++k) s = observe(s, 1.7);
  CHECK(s.mean == doctest::Approx(1.7));
  s = update_tau(s);
  CHECK(s.tau == doctest::Approx(1.0));
}
