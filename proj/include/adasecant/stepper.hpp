#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adasecant/block_layout.hpp"
#include "adasecant/moving_stat.hpp"

namespace adasecant {

enum class StepFormula { kSimple, kTaylor };

// Eq.-17-style RMS ratio is the primary gamma estimator; the appendix route
// recovers gamma from the closed-form beta and exists for oracle comparison.
enum class GammaFormula { kRmsRatio, kAppendixBeta };

// Toggles and constants of the stepper. The four components (variance
// reduction, Adagrad damping, block normalization, outlier detection) are
// explicit opt-ins: the default-constructed config is the bare directional
// secant stepper, which is also the configuration the acceptance suite
// exercises on quadratics.
struct AdaSecantConfig {
  bool use_vr = false;
  bool use_ag = false;
  bool use_bn = false;
  bool use_od = false;

  double lambda = 1e-5;       // regularizer in the gamma denominator
  double gamma_clip = 1.8;    // upper bound on the correction term
  double outlier_k = 2.0;     // deviation multiplier for the outlier test
  double tau_reset = 2.2;     // memory size after an outlier
  double eps = 1e-7;          // division floor
  StepFormula step_formula = StepFormula::kSimple;
  GammaFormula gamma_formula = GammaFormula::kRmsRatio;
  int warmup_steps = 10;
  double warmup_rate = 1e-4;  // plain SGD rate used while stats warm up
  double rate_min = 1e-8;
  double rate_max = 10.0;

  void validate() const;  // throws std::invalid_argument
};

// Everything the stepper carries between minibatches, one slot per
// parameter coordinate. delta_stat owns the adaptive tau; the other banks
// fold with the same per-coordinate weight.
struct AdaSecantState {
  std::size_t dimension = 0;

  StatBank g_stat;            // raw gradient: E[g], E[g^2]
  StatBank alpha_stat;        // gradient change: E[a], E[a^2]
  StatBank delta_stat;        // applied update: E[dx], E[dx^2]; owns tau
  StatBank alpha_delta_stat;  // E[a * dx]
  StatBank gamma_num_stat;    // squared products for the gamma numerator
  StatBank gamma_den_stat;    // squared products for the gamma denominator

  std::vector<double> prev_grad;     // working gradient of the previous step
  std::vector<double> prev_delta;    // update applied at the previous step
  std::vector<double> adagrad_accum; // sum of squared corrected gradients
  std::uint64_t step_count = 0;

  AdaSecantState() = default;
  explicit AdaSecantState(std::size_t dim);
};

struct StepDiagnostics {
  double mean_gamma = 0.0;
  double mean_rate = 0.0;
  long outlier_count = 0;
  double mean_tau = 0.0;
  double update_norm = 0.0;
};

struct StepResult {
  std::vector<double> update;
  StepDiagnostics diag;
};

// Thrown when a non-finite gradient reaches the stepper; the harness turns
// it into a diverged run instead of crashing.
class divergence_error : public std::runtime_error {
public:
  divergence_error(const std::string& what, StepDiagnostics diag)
      : std::runtime_error(what), diag(diag) {}
  StepDiagnostics diag;
};

// --- per-coordinate building blocks ---

// Divides each block of g by max(eps, ||g_mean restricted to the block||_2).
std::vector<double> block_normalize(std::span<const double> g,
                                    const BlockLayout& layout,
                                    std::span<const double> g_mean,
                                    double eps);

// Convex combination (g + gamma * g_mean) / (1 + gamma); gamma = 0 returns g.
double variance_reduce(double g, double g_mean, double gamma);

// RMS-ratio gamma (unclipped; callers clip to gamma_clip).
double estimate_gamma(const AdaSecantState& state, std::size_t i,
                      double lambda);

// Gamma recovered from the closed-form beta = E[(g-E[g])(g'-E[g])] /
// (Var(g) + lambda) via gamma = (1-beta)/beta. Unclipped, >= 0.
double estimate_gamma_appendix(const AdaSecantState& state, std::size_t i,
                               double lambda);

// Direct secant ratio delta/alpha; 0 when |alpha| <= eps.
double secant_rate_direct(double delta, double alpha, double eps);

// Rate from the moving statistics, clamped to [rate_min, rate_max].
double estimate_rate(const AdaSecantState& state, std::size_t i,
                     StepFormula formula, double eps,
                     double rate_min = 1e-8, double rate_max = 10.0);

// Accumulates g^2 and returns the damping factor rho = max(1, sqrt(accum)).
struct AdagradScale {
  double new_accum;
  double rho;
};
AdagradScale adagrad_scale(double accum, double g_corrected);

// --- the composed step ---
//
// Reads all statistics as of the previous step, computes the corrected
// gradient and the update, folds the new observations, and adapts tau
// (outlier resets win over the adaptation). Mutates state in place and
// returns the update to ADD to the parameters.
StepResult step(AdaSecantState& state, std::span<const double> g,
                const BlockLayout& layout, const AdaSecantConfig& cfg);

}  // namespace adasecant
