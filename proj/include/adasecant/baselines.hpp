#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace adasecant {

enum class BaselineKind {
  kSgdMomentum,
  kAdagrad,
  kRmsprop,
  kAdadelta,
  kAdam,
};

std::string to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name);

// Standard textbook updates at community-default hyperparameters. hyper is
// a named map so configs and checkpoints stay schema-stable across kinds:
//   sgd_momentum: lr (0.01), momentum (0.9), lr_decay_steps (0 = no decay)
//   adagrad:      lr (0.01), eps (1e-8)
//   rmsprop:      lr (0.001), decay (0.9), eps (1e-8)
//   adadelta:     decay (0.95), eps (1e-6)
//   adam:         lr (0.001), beta1 (0.9), beta2 (0.999), eps (1e-8)
struct BaselineState {
  BaselineKind kind = BaselineKind::kSgdMomentum;
  std::size_t dimension = 0;
  std::vector<double> accum1;  // momentum / squared-gradient / first moment
  std::vector<double> accum2;  // squared-update / second moment
  std::uint64_t step_count = 0;
  std::map<std::string, double> hyper;

  BaselineState() = default;
  BaselineState(BaselineKind kind, std::size_t dimension);

  double hyper_or(const std::string& name, double fallback) const;
};

std::map<std::string, double> default_hyper(BaselineKind kind);

// One update; returns the delta to ADD to the parameters. Throws
// divergence_error on non-finite gradients. sgd_momentum scales its rate
// linearly from lr down to 0 over lr_decay_steps.
std::vector<double> baseline_step(BaselineState& state,
                                  std::span<const double> g);

}  // namespace adasecant
