#include "adasecant/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adasecant/stepper.hpp"

namespace adasecant {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kSgdMomentum: return "sgd_momentum";
    case BaselineKind::kAdagrad: return "adagrad";
    case BaselineKind::kRmsprop: return "rmsprop";
    case BaselineKind::kAdadelta: return "adadelta";
    case BaselineKind::kAdam: return "adam";
  }
  throw std::logic_error("unknown BaselineKind");
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "sgd_momentum") return BaselineKind::kSgdMomentum;
  if (name == "adagrad") return BaselineKind::kAdagrad;
  if (name == "rmsprop") return BaselineKind::kRmsprop;
  if (name == "adadelta") return BaselineKind::kAdadelta;
  if (name == "adam") return BaselineKind::kAdam;
  throw std::invalid_argument("unknown optimizer kind: " + name);
}

std::map<std::string, double> default_hyper(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kSgdMomentum:
      return {{"lr", 0.01}, {"momentum", 0.9}, {"lr_decay_steps", 0.0}};
    case BaselineKind::kAdagrad:
      return {{"lr", 0.01}, {"eps", 1e-8}};
    case BaselineKind::kRmsprop:
      return {{"lr", 0.001}, {"decay", 0.9}, {"eps", 1e-8}};
    case BaselineKind::kAdadelta:
      return {{"decay", 0.95}, {"eps", 1e-6}};
    case BaselineKind::kAdam:
      return {{"lr", 0.001}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}};
  }
  throw std::logic_error("unknown BaselineKind");
}

BaselineState::BaselineState(BaselineKind kind, std::size_t dimension)
    : kind(kind),
      dimension(dimension),
      accum1(dimension, 0.0),
      accum2(dimension, 0.0),
      hyper(default_hyper(kind)) {}

double BaselineState::hyper_or(const std::string& name, double fallback) const {
  const auto it = hyper.find(name);
  return it == hyper.end() ? fallback : it->second;
}

std::vector<double> baseline_step(BaselineState& state,
                                  std::span<const double> g) {
  const std::size_t d = state.dimension;
  if (g.size() != d) {
    throw std::invalid_argument("baseline_step: gradient length != dimension");
  }
  for (const double gi : g) {
    if (!std::isfinite(gi)) {
      throw divergence_error("baseline_step: non-finite gradient", {});
    }
  }

  std::vector<double> up(d, 0.0);
  switch (state.kind) {
    case BaselineKind::kSgdMomentum: {
      const double lr0 = state.hyper_or("lr", 0.01);
      const double mom = state.hyper_or("momentum", 0.9);
      const double decay_steps = state.hyper_or("lr_decay_steps", 0.0);
      double lr = lr0;
      if (decay_steps > 0.0) {
        lr = lr0 * std::max(0.0, 1.0 - static_cast<double>(state.step_count) /
                                         decay_steps);
      }
      for (std::size_t i = 0; i < d; ++i) {
        state.accum1[i] = mom * state.accum1[i] - lr * g[i];
        up[i] = state.accum1[i];
      }
      break;
    }
    case BaselineKind::kAdagrad: {
      const double lr = state.hyper_or("lr", 0.01);
      const double eps = state.hyper_or("eps", 1e-8);
      for (std::size_t i = 0; i < d; ++i) {
        state.accum1[i] += g[i] * g[i];
        up[i] = -lr * g[i] / (std::sqrt(state.accum1[i]) + eps);
      }
      break;
    }
    case BaselineKind::kRmsprop: {
      const double lr = state.hyper_or("lr", 0.001);
      const double decay = state.hyper_or("decay", 0.9);
      const double eps = state.hyper_or("eps", 1e-8);
      for (std::size_t i = 0; i < d; ++i) {
        state.accum1[i] = decay * state.accum1[i] + (1.0 - decay) * g[i] * g[i];
        up[i] = -lr * g[i] / (std::sqrt(state.accum1[i]) + eps);
      }
      break;
    }
    case BaselineKind::kAdadelta: {
      const double decay = state.hyper_or("decay", 0.95);
      const double eps = state.hyper_or("eps", 1e-6);
      for (std::size_t i = 0; i < d; ++i) {
        state.accum1[i] = decay * state.accum1[i] + (1.0 - decay) * g[i] * g[i];
        up[i] = -std::sqrt(state.accum2[i] + eps) /
                std::sqrt(state.accum1[i] + eps) * g[i];
        state.accum2[i] = decay * state.accum2[i] + (1.0 - decay) * up[i] * up[i];
      }
      break;
    }
    case BaselineKind::kAdam: {
      const double lr = state.hyper_or("lr", 0.001);
      const double b1 = state.hyper_or("beta1", 0.9);
      const double b2 = state.hyper_or("beta2", 0.999);
      const double eps = state.hyper_or("eps", 1e-8);
      const auto t = static_cast<double>(state.step_count + 1);
      const double c1 = 1.0 - std::pow(b1, t);
      const double c2 = 1.0 - std::pow(b2, t);
      for (std::size_t i = 0; i < d; ++i) {
        state.accum1[i] = b1 * state.accum1[i] + (1.0 - b1) * g[i];
        state.accum2[i] = b2 * state.accum2[i] + (1.0 - b2) * g[i] * g[i];
        const double mh = state.accum1[i] / c1;
        const double vh = state.accum2[i] / c2;
        up[i] = -lr * mh / (std::sqrt(vh) + eps);
      }
      break;
    }
  }
  ++state.step_count;
  return up;
}

}  // namespace adasecant
