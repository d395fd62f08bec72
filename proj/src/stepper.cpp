#include "adasecant/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace adasecant {

void AdaSecantConfig::validate() const {
  const auto bad = [](double v) { return !std::isfinite(v); };
  if (bad(lambda) || lambda < 0.0)
    throw std::invalid_argument("AdaSecantConfig: lambda must be finite, >= 0");
  if (bad(gamma_clip) || gamma_clip <= 0.0)
    throw std::invalid_argument("AdaSecantConfig: gamma_clip must be > 0");
  if (bad(outlier_k) || outlier_k <= 0.0)
    throw std::invalid_argument("AdaSecantConfig: outlier_k must be > 0");
  if (bad(tau_reset) || tau_reset < 1.0)
    throw std::invalid_argument("AdaSecantConfig: tau_reset must be >= 1");
  if (bad(eps) || eps <= 0.0)
    throw std::invalid_argument("AdaSecantConfig: eps must be > 0");
  if (warmup_steps < 0)
    throw std::invalid_argument("AdaSecantConfig: warmup_steps must be >= 0");
  if (bad(warmup_rate) || warmup_rate <= 0.0)
    throw std::invalid_argument("AdaSecantConfig: warmup_rate must be > 0");
  if (bad(rate_min) || bad(rate_max) || rate_min <= 0.0 ||
      rate_max < rate_min)
    throw std::invalid_argument("AdaSecantConfig: bad rate clamp");
}

AdaSecantState::AdaSecantState(std::size_t dim)
    : dimension(dim),
      g_stat(dim),
      alpha_stat(dim),
      delta_stat(dim),
      alpha_delta_stat(dim),
      gamma_num_stat(dim),
      gamma_den_stat(dim),
      prev_grad(dim, 0.0),
      prev_delta(dim, 0.0),
      adagrad_accum(dim, 0.0) {}

std::vector<double> block_normalize(std::span<const double> g,
                                    const BlockLayout& layout,
                                    std::span<const double> g_mean,
                                    double eps) {
  layout.validate(g.size());
  std::vector<double> out(g.begin(), g.end());
  for (const auto& b : layout.blocks) {
    double sq = 0.0;
    for (std::size_t i = b.begin; i < b.end; ++i) sq += g_mean[i] * g_mean[i];
    const double div = std::max(eps, std::sqrt(sq));
    for (std::size_t i = b.begin; i < b.end; ++i) out[i] /= div;
  }
  return out;
}

double variance_reduce(double g, double g_mean, double gamma) {
  return (g + gamma * g_mean) / (1.0 + gamma);
}

double estimate_gamma(const AdaSecantState& state, std::size_t i,
                      double lambda) {
  return rms(state.gamma_num_stat.stats[i]) /
         (rms(state.gamma_den_stat.stats[i]) + lambda);
}

double estimate_gamma_appendix(const AdaSecantState& state, std::size_t i,
                               double lambda) {
  // beta = E[(g - E[g])(g' - E[g])] / (Var(g) + lambda); the signed product
  // mean lives in the same bank whose mean-square feeds the RMS route.
  const double num = state.gamma_den_stat.stats[i].mean;
  const double den = variance(state.g_stat.stats[i]) + lambda;
  if (den <= 0.0) return 0.0;
  const double beta = num / den;
  if (beta >= 1.0) return 0.0;
  if (beta <= 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 - beta) / beta;
}

double secant_rate_direct(double delta, double alpha, double eps) {
  if (std::abs(alpha) <= eps) return 0.0;
  return delta / alpha;
}

double estimate_rate(const AdaSecantState& state, std::size_t i,
                     StepFormula formula, double eps, double rate_min,
                     double rate_max) {
  const MovingStat& a = state.alpha_stat.stats[i];
  const MovingStat& d = state.delta_stat.stats[i];
  const double ad = state.alpha_delta_stat.stats[i].mean;
  const double head = rms(d) / (rms(a) + eps);
  double rate;
  if (formula == StepFormula::kTaylor) {
    rate = head - (ad - a.mean * d.mean) / (a.mean_sq + eps);
  } else {
    rate = head - ad / (a.mean_sq + eps);
  }
  return std::clamp(rate, rate_min, rate_max);
}

AdagradScale adagrad_scale(double accum, double g_corrected) {
  const double new_accum = accum + g_corrected * g_corrected;
  return {new_accum, std::max(1.0, std::sqrt(new_accum))};
}

StepResult step(AdaSecantState& state, std::span<const double> g,
                const BlockLayout& layout, const AdaSecantConfig& cfg) {
  cfg.validate();
  const std::size_t d = state.dimension;
  if (g.size() != d) {
    throw std::invalid_argument("step: gradient length != dimension");
  }
  layout.validate(d);

  StepDiagnostics diag;
  for (std::size_t i = 0; i < d; ++i) {
    if (!std::isfinite(g[i])) {
      diag.update_norm = std::numeric_limits<double>::quiet_NaN();
      throw divergence_error("step: non-finite gradient", diag);
    }
  }

  const bool first = state.step_count == 0;
  const bool have_pair = state.step_count >= 1;
  const bool warm =
      state.step_count >= static_cast<std::uint64_t>(cfg.warmup_steps);

  // Working gradient and the matching mean, both read as of the previous
  // step. The block divisor comes from the raw-gradient moving mean; on the
  // very first step it falls back to the current gradient's block norm.
  std::vector<double> gn(g.begin(), g.end());
  std::vector<double> gmean_n(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) gmean_n[i] = state.g_stat.stats[i].mean;
  if (cfg.use_bn) {
    for (const auto& b : layout.blocks) {
      double sq = 0.0;
      for (std::size_t i = b.begin; i < b.end; ++i) {
        const double v = first ? g[i] : state.g_stat.stats[i].mean;
        sq += v * v;
      }
      const double div = std::max(cfg.eps, std::sqrt(sq));
      for (std::size_t i = b.begin; i < b.end; ++i) {
        gn[i] /= div;
        gmean_n[i] /= div;
      }
    }
  }

  // Gradient change caused by the previous update, in working scale.
  std::vector<double> alpha(d, 0.0);
  if (have_pair) {
    for (std::size_t i = 0; i < d; ++i) alpha[i] = gn[i] - state.prev_grad[i];
  }

  // Correction term and corrected gradient.
  std::vector<double> gamma(d, 0.0);
  if (state.step_count >= 2) {
    for (std::size_t i = 0; i < d; ++i) {
      const double raw = cfg.gamma_formula == GammaFormula::kAppendixBeta
                             ? estimate_gamma_appendix(state, i, cfg.lambda)
                             : estimate_gamma(state, i, cfg.lambda);
      gamma[i] = std::min(raw, cfg.gamma_clip);
    }
  }
  std::vector<double> corrected(d);
  for (std::size_t i = 0; i < d; ++i) {
    corrected[i] =
        cfg.use_vr ? variance_reduce(gn[i], gmean_n[i], gamma[i]) : gn[i];
  }

  // Outlier verdicts against the pre-fold statistics; either the raw
  // gradient or the curvature signal deviating flags the coordinate.
  std::vector<bool> outlier(d, false);
  if (cfg.use_od) {
    for (std::size_t i = 0; i < d; ++i) {
      bool out = is_outlier(state.g_stat.stats[i], g[i], cfg.outlier_k);
      if (!out && state.step_count >= 2) {
        out = is_outlier(state.alpha_stat.stats[i], alpha[i], cfg.outlier_k);
      }
      outlier[i] = out;
      if (out) ++diag.outlier_count;
    }
  }

  // Fold the new observations. All banks of a coordinate share the adaptive
  // tau owned by its delta statistics.
  for (std::size_t i = 0; i < d; ++i) {
    const double tau = state.delta_stat.stats[i].tau;
    const auto fold = [tau](StatBank& bank, std::size_t at, double x) {
      bank.stats[at].tau = tau;
      bank.stats[at] = observe(bank.stats[at], x);
    };
    fold(state.g_stat, i, g[i]);
    if (have_pair) {
      fold(state.alpha_stat, i, alpha[i]);
      fold(state.delta_stat, i, state.prev_delta[i]);
      fold(state.alpha_delta_stat, i, alpha[i] * state.prev_delta[i]);
      const double dev_prev = state.prev_grad[i] - gmean_n[i];
      fold(state.gamma_num_stat, i, (state.prev_grad[i] - gn[i]) * dev_prev);
      fold(state.gamma_den_stat, i, dev_prev * (gn[i] - gmean_n[i]));
    }
  }

  // Rate estimate and update.
  StepResult result;
  result.update.assign(d, 0.0);
  if (warm) {
    double rate_sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double rate = estimate_rate(state, i, cfg.step_formula, cfg.eps,
                                        cfg.rate_min, cfg.rate_max);
      rate_sum += rate;
      double rho = 1.0;
      if (cfg.use_ag) {
        const AdagradScale s = adagrad_scale(state.adagrad_accum[i],
                                             corrected[i]);
        state.adagrad_accum[i] = s.new_accum;
        rho = s.rho;
      }
      result.update[i] = -(rate / rho) * corrected[i];
    }
    diag.mean_rate = rate_sum / static_cast<double>(d);
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      result.update[i] = -cfg.warmup_rate * g[i];
    }
    diag.mean_rate = cfg.warmup_rate;
  }

  // Memory-size adaptation; an outlier reset overrides it so the coordinate
  // ends the step at exactly tau_reset.
  double tau_sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    MovingStat& ds = state.delta_stat.stats[i];
    if (outlier[i]) {
      ds.tau = cfg.tau_reset;
    } else {
      ds = update_tau(ds);
    }
    tau_sum += ds.tau;
  }
  diag.mean_tau = tau_sum / static_cast<double>(d);

  double gamma_sum = 0.0;
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    gamma_sum += gamma[i];
    norm_sq += result.update[i] * result.update[i];
  }
  diag.mean_gamma = gamma_sum / static_cast<double>(d);
  diag.update_norm = std::sqrt(norm_sq);

  state.prev_grad = std::move(gn);
  state.prev_delta = result.update;
  ++state.step_count;

  result.diag = diag;
  return result;
}

}  // namespace adasecant
