// Acceptance suite: one check per shipped guarantee, each printed as a
// single [PASS]/[FAIL] line with its wall time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "adasecant/harness.hpp"
#include "adasecant/rng.hpp"
#include "adasecant/serialize.hpp"

using namespace adasecant;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  std::string name;
  double budget_s;
  std::function<bool(std::string&)> check;
};

// --- 1: direct secant ratio is exact on diagonal quadratics ---
bool c1_secant_exactness(std::string& detail) {
  Rng rng(101);
  const int d = 20;
  double worst = 0.0;
  for (int i = 0; i < d; ++i) {
    const double h = rng.next_uniform(0.5, 10.0);
    double delta = rng.next_uniform(-1.0, 1.0);
    if (std::abs(delta) < 1e-3) delta = 1e-3;
    const double rate = secant_rate_direct(delta, h * delta, 1e-12);
    worst = std::max(worst, std::abs(rate * h - 1.0));
  }
  detail = "max |rate*h - 1| = " + format_double(worst);
  return worst <= 1e-10;
}

// --- 2: the composed stepper converges on quadratics with Newton rates ---
bool c2_quadratic_convergence(std::string& detail) {
  Rng rng(202);
  const std::size_t d = 20;
  QuadraticSpec spec;
  spec.h.resize(d);
  for (double& h : spec.h) h = rng.next_uniform(0.5, 10.0);
  const auto problem = make_quadratic(spec);

  AdaSecantConfig cfg;  // defaults: bare stepper
  cfg.step_formula = StepFormula::kTaylor;
  AdaSecantState state(d);
  std::vector<double> theta = problem->initial_theta(0);

  int crossed = -1;
  for (int k = 0; k < 500; ++k) {
    const auto g = problem->grad(theta, problem->full_batch());
    const StepResult r = step(state, g, problem->layout(), cfg);
    double max_abs = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      theta[i] += r.update[i];
      max_abs = std::max(max_abs, std::abs(theta[i]));
    }
    if (max_abs < 1e-5) {
      crossed = k + 1;
      break;
    }
  }
  if (crossed < 0) {
    detail = "did not reach |theta|_inf < 1e-5 in 500 steps";
    return false;
  }
  double lo = 1e9, hi = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double rate = estimate_rate(state, i, StepFormula::kTaylor, cfg.eps,
                                      cfg.rate_min, cfg.rate_max);
    lo = std::min(lo, rate * spec.h[i]);
    hi = std::max(hi, rate * spec.h[i]);
  }
  detail = "converged at step " + std::to_string(crossed) + ", rate*h in [" +
           format_double(lo) + ", " + format_double(hi) + "]";
  return lo >= 0.9 && hi <= 1.1;
}

// --- 3: variance reduction shrinks the variance by (1+gamma)^2 ---
bool c3_variance_reduction(std::string& detail) {
  const double mu = 1.0, sigma = 2.0;
  const int n = 100000;
  detail.clear();
  for (const double gamma : {0.5, 1.0, 1.8}) {
    Rng rng(303 + static_cast<std::uint64_t>(10 * gamma));
    double rs1 = 0.0, rs2 = 0.0, ts1 = 0.0, ts2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double g = mu + sigma * rng.next_normal();
      const double t = variance_reduce(g, mu, gamma);
      rs1 += g;
      rs2 += g * g;
      ts1 += t;
      ts2 += t * t;
    }
    const double raw_var = rs2 / n - (rs1 / n) * (rs1 / n);
    const double red_mean = ts1 / n;
    const double red_var = ts2 / n - red_mean * red_mean;
    const double want = 1.0 / ((1.0 + gamma) * (1.0 + gamma));
    const double ratio = red_var / raw_var;
    const double se = sigma / (1.0 + gamma) / std::sqrt(double(n));
    if (std::abs(ratio / want - 1.0) > 0.05) {
      detail = "variance ratio off at gamma=" + format_double(gamma);
      return false;
    }
    if (std::abs(red_mean - mu) > 3 * se) {
      detail = "mean biased at gamma=" + format_double(gamma);
      return false;
    }
  }
  detail = "variance ratios within 5%, means within 3 SE";
  return true;
}

// --- 4: brute-force beta oracle vs closed form; gamma stays in [0, 1.8] ---
bool c4_gamma_oracle(std::string& detail) {
  const int grid = 1000;
  const double lambda = 1e-5;
  double worst_cells = 0.0;
  for (const double rho : {0.8, 0.5, 0.2}) {
    Rng rng(404 + static_cast<std::uint64_t>(100 * rho));
    const int n = 100000;
    std::vector<double> g(n), gp(n);
    for (int i = 0; i < n; ++i) {
      const double z1 = rng.next_normal();
      const double z2 = rng.next_normal();
      g[i] = 0.7 + 1.3 * z1;
      gp[i] = 0.7 + 1.3 * (rho * z1 + std::sqrt(1 - rho * rho) * z2);
    }
    const double beta_grid = beta_bruteforce_oracle(g, gp, lambda, grid);
    const double beta_closed = beta_closed_form(g, gp, lambda);
    worst_cells =
        std::max(worst_cells, std::abs(beta_grid - beta_closed) * grid);

    // feed an AR(rho) gradient stream through the stepper and inspect gamma
    AdaSecantConfig cfg;
    cfg.use_vr = true;
    cfg.warmup_steps = 5;
    AdaSecantState state(1);
    const BlockLayout layout = BlockLayout::single(1);
    double x = 0.0;
    StepDiagnostics diag;
    for (int k = 0; k < 2000; ++k) {
      x = rho * x + std::sqrt(1 - rho * rho) * rng.next_normal();
      diag = step(state, std::vector{0.7 + x}, layout, cfg).diag;
    }
    const double raw = estimate_gamma(state, 0, lambda);
    const double clipped = std::min(raw, cfg.gamma_clip);
    if (!(raw >= 0.0) || clipped > 1.8 || diag.mean_gamma > 1.8 ||
        diag.mean_gamma < 0.0) {
      detail = "gamma out of [0, 1.8] at rho=" + format_double(rho);
      return false;
    }
  }
  detail = "grid vs closed form within " + format_double(worst_cells) +
           " cells of 1000";
  return worst_cells <= 2.0;
}

// --- 5: thresholded-Adagrad damping property ---
bool c5_adagrad_damping(std::string& detail) {
  Rng rng(505);
  for (int stream = 0; stream < 10000; ++stream) {
    double accum = 0.0;
    for (int k = 0; k < 20; ++k) {
      const double g = rng.next_normal() * std::exp(rng.next_normal());
      const double rate = std::abs(rng.next_normal());
      const AdagradScale s = adagrad_scale(accum, g);
      if (s.rho < 1.0) {
        detail = "rho < 1";
        return false;
      }
      if (rate / s.rho > rate) {
        detail = "damped rate exceeded the undamped rate";
        return false;
      }
      if (std::sqrt(s.new_accum) < 1.0 && s.rho != 1.0) {
        detail = "rho != 1 below unit accumulator norm";
        return false;
      }
      accum = s.new_accum;
    }
  }
  detail = "10^4 random streams, damping never amplified";
  return true;
}

// --- 6: outlier spike resets tau to 2.2 with OD on; never with OD off ---
bool c6_outlier_reset(std::string& detail) {
  const std::size_t d = 8;
  const double sigma = 0.1;
  for (const bool od : {true, false}) {
    QuadraticSpec spec;
    spec.h.assign(d, 1.0);
    spec.noise_sigma = sigma;
    const auto problem = make_quadratic(spec);
    AdaSecantConfig cfg;
    cfg.use_od = od;
    AdaSecantState state(d);
    std::vector<double> theta = problem->initial_theta(0);
    StepDiagnostics diag;
    for (int k = 0; k <= 200; ++k) {
      auto g = problem->grad(theta, problem->batch_at(606, 1, k));
      if (k == 200) {
        for (double& gi : g) gi += 10.0 * sigma;
      }
      const StepResult r = step(state, g, problem->layout(), cfg);
      for (std::size_t i = 0; i < d; ++i) theta[i] += r.update[i];
      diag = r.diag;
    }
    if (od) {
      for (std::size_t i = 0; i < d; ++i) {
        if (state.delta_stat.stats[i].tau != cfg.tau_reset) {
          detail = "OD on: tau not reset to 2.2 after the spike";
          return false;
        }
      }
      if (diag.outlier_count != static_cast<long>(d) ||
          diag.mean_tau != cfg.tau_reset) {
        detail = "OD on: diagnostics row does not report the reset";
        return false;
      }
    } else {
      if (diag.outlier_count != 0) {
        detail = "OD off: outliers flagged";
        return false;
      }
      for (std::size_t i = 0; i < d; ++i) {
        if (state.delta_stat.stats[i].tau == cfg.tau_reset) {
          detail = "OD off: tau landed on the reset value";
          return false;
        }
      }
    }
  }
  detail = "spike resets tau with OD on, leaves it untouched with OD off";
  return true;
}

// --- 7: analytic gradients vs finite differences; diagonal Hessian oracle ---
bool c7_gradient_oracles(std::string& detail) {
  struct Case {
    std::string name;
    std::shared_ptr<Problem> problem;
    double tol;
    double point_scale;
  };
  LogRegSpec lspec;
  lspec.n_samples = 100;
  lspec.n_features = 8;
  lspec.seed = 7;
  MlpSpec mspec;
  mspec.layer_sizes = {4, 2, 1};
  mspec.seed = 7;
  mspec.n_samples = 40;
  const std::vector<Case> cases = {
      {"quadratic", make_quadratic({{0.5, 1.0, 2.0, 4.0}, 0.0}), 1e-5, 1.0},
      {"rosenbrock", make_rosenbrock(), 1e-5, 0.8},
      {"logreg", make_logreg(lspec), 1e-5, 0.7},
      {"mlp", make_mlp(mspec), 1e-4, 0.5},
  };
  Rng rng(707);
  for (const Case& c : cases) {
    for (int t = 0; t < 20; ++t) {
      std::vector<double> theta(c.problem->dimension());
      for (double& v : theta) v = c.point_scale * rng.next_normal();
      const auto an = c.problem->grad(theta, c.problem->full_batch());
      const auto fd = fd_gradient(*c.problem, theta, c.problem->full_batch());
      double scale = 1e-12, err = 0.0;
      for (std::size_t i = 0; i < an.size(); ++i) {
        scale = std::max(scale, std::abs(an[i]));
        err = std::max(err, std::abs(an[i] - fd[i]));
      }
      if (err / scale > c.tol) {
        detail = c.name + ": rel err " + format_double(err / scale);
        return false;
      }
    }
  }
  // diagonal-Hessian finite differences are exact on quadratics
  const std::vector<double> h{0.5, 3.0, 9.5};
  const auto quad = make_quadratic({h, 0.0});
  for (int t = 0; t < 5; ++t) {
    std::vector<double> theta(3), delta(3);
    for (double& v : theta) v = rng.next_normal();
    for (double& v : delta) v = rng.next_uniform(0.05, 0.5);
    const auto diag = fd_diag_hessian(*quad, theta, quad->full_batch(), delta);
    for (std::size_t i = 0; i < 3; ++i) {
      if (std::abs(diag[i] - h[i]) > 1e-9 * h[i]) {
        detail = "fd_diag_hessian not exact on the quadratic";
        return false;
      }
    }
  }
  detail = "all analytic gradients within tolerance at 20 points";
  return true;
}

// --- 8: untuned training on the separable logreg; 16-way ablation runs ---
bool c8_desk_scale_logreg(std::string& detail) {
  ExperimentConfig cfg;
  cfg.problem.kind = "logreg";  // n=1000, d=20, default margin
  cfg.batch_size = 32;
  const std::int64_t steps_per_epoch = (1000 + 31) / 32;
  cfg.max_steps = 100 * steps_per_epoch;
  cfg.record_every = steps_per_epoch;
  cfg.seed = 808;
  cfg.optimizer.kind = "adasecant";  // all defaults

  const RunRecord record = run_experiment(cfg);
  double best_train = std::numeric_limits<double>::infinity();
  for (const RunRow& row : record.rows) {
    if (std::isfinite(row.train_loss)) {
      best_train = std::min(best_train, row.train_loss);
    }
  }
  if (record.status != TerminalStatus::kCompleted || best_train > 0.1) {
    detail = "train loss " + format_double(best_train) + " > 0.1";
    return false;
  }

  ExperimentConfig base = cfg;
  base.max_steps = 20 * steps_per_epoch;  // protocol run per toggle subset
  const auto rows = run_ablation(base, AblationGrid::full());
  if (rows.size() != 16) {
    detail = "ablation grid did not produce 16 rows";
    return false;
  }
  int diverged = 0;
  for (const AblationRow& row : rows) {
    if (row.record.status == TerminalStatus::kError) {
      detail = row.label + " errored";
      return false;
    }
    if (row.record.status == TerminalStatus::kDiverged) ++diverged;
    if (row.record.rows.empty()) {
      detail = row.label + " recorded no rows";
      return false;
    }
  }
  detail = "train loss " + format_double(best_train) + "; 16/16 recorded (" +
           std::to_string(diverged) + " unstable tolerated)";
  return true;
}

// --- 9: each baseline cuts the quadratic loss by 99%; Adam closed form ---
bool c9_baseline_sanity(std::string& detail) {
  for (const std::string kind :
       {"sgd_momentum", "adagrad", "rmsprop", "adadelta", "adam"}) {
    ExperimentConfig cfg;
    cfg.problem.kind = "quadratic";
    cfg.problem.h = {0.5, 0.8, 1.2, 1.6, 2.0};
    cfg.optimizer.kind = kind;
    cfg.max_steps = 5000;
    cfg.record_every = 5000;
    cfg.seed = 909;
    const RunRecord record = run_experiment(cfg);
    const double initial = record.rows.front().train_loss;
    const double final_loss = record.rows.back().train_loss;
    if (record.status != TerminalStatus::kCompleted ||
        final_loss > 0.01 * initial) {
      detail = kind + " reduced loss only to " +
               format_double(final_loss / initial) + " of initial";
      return false;
    }
  }
  BaselineState adam(BaselineKind::kAdam, 1);
  const double g = 0.37, lr = 0.001, eps = 1e-8;
  const auto up = baseline_step(adam, std::vector{g});
  const double expected = -lr * g / (std::abs(g) + eps);
  if (std::abs(up[0] - expected) > 1e-12) {
    detail = "adam first step off the closed form by " +
             format_double(std::abs(up[0] - expected));
    return false;
  }
  detail = "five baselines >= 99% reduction; adam first step exact to 1e-12";
  return true;
}

// --- 10: bit-level determinism and checkpoint/resume equality ---
bool c10_determinism_resume(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "adasecant_acceptance_ck";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const std::string kind : {"adasecant", "sgd_momentum", "adagrad",
                                 "rmsprop", "adadelta", "adam"}) {
    ExperimentConfig cfg;
    cfg.problem.kind = "quadratic";
    cfg.problem.h = std::vector<double>(6, 1.0);
    cfg.problem.noise_sigma = 0.1;
    cfg.optimizer.kind = kind;
    if (kind == "adasecant") {
      cfg.optimizer.adasecant.use_vr = true;
      cfg.optimizer.adasecant.use_od = true;
    }
    cfg.max_steps = 200;
    cfg.record_every = 20;
    cfg.seed = 1010;

    const std::string a = run_record_csv(run_experiment(cfg));
    const std::string b = run_record_csv(run_experiment(cfg));
    if (a != b) {
      detail = kind + ": identical seeds produced different CSVs";
      return false;
    }
    const fs::path path = dir / (kind + ".json");
    checkpoint_save(checkpoint_after(cfg, 100), path);
    const std::string resumed =
        run_record_csv(resume_experiment(checkpoint_load(path)));
    if (resumed != a) {
      detail = kind + ": resumed run differs from the uninterrupted run";
      return false;
    }
  }
  fs::remove_all(dir);
  detail = "byte-identical CSVs and resume equality for all six optimizers";
  return true;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"secant exactness on diagonal quadratics", 1.0, c1_secant_exactness},
      {"full-stepper quadratic convergence with Newton rates", 5.0,
       c2_quadratic_convergence},
      {"variance reduction factor 1/(1+gamma)^2", 5.0, c3_variance_reduction},
      {"gamma brute-force oracle vs closed form", 30.0, c4_gamma_oracle},
      {"thresholded-Adagrad damping property", 5.0, c5_adagrad_damping},
      {"outlier spike resets tau to 2.2", 5.0, c6_outlier_reset},
      {"gradient oracles across all problems", 10.0, c7_gradient_oracles},
      {"desk-scale logreg without tuning + 16-way ablation", 120.0,
       c8_desk_scale_logreg},
      {"baseline sanity and Adam closed form", 10.0, c9_baseline_sanity},
      {"determinism and checkpoint/resume equality", 30.0,
       c10_determinism_resume},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criteria[i].check(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (secs > criteria[i].budget_s) {
      ok = false;
      detail += " [exceeded " + format_double(criteria[i].budget_s) +
                "s budget]";
    }
    std::printf("[%s] criterion %zu: %s (%.2fs) - %s\n", ok ? "PASS" : "FAIL",
                i + 1, criteria[i].name.c_str(), secs, detail.c_str());
    if (!ok) ++failures;
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
