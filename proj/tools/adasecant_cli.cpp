// Command-line surface for the optimizer library: single runs, the toggle
// ablation grid, baseline sweeps, the self-check suite, and summary
// re-rendering from raw CSVs.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "adasecant/harness.hpp"
#include "adasecant/rng.hpp"
#include "adasecant/serialize.hpp"

namespace fs = std::filesystem;
using namespace adasecant;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitInternal = 3;

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::string resume_path;
  std::int64_t checkpoint_at = 0;

  // overrides; negative/empty means "not set on the command line"
  std::int64_t steps = -1;
  std::int64_t record_every = -1;
  std::int32_t batch_size = -1;
  std::int64_t seed = -1;
  double divergence_loss = std::nan("");
  std::string optimizer;
  std::string problem;
  std::int32_t dimension = -1;
  double noise_sigma = std::nan("");
  double margin = std::nan("");
  std::string step_formula;
  double lr = std::nan("");

  // toggle tri-state: -1 untouched, 0 off, 1 on
  int vr = -1, ag = -1, bn = -1, od = -1;
};

void add_common_flags(CLI::App* cmd, CliOptions* opt) {
  cmd->add_option("--config", opt->config_path, "JSON config file");
  cmd->add_option("--seed", opt->seed, "run seed");
  cmd->add_option("--steps", opt->steps, "max optimization steps");
  cmd->add_option("--batch-size", opt->batch_size, "minibatch size");
  cmd->add_option("--record-every", opt->record_every, "row interval");
  cmd->add_option("--divergence-loss", opt->divergence_loss,
                  "abort threshold on the train loss");
  cmd->add_option("--optimizer", opt->optimizer,
                  "adasecant | sgd_momentum | adagrad | rmsprop | adadelta | adam");
  cmd->add_option("--problem", opt->problem,
                  "quadratic | rosenbrock | logreg | mlp");
  cmd->add_option("--dimension", opt->dimension, "quadratic dimension");
  cmd->add_option("--noise-sigma", opt->noise_sigma,
                  "quadratic gradient noise std");
  cmd->add_option("--margin", opt->margin, "logreg separation margin");
  cmd->add_option("--step-formula", opt->step_formula, "simple | taylor");
  cmd->add_option("--lr", opt->lr, "baseline learning rate override");
  cmd->add_option("--out", opt->out_dir, "output directory");
  cmd->add_flag("--vr,!--no-vr", opt->vr, "variance reduction");
  cmd->add_flag("--ag,!--no-ag", opt->ag, "Adagrad damping");
  cmd->add_flag("--bn,!--no-bn", opt->bn, "block normalization");
  cmd->add_flag("--od,!--no-od", opt->od, "outlier detection");
}

// File config first, command-line flags on top.
ExperimentConfig resolve_config(const CliOptions& opt) {
  ExperimentConfig cfg;
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) {
      throw CLI::ValidationError("--config",
                                 "cannot read " + opt.config_path);
    }
    cfg = experiment_from_json(nlohmann::json::parse(in));
  }
  if (opt.steps >= 0) cfg.max_steps = opt.steps;
  if (opt.record_every >= 0) cfg.record_every = opt.record_every;
  if (opt.batch_size >= 0) cfg.batch_size = opt.batch_size;
  if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
  if (!std::isnan(opt.divergence_loss)) cfg.divergence_loss = opt.divergence_loss;
  if (!opt.optimizer.empty()) cfg.optimizer.kind = opt.optimizer;
  if (!opt.problem.empty()) cfg.problem.kind = opt.problem;
  if (opt.dimension > 0) cfg.problem.dimension = opt.dimension;
  if (!std::isnan(opt.noise_sigma)) cfg.problem.noise_sigma = opt.noise_sigma;
  if (!std::isnan(opt.margin)) cfg.problem.logreg.separation_margin = opt.margin;
  if (!opt.step_formula.empty()) {
    cfg.optimizer.adasecant.step_formula =
        step_formula_from_string(opt.step_formula);
  }
  if (!std::isnan(opt.lr)) cfg.optimizer.hyper["lr"] = opt.lr;
  if (opt.vr >= 0) cfg.optimizer.adasecant.use_vr = opt.vr != 0;
  if (opt.ag >= 0) cfg.optimizer.adasecant.use_ag = opt.ag != 0;
  if (opt.bn >= 0) cfg.optimizer.adasecant.use_bn = opt.bn != 0;
  if (opt.od >= 0) cfg.optimizer.adasecant.use_od = opt.od != 0;
  cfg.validate();
  return cfg;
}

int cmd_run(const CliOptions& opt) {
  RunRecord record;
  ExperimentConfig cfg;
  if (!opt.resume_path.empty()) {
    Checkpoint ck = checkpoint_load(opt.resume_path);
    if (opt.steps >= 0) ck.config.max_steps = opt.steps;
    cfg = ck.config;
    record = resume_experiment(ck);
  } else {
    cfg = resolve_config(opt);
    if (opt.checkpoint_at > 0 && opt.checkpoint_at < cfg.max_steps) {
      Checkpoint ck = checkpoint_after(cfg, opt.checkpoint_at);
      fs::create_directories(opt.out_dir);
      checkpoint_save(ck, fs::path(opt.out_dir) / "checkpoint.json");
      record = resume_experiment(ck);
    } else {
      record = run_experiment(cfg);
    }
  }

  std::vector<NamedRecord> records{{"run", record}};
  nlohmann::json extra;
  extra["config"] = experiment_to_json(cfg);
  emit_curves(records, opt.out_dir, extra);

  const RunRow& last = record.rows.back();
  std::cout << "status=" << to_string(record.status)
            << " steps=" << last.step
            << " train_loss=" << format_double(last.train_loss)
            << " csv=" << (fs::path(opt.out_dir) / "run.csv").string() << "\n";
  return record.status == TerminalStatus::kDiverged ? kExitDiverged : kExitOk;
}

int cmd_ablate(const CliOptions& opt) {
  ExperimentConfig base = resolve_config(opt);
  base.optimizer.kind = "adasecant";
  const auto rows = run_ablation(base, AblationGrid::full());

  std::vector<NamedRecord> records;
  nlohmann::json table = nlohmann::json::array();
  std::cout << "configuration                                 status     "
               "best_holdout  train_at_best\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const AblationRow& row = rows[k];
    std::string stem = "ablation_" + std::to_string(k);
    records.push_back({stem, row.record});
    table.push_back({{"label", row.label},
                     {"vr", row.toggles[0]},
                     {"ag", row.toggles[1]},
                     {"bn", row.toggles[2]},
                     {"od", row.toggles[3]},
                     {"status", to_string(row.record.status)},
                     {"best_holdout_loss", row.best_holdout},
                     {"train_at_best", row.train_at_best},
                     {"best_step", row.best_step},
                     {"csv", stem + ".csv"}});
    std::ostringstream line;
    line.width(45);
    line << std::left << row.label;
    line.width(11);
    line << std::left << to_string(row.record.status);
    line << format_double(row.best_holdout) << "  "
         << format_double(row.train_at_best);
    std::cout << line.str() << "\n";
  }
  nlohmann::json extra;
  extra["config"] = experiment_to_json(base);
  extra["ablation"] = table;
  emit_curves(records, opt.out_dir, extra);
  return kExitOk;
}

int cmd_sweep(const CliOptions& opt, const std::vector<double>& lrs,
              const std::vector<std::int32_t>& batch_sizes) {
  const ExperimentConfig base = resolve_config(opt);
  std::vector<double> lr_grid = lrs;
  if (lr_grid.empty()) lr_grid.push_back(base.optimizer.hyper.count("lr")
                                             ? base.optimizer.hyper.at("lr")
                                             : std::nan(""));
  std::vector<std::int32_t> bs_grid = batch_sizes;
  if (bs_grid.empty()) bs_grid.push_back(base.batch_size);

  std::vector<NamedRecord> records;
  nlohmann::json table = nlohmann::json::array();
  for (const double lr : lr_grid) {
    for (const std::int32_t bs : bs_grid) {
      ExperimentConfig cfg = base;
      cfg.batch_size = bs;
      if (!std::isnan(lr)) cfg.optimizer.hyper["lr"] = lr;
      std::string stem = cfg.optimizer.kind + "_bs" + std::to_string(bs);
      if (!std::isnan(lr)) stem += "_lr" + format_double(lr);
      const RunRecord record = run_experiment(cfg);
      const RunRow& last = record.rows.back();
      nlohmann::json lr_field;
      if (!std::isnan(lr)) lr_field = lr;
      table.push_back({{"name", stem},
                       {"lr", lr_field},
                       {"batch_size", bs},
                       {"status", to_string(record.status)},
                       {"final_train_loss", last.train_loss},
                       {"wall_ms_measured", record.wall_ms_measured}});
      std::cout << stem << ": status=" << to_string(record.status)
                << " final_train_loss=" << format_double(last.train_loss)
                << " wall_ms=" << format_double(record.wall_ms_measured)
                << "\n";
      records.push_back({std::move(stem), record});
    }
  }
  nlohmann::json extra;
  extra["config"] = experiment_to_json(base);
  extra["sweep"] = table;
  emit_curves(records, opt.out_dir, extra);
  return kExitOk;
}

// Invariant + oracle self-checks, reusing the library's own oracles.
int cmd_validate() {
  int failures = 0;
  const auto report = [&failures](const std::string& name, bool ok) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };

  {
    Rng rng(1);
    bool ok = true;
    for (int i = 0; i < 50; ++i) {
      const double h = rng.next_uniform(0.5, 10.0);
      const double delta = rng.next_uniform(-1.0, 1.0);
      if (std::abs(delta) < 1e-3) continue;
      const double rate = secant_rate_direct(delta, h * delta, 1e-12);
      ok = ok && std::abs(rate * h - 1.0) < 1e-10;
    }
    report("secant ratio inverts quadratic curvature", ok);
  }
  {
    const auto p = make_quadratic({{0.5, 2.0, 7.0}, 0.0});
    Rng rng(2);
    std::vector<double> theta(3), delta(3);
    for (auto& t : theta) t = rng.next_normal();
    for (auto& d : delta) d = 0.3 * rng.next_normal() + 0.5;
    const auto diag = fd_diag_hessian(*p, theta, p->full_batch(), delta);
    report("finite-difference diagonal Hessian recovers h",
           std::abs(diag[0] - 0.5) < 1e-9 && std::abs(diag[1] - 2.0) < 1e-9 &&
               std::abs(diag[2] - 7.0) < 1e-9);
  }
  {
    LogRegSpec spec;
    spec.n_samples = 80;
    spec.n_features = 6;
    spec.seed = 3;
    const auto p = make_logreg(spec);
    Rng rng(4);
    bool ok = true;
    for (int t = 0; t < 5; ++t) {
      std::vector<double> theta(6);
      for (auto& v : theta) v = 0.5 * rng.next_normal();
      const auto an = p->grad(theta, p->full_batch());
      const auto fd = fd_gradient(*p, theta, p->full_batch());
      double scale = 1e-12, err = 0.0;
      for (std::size_t i = 0; i < an.size(); ++i) {
        scale = std::max(scale, std::abs(an[i]));
        err = std::max(err, std::abs(an[i] - fd[i]));
      }
      ok = ok && err / scale < 1e-5;
    }
    report("logreg analytic gradient matches central differences", ok);
  }
  {
    Rng rng(5);
    std::vector<double> g(60000), gp(60000);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double z1 = rng.next_normal();
      g[i] = 0.5 + z1;
      gp[i] = 0.5 + 0.6 * z1 + 0.8 * rng.next_normal();
    }
    const double grid = beta_bruteforce_oracle(g, gp, 1e-5, 1000);
    const double closed = beta_closed_form(g, gp, 1e-5);
    report("gamma brute-force oracle agrees with the closed form",
           std::abs(grid - closed) <= 2e-3);
  }
  {
    Rng rng(6);
    bool ok = true;
    double accum = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const auto s = adagrad_scale(accum, rng.next_normal());
      ok = ok && s.rho >= 1.0 && s.new_accum >= accum;
      accum = s.new_accum;
    }
    report("Adagrad damping never amplifies", ok);
  }
  return failures == 0 ? kExitOk : kExitInternal;
}

// Rebuild summary.json from the raw CSVs of a previous invocation.
int cmd_emit(const std::string& in_dir, const std::string& out_dir) {
  nlohmann::json runs = nlohmann::json::array();
  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(in_dir)) {
    if (e.path().extension() == ".csv") csvs.push_back(e.path());
  }
  std::sort(csvs.begin(), csvs.end());
  for (const fs::path& path : csvs) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    double best_holdout = std::numeric_limits<double>::infinity();
    double train_at_best = std::numeric_limits<double>::infinity();
    std::int64_t best_step = 0;
    std::size_t rows = 0;
    bool finite_tail = true;
    while (std::getline(in, line)) {
      ++rows;
      std::istringstream ss(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() < 3) continue;
      const double train = std::strtod(cells[1].c_str(), nullptr);
      const double holdout = std::strtod(cells[2].c_str(), nullptr);
      finite_tail = std::isfinite(train);
      if (std::isfinite(holdout) && holdout < best_holdout) {
        best_holdout = holdout;
        train_at_best = train;
        best_step = std::strtoll(cells[0].c_str(), nullptr, 10);
      }
    }
    runs.push_back({{"name", path.stem().string()},
                    {"rows", rows},
                    {"status", finite_tail ? "completed" : "diverged"},
                    {"best_holdout_loss", best_holdout},
                    {"train_at_best", train_at_best},
                    {"best_step", best_step},
                    {"csv", path.filename().string()}});
  }
  fs::create_directories(out_dir);
  nlohmann::json summary;
  summary["schema_version"] = kCheckpointSchemaVersion;
  summary["rerendered_from"] = in_dir;
  summary["runs"] = runs;
  std::ofstream out(fs::path(out_dir) / "summary.json");
  if (!out) throw std::runtime_error("emit: cannot write summary.json");
  out << summary.dump(2) << '\n';
  std::cout << "rendered " << runs.size() << " run(s) into "
            << (fs::path(out_dir) / "summary.json").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AdaSecant optimizer experiments"};
  app.require_subcommand(1);

  CliOptions opt;
  std::vector<double> sweep_lrs;
  std::vector<std::int32_t> sweep_batch_sizes;
  std::string emit_in, emit_out = "out";

  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_common_flags(run, &opt);
  run->add_option("--resume", opt.resume_path, "continue from a checkpoint");
  run->add_option("--checkpoint-at", opt.checkpoint_at,
                  "save a checkpoint at this step, then continue");

  CLI::App* ablate =
      app.add_subcommand("ablate", "run the 16-way toggle grid");
  add_common_flags(ablate, &opt);

  CLI::App* sweep =
      app.add_subcommand("sweep", "baseline learning-rate/batch-size grid");
  add_common_flags(sweep, &opt);
  sweep->add_option("--lrs", sweep_lrs, "learning rates to try");
  sweep->add_option("--batch-sizes", sweep_batch_sizes, "batch sizes to try");

  app.add_subcommand("validate", "run the invariant + oracle self-checks");

  CLI::App* emit = app.add_subcommand("emit", "re-render summaries from CSVs");
  emit->add_option("--in", emit_in, "directory holding run CSVs")->required();
  emit->add_option("--out", emit_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(opt);
    if (ablate->parsed()) return cmd_ablate(opt);
    if (sweep->parsed()) return cmd_sweep(opt, sweep_lrs, sweep_batch_sizes);
    if (emit->parsed()) return cmd_emit(emit_in, emit_out);
    return cmd_validate();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
