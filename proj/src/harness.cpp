#include "adasecant/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "adasecant/rng.hpp"
#include "adasecant/serialize.hpp"

namespace adasecant {

using nlohmann::json;

std::string to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::kCompleted: return "completed";
    case TerminalStatus::kDiverged: return "diverged";
    case TerminalStatus::kError: return "error";
  }
  throw std::logic_error("unknown TerminalStatus");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void ExperimentConfig::validate() const {
  if (batch_size <= 0) throw std::invalid_argument("config: batch_size <= 0");
  if (max_steps <= 0) throw std::invalid_argument("config: max_steps <= 0");
  if (record_every <= 0)
    throw std::invalid_argument("config: record_every <= 0");
  if (optimizer.kind == "adasecant") {
    optimizer.adasecant.validate();
  } else {
    baseline_kind_from_string(optimizer.kind);  // throws on unknown kinds
  }
  if (problem.kind != "quadratic" && problem.kind != "rosenbrock" &&
      problem.kind != "logreg" && problem.kind != "mlp") {
    throw std::invalid_argument("config: unknown problem kind " + problem.kind);
  }
}

std::shared_ptr<Problem> make_problem(const ProblemConfig& cfg,
                                      std::uint64_t run_seed) {
  if (cfg.kind == "quadratic") {
    QuadraticSpec spec;
    spec.noise_sigma = cfg.noise_sigma;
    if (!cfg.h.empty()) {
      spec.h = cfg.h;
    } else {
      if (cfg.dimension <= 0) {
        throw std::invalid_argument("quadratic: dimension <= 0");
      }
      Rng rng(mix64(run_seed) ^ 0x71756164ULL);
      spec.h.resize(static_cast<std::size_t>(cfg.dimension));
      for (double& hi : spec.h) hi = rng.next_uniform(cfg.h_min, cfg.h_max);
    }
    return make_quadratic(spec);
  }
  if (cfg.kind == "rosenbrock") return make_rosenbrock();
  if (cfg.kind == "logreg") {
    LogRegSpec spec = cfg.logreg;
    if (spec.seed == 0) spec.seed = mix64(run_seed ^ 0x6c6f6772ULL);
    return make_logreg(spec);
  }
  if (cfg.kind == "mlp") {
    MlpSpec spec = cfg.mlp;
    if (spec.seed == 0) spec.seed = mix64(run_seed ^ 0x6d6c7000ULL);
    return make_mlp(spec);
  }
  throw std::invalid_argument("unknown problem kind: " + cfg.kind);
}

namespace {

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

bool all_finite(std::span<const double> v) {
  for (const double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Sequential experiment executor; a checkpoint is just its frozen fields.
class Runner {
public:
  explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    problem_ = make_problem(cfg_.problem, cfg_.seed);
    theta_ = problem_->initial_theta(cfg_.seed);
    if (cfg_.optimizer.kind == "adasecant") {
      ada_.emplace(theta_.size());
    } else {
      baseline_.emplace(baseline_kind_from_string(cfg_.optimizer.kind),
                        theta_.size());
      for (const auto& [k, v] : cfg_.optimizer.hyper) {
        baseline_->hyper[k] = v;
      }
      // sgd_momentum decays its rate linearly over the configured run length
      // unless the horizon was set explicitly.
      if (baseline_->kind == BaselineKind::kSgdMomentum &&
          baseline_->hyper_or("lr_decay_steps", 0.0) <= 0.0) {
        baseline_->hyper["lr_decay_steps"] =
            static_cast<double>(cfg_.max_steps);
      }
    }
    record_.config_digest = config_digest(cfg_);
    record_initial_row();
  }

  explicit Runner(const Checkpoint& ck) : cfg_(ck.config) {
    cfg_.validate();
    problem_ = make_problem(cfg_.problem, cfg_.seed);
    theta_ = ck.theta;
    if (theta_.size() != problem_->dimension()) {
      throw std::invalid_argument("checkpoint: theta length != dimension");
    }
    ada_ = ck.ada;
    baseline_ = ck.baseline;
    if (cfg_.optimizer.kind == "adasecant" ? !ada_ : !baseline_) {
      throw std::invalid_argument("checkpoint: optimizer state missing");
    }
    step_ = ck.step;
    record_.config_digest = config_digest(cfg_);
    record_.rows = ck.rows;
  }

  RunRecord run_to(std::int64_t target_steps) {
    const auto t0 = std::chrono::steady_clock::now();
    while (status_ == TerminalStatus::kCompleted && step_ < target_steps) {
      one_step();
    }
    const auto t1 = std::chrono::steady_clock::now();
    record_.wall_ms_measured +=
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    record_.status = status_;
    record_.final_theta = theta_;
    return record_;
  }

  Checkpoint checkpoint() const {
    Checkpoint ck;
    ck.config = cfg_;
    ck.step = step_;
    ck.theta = theta_;
    ck.ada = ada_;
    ck.baseline = baseline_;
    ck.rows = record_.rows;
    return ck;
  }

private:
  void record_initial_row() {
    RunRow row;
    row.step = 0;
    row.train_loss = problem_->loss(theta_, problem_->full_batch());
    row.holdout_loss = problem_->loss(theta_, problem_->holdout_batch());
    record_.rows.push_back(row);
    if (!std::isfinite(row.train_loss) ||
        row.train_loss > cfg_.divergence_loss) {
      status_ = TerminalStatus::kDiverged;
    }
  }

  void one_step() {
    const Batch batch =
        problem_->batch_at(cfg_.seed, cfg_.batch_size, step_);
    const std::vector<double> g = problem_->grad(theta_, batch);

    StepDiagnostics diag;
    std::vector<double> update;
    try {
      if (ada_) {
        StepResult r =
            step(*ada_, g, problem_->layout(), cfg_.optimizer.adasecant);
        update = std::move(r.update);
        diag = r.diag;
      } else {
        update = baseline_step(*baseline_, g);
        diag.mean_rate = baseline_->hyper_or("lr", 0.0);
        diag.update_norm = l2_norm(update);
      }
    } catch (const divergence_error&) {
      ++step_;
      push_divergence_row();
      return;
    }

    for (std::size_t i = 0; i < theta_.size(); ++i) theta_[i] += update[i];
    ++step_;

    const double train_loss = problem_->loss(theta_, problem_->full_batch());
    const bool bad = !all_finite(update) || !all_finite(theta_) ||
                     !std::isfinite(train_loss) ||
                     train_loss > cfg_.divergence_loss;
    if (bad) {
      push_row(train_loss, diag);
      status_ = TerminalStatus::kDiverged;
      return;
    }
    if (step_ % cfg_.record_every == 0) {
      push_row(train_loss, diag);
    }
  }

  void push_row(double train_loss, const StepDiagnostics& diag) {
    RunRow row;
    row.step = step_;
    row.train_loss = train_loss;
    row.holdout_loss = problem_->loss(theta_, problem_->holdout_batch());
    row.mean_rate = diag.mean_rate;
    row.mean_gamma = diag.mean_gamma;
    row.outlier_count = diag.outlier_count;
    row.mean_tau = diag.mean_tau;
    row.update_norm = diag.update_norm;
    record_.rows.push_back(row);
  }

  void push_divergence_row() {
    RunRow row;
    row.step = step_;
    row.train_loss = std::numeric_limits<double>::quiet_NaN();
    row.holdout_loss = std::numeric_limits<double>::quiet_NaN();
    record_.rows.push_back(row);
    status_ = TerminalStatus::kDiverged;
  }

  ExperimentConfig cfg_;
  std::shared_ptr<Problem> problem_;
  std::vector<double> theta_;
  std::optional<AdaSecantState> ada_;
  std::optional<BaselineState> baseline_;
  std::int64_t step_ = 0;
  TerminalStatus status_ = TerminalStatus::kCompleted;
  RunRecord record_;
};

}  // namespace

RunRecord run_experiment(const ExperimentConfig& cfg) {
  Runner runner(cfg);
  return runner.run_to(cfg.max_steps);
}

Checkpoint checkpoint_after(const ExperimentConfig& cfg, std::int64_t steps) {
  Runner runner(cfg);
  runner.run_to(steps);
  return runner.checkpoint();
}

RunRecord resume_experiment(const Checkpoint& ck) {
  Runner runner(ck);
  return runner.run_to(ck.config.max_steps);
}

namespace {

json rows_to_json(const std::vector<RunRow>& rows) {
  json arr = json::array();
  for (const RunRow& r : rows) {
    arr.push_back(json::array({r.step, r.train_loss, r.holdout_loss,
                               r.mean_rate, r.mean_gamma, r.outlier_count,
                               r.mean_tau, r.update_norm, r.wall_ms}));
  }
  return arr;
}

std::vector<RunRow> rows_from_json(const json& arr) {
  std::vector<RunRow> rows;
  for (const auto& e : arr) {
    RunRow r;
    r.step = e.at(0).get<std::int64_t>();
    r.train_loss = e.at(1).get<double>();
    r.holdout_loss = e.at(2).get<double>();
    r.mean_rate = e.at(3).get<double>();
    r.mean_gamma = e.at(4).get<double>();
    r.outlier_count = e.at(5).get<long>();
    r.mean_tau = e.at(6).get<double>();
    r.update_norm = e.at(7).get<double>();
    r.wall_ms = e.at(8).get<double>();
    rows.push_back(r);
  }
  return rows;
}

json problem_to_json(const ProblemConfig& p) {
  json j;
  j["kind"] = p.kind;
  if (p.kind == "quadratic") {
    if (!p.h.empty()) j["h"] = p.h;
    j["dimension"] = p.dimension;
    j["h_min"] = p.h_min;
    j["h_max"] = p.h_max;
    j["noise_sigma"] = p.noise_sigma;
  } else if (p.kind == "logreg") {
    j["n_samples"] = p.logreg.n_samples;
    j["n_features"] = p.logreg.n_features;
    j["separation_margin"] = p.logreg.separation_margin;
    j["seed"] = p.logreg.seed;
  } else if (p.kind == "mlp") {
    j["layer_sizes"] = p.mlp.layer_sizes;
    j["activation"] = p.mlp.activation;
    j["seed"] = p.mlp.seed;
    j["init_std"] = p.mlp.init_std;
    j["n_samples"] = p.mlp.n_samples;
  }
  return j;
}

ProblemConfig problem_from_json(const json& j) {
  ProblemConfig p;
  p.kind = j.value("kind", p.kind);
  if (p.kind == "quadratic") {
    if (j.contains("h")) p.h = j.at("h").get<std::vector<double>>();
    p.dimension = j.value("dimension", p.dimension);
    p.h_min = j.value("h_min", p.h_min);
    p.h_max = j.value("h_max", p.h_max);
    p.noise_sigma = j.value("noise_sigma", p.noise_sigma);
  } else if (p.kind == "logreg") {
    p.logreg.n_samples = j.value("n_samples", p.logreg.n_samples);
    p.logreg.n_features = j.value("n_features", p.logreg.n_features);
    p.logreg.separation_margin =
        j.value("separation_margin", p.logreg.separation_margin);
    p.logreg.seed = j.value("seed", p.logreg.seed);
  } else if (p.kind == "mlp") {
    if (j.contains("layer_sizes")) {
      p.mlp.layer_sizes = j.at("layer_sizes").get<std::vector<std::int32_t>>();
    }
    p.mlp.activation = j.value("activation", p.mlp.activation);
    p.mlp.seed = j.value("seed", p.mlp.seed);
    p.mlp.init_std = j.value("init_std", p.mlp.init_std);
    p.mlp.n_samples = j.value("n_samples", p.mlp.n_samples);
  }
  return p;
}

}  // namespace

json experiment_to_json(const ExperimentConfig& cfg) {
  json opt;
  opt["kind"] = cfg.optimizer.kind;
  if (cfg.optimizer.kind == "adasecant") {
    opt["adasecant"] = config_to_json(cfg.optimizer.adasecant);
  } else if (!cfg.optimizer.hyper.empty()) {
    opt["hyper"] = cfg.optimizer.hyper;
  }
  return json{{"problem", problem_to_json(cfg.problem)},
              {"optimizer", opt},
              {"batch_size", cfg.batch_size},
              {"max_steps", cfg.max_steps},
              {"seed", cfg.seed},
              {"record_every", cfg.record_every},
              {"divergence_loss", cfg.divergence_loss}};
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("problem")) cfg.problem = problem_from_json(j.at("problem"));
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    cfg.optimizer.kind = o.value("kind", cfg.optimizer.kind);
    if (o.contains("adasecant")) {
      cfg.optimizer.adasecant = config_from_json(o.at("adasecant"));
    }
    if (o.contains("hyper")) {
      cfg.optimizer.hyper = o.at("hyper").get<std::map<std::string, double>>();
    }
  }
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.max_steps = j.value("max_steps", cfg.max_steps);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.record_every = j.value("record_every", cfg.record_every);
  cfg.divergence_loss = j.value("divergence_loss", cfg.divergence_loss);
  return cfg;
}

std::string config_digest(const ExperimentConfig& cfg) {
  const std::string dump = experiment_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const char c : dump) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

void checkpoint_save(const Checkpoint& ck, const std::filesystem::path& path) {
  json j;
  j["schema_version"] = kCheckpointSchemaVersion;
  j["config"] = experiment_to_json(ck.config);
  j["step"] = ck.step;
  j["theta"] = ck.theta;
  if (ck.ada) {
    j["optimizer"] = json{{"kind", "adasecant"}, {"state", state_to_json(*ck.ada)}};
  } else if (ck.baseline) {
    j["optimizer"] =
        json{{"kind", to_string(ck.baseline->kind)},
             {"state", baseline_to_json(*ck.baseline)}};
  } else {
    throw std::invalid_argument("checkpoint_save: no optimizer state");
  }
  j["rows"] = rows_to_json(ck.rows);
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("checkpoint_save: cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("checkpoint_load: cannot read " + path.string());
  }
  json j = json::parse(in);
  const int version = j.at("schema_version").get<int>();
  if (version != kCheckpointSchemaVersion) {
    throw std::runtime_error("checkpoint_load: schema version " +
                             std::to_string(version) + " != " +
                             std::to_string(kCheckpointSchemaVersion));
  }
  Checkpoint ck;
  ck.config = experiment_from_json(j.at("config"));
  ck.step = j.at("step").get<std::int64_t>();
  ck.theta = j.at("theta").get<std::vector<double>>();
  const auto& opt = j.at("optimizer");
  if (opt.at("kind").get<std::string>() == "adasecant") {
    ck.ada = state_from_json(opt.at("state"));
  } else {
    ck.baseline = baseline_from_json(opt.at("state"));
  }
  ck.rows = rows_from_json(j.at("rows"));
  return ck;
}

AblationGrid AblationGrid::full() {
  AblationGrid grid;
  for (int mask = 0; mask < 16; ++mask) {
    grid.combos.push_back({(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0,
                           (mask & 8) != 0});
  }
  return grid;
}

namespace {

std::string ablation_label(const std::array<bool, 4>& t) {
  std::string label = "adasecant";
  const char* names[4] = {"VR", "AG", "BN", "OD"};
  for (int i = 0; i < 4; ++i) {
    if (!t[static_cast<std::size_t>(i)]) {
      label += ", no ";
      label += names[i];
    }
  }
  return label;
}

void early_stopping(const RunRecord& record, double* best_holdout,
                    double* train_at_best, std::int64_t* best_step) {
  *best_holdout = std::numeric_limits<double>::infinity();
  *train_at_best = std::numeric_limits<double>::infinity();
  *best_step = 0;
  for (const RunRow& row : record.rows) {
    if (std::isfinite(row.holdout_loss) && row.holdout_loss < *best_holdout) {
      *best_holdout = row.holdout_loss;
      *train_at_best = row.train_loss;
      *best_step = row.step;
    }
  }
}

}  // namespace

std::vector<AblationRow> run_ablation(const ExperimentConfig& base,
                                      const AblationGrid& grid) {
  if (base.optimizer.kind != "adasecant") {
    throw std::invalid_argument("run_ablation: base optimizer must be adasecant");
  }
  std::vector<AblationRow> rows;
  for (const auto& combo : grid.combos) {
    ExperimentConfig cfg = base;
    cfg.optimizer.adasecant.use_vr = combo[0];
    cfg.optimizer.adasecant.use_ag = combo[1];
    cfg.optimizer.adasecant.use_bn = combo[2];
    cfg.optimizer.adasecant.use_od = combo[3];

    AblationRow row;
    row.label = ablation_label(combo);
    row.toggles = combo;
    try {
      row.record = run_experiment(cfg);
    } catch (const std::exception&) {
      row.record.status = TerminalStatus::kError;
      row.record.config_digest = config_digest(cfg);
    }
    early_stopping(row.record, &row.best_holdout, &row.train_at_best,
                   &row.best_step);
    rows.push_back(std::move(row));
  }
  return rows;
}

double beta_bruteforce_oracle(std::span<const double> g,
                              std::span<const double> g_next, double lambda,
                              int grid_size) {
  if (g.empty() || g.size() != g_next.size()) {
    throw std::invalid_argument("beta_bruteforce_oracle: empty or mismatched stream");
  }
  if (grid_size < 100) {
    throw std::invalid_argument("beta_bruteforce_oracle: grid_size < 100");
  }
  const auto n = static_cast<double>(g.size());
  double mean = 0.0;
  for (const double x : g) mean += x;
  mean /= n;

  double best_beta = 1.0;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= grid_size; ++k) {
    const double beta = static_cast<double>(k) / grid_size;
    double obj = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = beta * g[i] + (1.0 - beta) * mean - g_next[i];
      obj += r * r;
    }
    obj = obj / n + lambda * beta * beta;
    if (obj < best_obj) {
      best_obj = obj;
      best_beta = beta;
    }
  }
  return best_beta;
}

double beta_closed_form(std::span<const double> g,
                        std::span<const double> g_next, double lambda) {
  if (g.empty() || g.size() != g_next.size()) {
    throw std::invalid_argument("beta_closed_form: empty or mismatched stream");
  }
  const auto n = static_cast<double>(g.size());
  double mean = 0.0;
  for (const double x : g) mean += x;
  mean /= n;
  double cov = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    cov += (g[i] - mean) * (g_next[i] - mean);
    var += (g[i] - mean) * (g[i] - mean);
  }
  return (cov / n) / (var / n + lambda);
}

std::string run_record_csv(const RunRecord& record) {
  std::string out =
      "step,train_loss,holdout_loss,mean_rate,mean_gamma,outlier_count,"
      "mean_tau,update_norm,wall_ms\n";
  for (const RunRow& r : record.rows) {
    out += std::to_string(r.step);
    out += ',';
    out += format_double(r.train_loss);
    out += ',';
    out += format_double(r.holdout_loss);
    out += ',';
    out += format_double(r.mean_rate);
    out += ',';
    out += format_double(r.mean_gamma);
    out += ',';
    out += std::to_string(r.outlier_count);
    out += ',';
    out += format_double(r.mean_tau);
    out += ',';
    out += format_double(r.update_norm);
    out += ',';
    out += format_double(r.wall_ms);
    out += '\n';
  }
  return out;
}

void emit_curves(std::span<const NamedRecord> records,
                 const std::filesystem::path& out_dir,
                 const nlohmann::json& extra) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir)) {
    throw std::runtime_error("emit_curves: cannot create " + out_dir.string());
  }
  json summary;
  summary["schema_version"] = kCheckpointSchemaVersion;
  for (const auto& [key, value] : extra.items()) summary[key] = value;
  auto& runs = summary["runs"] = json::array();
  for (const NamedRecord& nr : records) {
    const auto csv_path = out_dir / (nr.name + ".csv");
    std::ofstream out(csv_path);
    if (!out) {
      throw std::runtime_error("emit_curves: cannot write " +
                               csv_path.string());
    }
    out << run_record_csv(nr.record);

    double best_holdout, train_at_best;
    std::int64_t best_step;
    early_stopping(nr.record, &best_holdout, &train_at_best, &best_step);
    runs.push_back(json{{"name", nr.name},
                        {"config_digest", nr.record.config_digest},
                        {"status", to_string(nr.record.status)},
                        {"rows", nr.record.rows.size()},
                        {"best_holdout_loss", best_holdout},
                        {"train_at_best", train_at_best},
                        {"best_step", best_step},
                        {"wall_ms_measured", nr.record.wall_ms_measured},
                        {"csv", nr.name + ".csv"}});
  }
  std::ofstream out(out_dir / "summary.json");
  if (!out) {
    throw std::runtime_error("emit_curves: cannot write summary.json");
  }
  out << summary.dump(2) << '\n';
}

}  // namespace adasecant
