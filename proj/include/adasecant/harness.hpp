#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adasecant/baselines.hpp"
#include "adasecant/problems.hpp"
#include "adasecant/stepper.hpp"

namespace adasecant {

inline constexpr int kCheckpointSchemaVersion = 1;

// Tagged problem selection. For the quadratic an explicit h wins; otherwise
// curvatures are drawn uniformly from [h_min, h_max] under the problem seed.
struct ProblemConfig {
  std::string kind = "quadratic";  // quadratic | rosenbrock | logreg | mlp

  std::vector<double> h;
  std::int32_t dimension = 20;
  double h_min = 0.5;
  double h_max = 10.0;
  double noise_sigma = 0.0;

  LogRegSpec logreg;
  MlpSpec mlp{{8, 8, 1}};
};

struct OptimizerConfig {
  std::string kind = "adasecant";  // adasecant | sgd_momentum | adagrad |
                                   // rmsprop | adadelta | adam
  AdaSecantConfig adasecant;
  std::map<std::string, double> hyper;  // baseline hyperparameter overrides
};

struct ExperimentConfig {
  ProblemConfig problem;
  OptimizerConfig optimizer;
  std::int32_t batch_size = 32;
  std::int64_t max_steps = 1000;
  std::uint64_t seed = 1;
  std::int64_t record_every = 10;
  double divergence_loss = 1e6;

  void validate() const;  // throws std::invalid_argument
};

enum class TerminalStatus { kCompleted, kDiverged, kError };
std::string to_string(TerminalStatus s);

struct RunRow {
  std::int64_t step = 0;
  double train_loss = 0.0;
  double holdout_loss = 0.0;
  double mean_rate = 0.0;
  double mean_gamma = 0.0;
  long outlier_count = 0;
  double mean_tau = 0.0;
  double update_norm = 0.0;
  // Kept at 0.0 so identical seeds produce byte-identical CSVs; measured
  // time lives in RunRecord::wall_ms_measured / the summary document.
  double wall_ms = 0.0;
};

struct RunRecord {
  std::string config_digest;
  std::vector<RunRow> rows;
  TerminalStatus status = TerminalStatus::kCompleted;
  double wall_ms_measured = 0.0;  // excluded from determinism checks
  std::vector<double> final_theta;
};

struct Checkpoint {
  ExperimentConfig config;
  std::int64_t step = 0;
  std::vector<double> theta;
  std::optional<AdaSecantState> ada;
  std::optional<BaselineState> baseline;
  std::vector<RunRow> rows;
};

// Instantiates the configured problem. The effective data seed is the
// spec's own seed when nonzero, otherwise derived from the run seed.
std::shared_ptr<Problem> make_problem(const ProblemConfig& cfg,
                                      std::uint64_t run_seed);

// Steps the configured optimizer until max_steps, divergence (loss above
// divergence_loss or any non-finite value; recorded, never thrown), with a
// row at step 0 and every record_every steps. Deterministic given the seed.
RunRecord run_experiment(const ExperimentConfig& cfg);

// Runs the first `steps` steps and captures a resumable snapshot.
Checkpoint checkpoint_after(const ExperimentConfig& cfg, std::int64_t steps);

// Continues a snapshot to config.max_steps; the resulting record is
// bit-identical to the uninterrupted run's.
RunRecord resume_experiment(const Checkpoint& ck);

void checkpoint_save(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint checkpoint_load(const std::filesystem::path& path);

// Table-1-style toggle lattice over {VR, AG, BN, OD}.
struct AblationGrid {
  std::vector<std::array<bool, 4>> combos;  // vr, ag, bn, od
  static AblationGrid full();               // all 16 subsets
};

struct AblationRow {
  std::string label;  // "adasecant" / "adasecant, no VR, no OD" / ...
  std::array<bool, 4> toggles{};
  RunRecord record;
  double best_holdout = 0.0;   // early stopping over recorded rows
  double train_at_best = 0.0;
  std::int64_t best_step = 0;
};

// One run per toggle combination; per-run divergence (or error) lands in
// the row's status instead of failing the grid.
std::vector<AblationRow> run_ablation(const ExperimentConfig& base,
                                      const AblationGrid& grid);

// Grid minimizer over beta in (0, 1] of the Monte-Carlo objective
// mean((beta g + (1-beta) mean(g) - g')^2) + lambda beta^2 for the paired
// sample stream (g_t, g'_t). grid_size >= 100; empty stream is an error.
double beta_bruteforce_oracle(std::span<const double> g,
                              std::span<const double> g_next, double lambda,
                              int grid_size);

// Closed-form counterpart: E[(g - mean)(g' - mean)] / (Var(g) + lambda).
double beta_closed_form(std::span<const double> g,
                        std::span<const double> g_next, double lambda);

struct NamedRecord {
  std::string name;  // file stem
  RunRecord record;
};

// One CSV per record (fixed header: step,train_loss,holdout_loss,mean_rate,
// mean_gamma,outlier_count,mean_tau,update_norm,wall_ms) plus summary.json.
// `extra` is merged into the summary (resolved config echo, labels, ...).
void emit_curves(std::span<const NamedRecord> records,
                 const std::filesystem::path& out_dir,
                 const nlohmann::json& extra = nlohmann::json::object());

std::string run_record_csv(const RunRecord& record);
std::string config_digest(const ExperimentConfig& cfg);

nlohmann::json experiment_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const nlohmann::json& j);

// Shortest-round-trip decimal form (std::to_chars), locale-independent.
std::string format_double(double v);

}  // namespace adasecant
