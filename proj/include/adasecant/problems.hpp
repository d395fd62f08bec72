#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "adasecant/block_layout.hpp"

namespace adasecant {

// A minibatch: sample indices for data-backed problems, plus a key that
// seeds per-batch gradient noise for synthetic ones. noise_key == 0 is the
// deterministic mode used by full_batch and the finite-difference oracles.
struct Batch {
  std::vector<std::int32_t> indices;
  std::uint64_t noise_key = 0;
};

// Differentiable test problem over a flat parameter vector. loss/grad are
// pure functions of (theta, batch); batches are position-indexed so a run
// can resume from a step count alone.
class Problem {
public:
  virtual ~Problem() = default;

  virtual std::size_t dimension() const = 0;
  virtual const BlockLayout& layout() const = 0;
  virtual std::string name() const = 0;

  virtual double loss(std::span<const double> theta,
                      const Batch& batch) const = 0;
  virtual std::vector<double> grad(std::span<const double> theta,
                                   const Batch& batch) const = 0;

  // Batch at position `step` of the stream defined by (seed, batch_size).
  virtual Batch batch_at(std::uint64_t seed, std::int32_t batch_size,
                         std::int64_t step) const = 0;

  // All data, deterministic mode.
  virtual Batch full_batch() const = 0;

  // Fixed seeded evaluation batch disjoint from the training stream; falls
  // back to full_batch for analytic problems.
  virtual Batch holdout_batch() const { return full_batch(); }

  virtual std::vector<double> initial_theta(std::uint64_t seed) const = 0;
};

struct QuadraticSpec {
  std::vector<double> h;      // diagonal curvatures, all > 0
  double noise_sigma = 0.0;   // std of additive gradient noise
};

struct LogRegSpec {
  std::int32_t n_samples = 1000;
  std::int32_t n_features = 20;
  double separation_margin = 3.0;
  std::uint64_t seed = 0;
};

struct MlpSpec {
  std::vector<std::int32_t> layer_sizes;  // e.g. {4, 2, 1}
  std::string activation = "tanh";
  std::uint64_t seed = 0;
  double init_std = 0.05;
  std::int32_t n_samples = 256;
};

// loss = 1/2 sum h_i theta_i^2; grad = h .* theta + N(0, sigma^2) noise
// drawn from the batch key (none for noise_key == 0).
std::shared_ptr<Problem> make_quadratic(const QuadraticSpec& spec);

// f(x, y) = (1-x)^2 + 100 (y - x^2)^2, single block.
std::shared_ptr<Problem> make_rosenbrock();

// Logistic loss over seeded separable data: features ~ N(0, I), labels from
// a planted hyperplane, margin enforced by rejection.
std::shared_ptr<Problem> make_logreg(const LogRegSpec& spec);

// tanh MLP regressing a seeded teacher network, mean squared loss, one
// block per weight matrix and per bias vector.
std::shared_ptr<Problem> make_mlp(const MlpSpec& spec);

// Central differences of the loss on a fixed batch.
std::vector<double> fd_gradient(const Problem& problem,
                                std::span<const double> theta,
                                const Batch& batch, double h_step = 1e-5);

// (grad(theta + delta) - grad(theta)) ./ delta. Throws std::invalid_argument
// if any delta_i == 0.
std::vector<double> fd_diag_hessian(const Problem& problem,
                                    std::span<const double> theta,
                                    const Batch& batch,
                                    std::span<const double> delta);

}  // namespace adasecant
