#include "adasecant/problems.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adasecant/rng.hpp"

namespace adasecant {

namespace {

// Stream tags keep the independent random draws of one seed apart.
enum : std::uint64_t {
  kStreamBatchNoise = 0x6e6f6973ULL,   // per-batch gradient noise
  kStreamEpochPerm = 0x7065726dULL,    // epoch shuffles
  kStreamData = 0x64617461ULL,         // synthetic datasets
  kStreamInit = 0x696e6974ULL,         // initial parameters
  kStreamTeacher = 0x74656163ULL,      // mlp teacher weights
};

std::vector<std::int32_t> range_indices(std::int32_t lo, std::int32_t hi) {
  std::vector<std::int32_t> v(static_cast<std::size_t>(hi - lo));
  for (std::int32_t i = lo; i < hi; ++i) v[static_cast<std::size_t>(i - lo)] = i;
  return v;
}

// Shared minibatch schedule for data-backed problems: each epoch is a
// seeded permutation of [0, n) chopped into consecutive chunks.
Batch epoch_batch(std::uint64_t seed, std::int32_t n, std::int32_t batch_size,
                  std::int64_t step) {
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be > 0");
  const std::int64_t per_epoch =
      (n + batch_size - 1) / batch_size;
  const std::int64_t epoch = step / per_epoch;
  const std::int64_t slot = step % per_epoch;
  Rng rng(seed ^ mix64(static_cast<std::uint64_t>(epoch)), kStreamEpochPerm);
  const auto perm = rng.permutation(n);
  Batch b;
  const std::int64_t lo = slot * batch_size;
  const std::int64_t hi = std::min<std::int64_t>(lo + batch_size, n);
  b.indices.assign(perm.begin() + lo, perm.begin() + hi);
  b.noise_key = 0;
  return b;
}

class QuadraticProblem final : public Problem {
public:
  explicit QuadraticProblem(QuadraticSpec spec)
      : spec_(std::move(spec)), layout_(BlockLayout::single(spec_.h.size())) {
    if (spec_.h.empty()) throw std::invalid_argument("quadratic: empty h");
    for (const double hi : spec_.h) {
      if (!(hi > 0.0)) throw std::invalid_argument("quadratic: h_i must be > 0");
    }
    if (spec_.noise_sigma < 0.0) {
      throw std::invalid_argument("quadratic: noise_sigma must be >= 0");
    }
  }

  std::size_t dimension() const override { return spec_.h.size(); }
  const BlockLayout& layout() const override { return layout_; }
  std::string name() const override { return "quadratic"; }

  double loss(std::span<const double> theta, const Batch&) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      s += 0.5 * spec_.h[i] * theta[i] * theta[i];
    }
    return s;
  }

  std::vector<double> grad(std::span<const double> theta,
                           const Batch& batch) const override {
    std::vector<double> g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) g[i] = spec_.h[i] * theta[i];
    if (spec_.noise_sigma > 0.0 && batch.noise_key != 0) {
      Rng rng(batch.noise_key, kStreamBatchNoise);
      for (double& gi : g) gi += spec_.noise_sigma * rng.next_normal();
    }
    return g;
  }

  Batch batch_at(std::uint64_t seed, std::int32_t,
                 std::int64_t step) const override {
    Batch b;
    b.noise_key = mix64(seed ^ mix64(static_cast<std::uint64_t>(step) + 1));
    if (b.noise_key == 0) b.noise_key = 1;
    return b;
  }

  Batch full_batch() const override { return Batch{}; }

  std::vector<double> initial_theta(std::uint64_t) const override {
    return std::vector<double>(spec_.h.size(), 1.0);
  }

private:
  QuadraticSpec spec_;
  BlockLayout layout_;
};

class RosenbrockProblem final : public Problem {
public:
  RosenbrockProblem() : layout_(BlockLayout::single(2)) {}

  std::size_t dimension() const override { return 2; }
  const BlockLayout& layout() const override { return layout_; }
  std::string name() const override { return "rosenbrock"; }

  double loss(std::span<const double> theta, const Batch&) const override {
    const double x = theta[0], y = theta[1];
    const double a = 1.0 - x;
    const double b = y - x * x;
    return a * a + 100.0 * b * b;
  }

  std::vector<double> grad(std::span<const double> theta,
                           const Batch&) const override {
    const double x = theta[0], y = theta[1];
    const double b = y - x * x;
    return {-2.0 * (1.0 - x) - 400.0 * x * b, 200.0 * b};
  }

  Batch batch_at(std::uint64_t, std::int32_t, std::int64_t) const override {
    return Batch{};
  }
  Batch full_batch() const override { return Batch{}; }

  std::vector<double> initial_theta(std::uint64_t) const override {
    return {-1.2, 1.0};
  }

private:
  BlockLayout layout_;
};

class LogRegProblem final : public Problem {
public:
  explicit LogRegProblem(const LogRegSpec& spec)
      : spec_(spec),
        layout_(BlockLayout::single(static_cast<std::size_t>(spec.n_features))) {
    if (spec.n_samples <= 0 || spec.n_features <= 0) {
      throw std::invalid_argument("logreg: n_samples/n_features must be > 0");
    }
    if (!(spec.separation_margin > 0.0)) {
      throw std::invalid_argument("logreg: separation_margin must be > 0");
    }
    const auto n = static_cast<std::size_t>(spec.n_samples);
    const auto d = static_cast<std::size_t>(spec.n_features);
    n_holdout_ = static_cast<std::int32_t>(std::min<std::size_t>(n, 256));

    Rng rng(spec.seed, kStreamData);
    std::vector<double> w(d);
    double norm = 0.0;
    for (double& wi : w) {
      wi = rng.next_normal();
      norm += wi * wi;
    }
    norm = std::sqrt(norm);
    for (double& wi : w) wi /= norm;

    const std::size_t total = n + static_cast<std::size_t>(n_holdout_);
    features_.resize(total * d);
    labels_.resize(total);
    std::vector<double> x(d);
    for (std::size_t s = 0; s < total; ++s) {
      double m = 0.0;
      do {
        m = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          x[j] = rng.next_normal();
          m += x[j] * w[j];
        }
      } while (std::abs(m) < spec.separation_margin);
      std::copy(x.begin(), x.end(), features_.begin() + s * d);
      labels_[s] = m > 0.0 ? 1.0 : -1.0;
    }
  }

  std::size_t dimension() const override {
    return static_cast<std::size_t>(spec_.n_features);
  }
  const BlockLayout& layout() const override { return layout_; }
  std::string name() const override { return "logreg"; }

  double loss(std::span<const double> theta, const Batch& batch) const override {
    const auto& idx = batch.indices;
    double s = 0.0;
    for (const std::int32_t i : idx) s += sample_loss(theta, i);
    return idx.empty() ? 0.0 : s / static_cast<double>(idx.size());
  }

  std::vector<double> grad(std::span<const double> theta,
                           const Batch& batch) const override {
    const auto d = dimension();
    std::vector<double> g(d, 0.0);
    const auto& idx = batch.indices;
    for (const std::int32_t i : idx) {
      const double* x = row(i);
      const double y = labels_[static_cast<std::size_t>(i)];
      double z = 0.0;
      for (std::size_t j = 0; j < d; ++j) z += x[j] * theta[j];
      const double s = sigmoid(-y * z);  // d/dz log(1 + exp(-y z)) * (-1/y)
      for (std::size_t j = 0; j < d; ++j) g[j] -= y * s * x[j];
    }
    if (!idx.empty()) {
      for (double& gj : g) gj /= static_cast<double>(idx.size());
    }
    return g;
  }

  Batch batch_at(std::uint64_t seed, std::int32_t batch_size,
                 std::int64_t step) const override {
    return epoch_batch(seed, spec_.n_samples, batch_size, step);
  }

  Batch full_batch() const override {
    Batch b;
    b.indices = range_indices(0, spec_.n_samples);
    return b;
  }

  Batch holdout_batch() const override {
    Batch b;
    b.indices = range_indices(spec_.n_samples, spec_.n_samples + n_holdout_);
    return b;
  }

  std::vector<double> initial_theta(std::uint64_t) const override {
    return std::vector<double>(dimension(), 0.0);
  }

private:
  static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

  const double* row(std::int32_t i) const {
    return features_.data() + static_cast<std::size_t>(i) * dimension();
  }

  double sample_loss(std::span<const double> theta, std::int32_t i) const {
    const double* x = row(i);
    const double y = labels_[static_cast<std::size_t>(i)];
    double z = 0.0;
    for (std::size_t j = 0; j < dimension(); ++j) z += x[j] * theta[j];
    // log(1 + exp(-y z)) evaluated stably
    const double m = -y * z;
    return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
  }

  LogRegSpec spec_;
  BlockLayout layout_;
  std::int32_t n_holdout_ = 0;
  std::vector<double> features_;  // row-major (n + holdout) x d
  std::vector<double> labels_;    // +-1
};

// Fully-connected tanh network with a linear output layer, fit to a frozen
// teacher of the same shape by mean squared error.
class MlpProblem final : public Problem {
public:
  explicit MlpProblem(const MlpSpec& spec) : spec_(spec) {
    if (spec.layer_sizes.size() < 2) {
      throw std::invalid_argument("mlp: need at least input and output sizes");
    }
    for (const std::int32_t s : spec.layer_sizes) {
      if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be > 0");
    }
    if (spec.activation != "tanh") {
      throw std::invalid_argument("mlp: only tanh is supported");
    }
    if (spec.n_samples <= 0) {
      throw std::invalid_argument("mlp: n_samples must be > 0");
    }

    std::vector<std::size_t> sizes;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
      const auto in = static_cast<std::size_t>(spec.layer_sizes[l]);
      const auto out = static_cast<std::size_t>(spec.layer_sizes[l + 1]);
      sizes.push_back(in * out);  // weight matrix block
      sizes.push_back(out);       // bias block
    }
    layout_ = BlockLayout::from_sizes(sizes);

    // Teacher weights, then inputs and targets.
    Rng trng(spec.seed, kStreamTeacher);
    std::vector<double> teacher(layout_.dimension());
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
      const double scale =
          1.0 / std::sqrt(static_cast<double>(spec.layer_sizes[l]));
      const auto& wb = layout_.blocks[2 * l];
      const auto& bb = layout_.blocks[2 * l + 1];
      for (std::size_t i = wb.begin; i < wb.end; ++i) {
        teacher[i] = scale * trng.next_normal();
      }
      for (std::size_t i = bb.begin; i < bb.end; ++i) {
        teacher[i] = 0.1 * trng.next_normal();
      }
    }

    const auto n = static_cast<std::size_t>(spec.n_samples);
    const auto in_dim = static_cast<std::size_t>(spec.layer_sizes.front());
    const auto out_dim = static_cast<std::size_t>(spec.layer_sizes.back());
    n_holdout_ = static_cast<std::int32_t>(std::min<std::size_t>(n, 64));
    const std::size_t total = n + static_cast<std::size_t>(n_holdout_);

    Rng drng(spec.seed, kStreamData);
    inputs_.resize(total * in_dim);
    for (double& v : inputs_) v = drng.next_normal();
    targets_.resize(total * out_dim);
    std::vector<double> y(out_dim);
    for (std::size_t s = 0; s < total; ++s) {
      forward(teacher, inputs_.data() + s * in_dim, y.data(), nullptr);
      std::copy(y.begin(), y.end(), targets_.begin() + s * out_dim);
    }
  }

  std::size_t dimension() const override { return layout_.dimension(); }
  const BlockLayout& layout() const override { return layout_; }
  std::string name() const override { return "mlp"; }

  double loss(std::span<const double> theta, const Batch& batch) const override {
    const auto out_dim = static_cast<std::size_t>(spec_.layer_sizes.back());
    std::vector<double> y(out_dim);
    double s = 0.0;
    for (const std::int32_t i : batch.indices) {
      forward(theta, input_row(i), y.data(), nullptr);
      const double* t = target_row(i);
      for (std::size_t j = 0; j < out_dim; ++j) {
        const double r = y[j] - t[j];
        s += 0.5 * r * r;
      }
    }
    return batch.indices.empty()
               ? 0.0
               : s / static_cast<double>(batch.indices.size());
  }

  std::vector<double> grad(std::span<const double> theta,
                           const Batch& batch) const override {
    std::vector<double> g(dimension(), 0.0);
    const auto out_dim = static_cast<std::size_t>(spec_.layer_sizes.back());
    std::vector<double> y(out_dim);
    Activations acts;
    for (const std::int32_t i : batch.indices) {
      forward(theta, input_row(i), y.data(), &acts);
      backward(theta, acts, target_row(i), g);
    }
    if (!batch.indices.empty()) {
      for (double& gj : g) gj /= static_cast<double>(batch.indices.size());
    }
    return g;
  }

  Batch batch_at(std::uint64_t seed, std::int32_t batch_size,
                 std::int64_t step) const override {
    return epoch_batch(seed, spec_.n_samples, batch_size, step);
  }

  Batch full_batch() const override {
    Batch b;
    b.indices = range_indices(0, spec_.n_samples);
    return b;
  }

  Batch holdout_batch() const override {
    Batch b;
    b.indices = range_indices(spec_.n_samples, spec_.n_samples + n_holdout_);
    return b;
  }

  std::vector<double> initial_theta(std::uint64_t seed) const override {
    Rng rng(spec_.seed ^ mix64(seed), kStreamInit);
    std::vector<double> theta(dimension());
    for (double& v : theta) v = spec_.init_std * rng.next_normal();
    return theta;
  }

private:
  struct Activations {
    // per layer: pre-activation outputs (post-tanh for hidden layers)
    std::vector<std::vector<double>> values;
  };

  const double* input_row(std::int32_t i) const {
    return inputs_.data() +
           static_cast<std::size_t>(i) *
               static_cast<std::size_t>(spec_.layer_sizes.front());
  }
  const double* target_row(std::int32_t i) const {
    return targets_.data() +
           static_cast<std::size_t>(i) *
               static_cast<std::size_t>(spec_.layer_sizes.back());
  }

  // W_l is out x in, row-major, followed by the bias. Hidden layers apply
  // tanh, the last layer is linear.
  void forward(std::span<const double> theta, const double* x, double* y_out,
               Activations* acts) const {
    const std::size_t layers = spec_.layer_sizes.size() - 1;
    std::vector<double> cur(x, x + spec_.layer_sizes.front());
    if (acts) {
      acts->values.assign(1, cur);
    }
    for (std::size_t l = 0; l < layers; ++l) {
      const auto in = static_cast<std::size_t>(spec_.layer_sizes[l]);
      const auto out = static_cast<std::size_t>(spec_.layer_sizes[l + 1]);
      const double* w = theta.data() + layout_.blocks[2 * l].begin;
      const double* b = theta.data() + layout_.blocks[2 * l + 1].begin;
      std::vector<double> next(out);
      for (std::size_t r = 0; r < out; ++r) {
        double z = b[r];
        const double* wr = w + r * in;
        for (std::size_t c = 0; c < in; ++c) z += wr[c] * cur[c];
        next[r] = (l + 1 < layers) ? std::tanh(z) : z;
      }
      cur = std::move(next);
      if (acts) acts->values.push_back(cur);
    }
    std::copy(cur.begin(), cur.end(), y_out);
  }

  void backward(std::span<const double> theta, const Activations& acts,
                const double* target, std::vector<double>& g) const {
    const std::size_t layers = spec_.layer_sizes.size() - 1;
    const auto& out_act = acts.values.back();
    std::vector<double> delta(out_act.size());
    for (std::size_t j = 0; j < delta.size(); ++j) {
      delta[j] = out_act[j] - target[j];  // d(0.5 r^2)/dy
    }
    for (std::size_t l = layers; l-- > 0;) {
      const auto in = static_cast<std::size_t>(spec_.layer_sizes[l]);
      const auto out = static_cast<std::size_t>(spec_.layer_sizes[l + 1]);
      const double* w = theta.data() + layout_.blocks[2 * l].begin;
      double* gw = g.data() + layout_.blocks[2 * l].begin;
      double* gb = g.data() + layout_.blocks[2 * l + 1].begin;
      const auto& below = acts.values[l];
      for (std::size_t r = 0; r < out; ++r) {
        gb[r] += delta[r];
        double* gwr = gw + r * in;
        for (std::size_t c = 0; c < in; ++c) gwr[c] += delta[r] * below[c];
      }
      if (l == 0) break;
      std::vector<double> prev(in, 0.0);
      for (std::size_t c = 0; c < in; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < out; ++r) s += w[r * in + c] * delta[r];
        // below == tanh(z) for hidden layers, so tanh' = 1 - below^2
        prev[c] = s * (1.0 - below[c] * below[c]);
      }
      delta = std::move(prev);
    }
  }

  MlpSpec spec_;
  BlockLayout layout_;
  std::int32_t n_holdout_ = 0;
  std::vector<double> inputs_;
  std::vector<double> targets_;
};

}  // namespace

std::shared_ptr<Problem> make_quadratic(const QuadraticSpec& spec) {
  return std::make_shared<QuadraticProblem>(spec);
}

std::shared_ptr<Problem> make_rosenbrock() {
  return std::make_shared<RosenbrockProblem>();
}

std::shared_ptr<Problem> make_logreg(const LogRegSpec& spec) {
  return std::make_shared<LogRegProblem>(spec);
}

std::shared_ptr<Problem> make_mlp(const MlpSpec& spec) {
  return std::make_shared<MlpProblem>(spec);
}

std::vector<double> fd_gradient(const Problem& problem,
                                std::span<const double> theta,
                                const Batch& batch, double h_step) {
  if (!(h_step > 0.0)) throw std::invalid_argument("fd_gradient: h_step <= 0");
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h_step;
    const double up = problem.loss(point, batch);
    point[i] = saved - h_step;
    const double down = problem.loss(point, batch);
    point[i] = saved;
    out[i] = (up - down) / (2.0 * h_step);
  }
  return out;
}

std::vector<double> fd_diag_hessian(const Problem& problem,
                                    std::span<const double> theta,
                                    const Batch& batch,
                                    std::span<const double> delta) {
  for (const double di : delta) {
    if (di == 0.0) {
      throw std::invalid_argument("fd_diag_hessian: delta has a zero component");
    }
  }
  std::vector<double> shifted(theta.begin(), theta.end());
  for (std::size_t i = 0; i < theta.size(); ++i) shifted[i] += delta[i];
  const std::vector<double> g0 = problem.grad(theta, batch);
  const std::vector<double> g1 = problem.grad(shifted, batch);
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out[i] = (g1[i] - g0[i]) / delta[i];
  }
  return out;
}

}  // namespace adasecant
