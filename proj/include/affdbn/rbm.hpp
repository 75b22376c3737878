#pragma once

#include "affdbn/common.hpp"
#include "affdbn/random.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace affdbn {

/// Parameters of one Bernoulli RBM layer. Weights are n_visible x n_hidden.
template <typename Scalar>
struct RbmParams {
  MatrixX<Scalar> weights;
  VectorX<Scalar> visible_bias;
  VectorX<Scalar> hidden_bias;

  Index n_visible() const { return weights.rows(); }
  Index n_hidden() const { return weights.cols(); }

  static RbmParams zeros(Index n_visible, Index n_hidden) {
    return {MatrixX<Scalar>::Zero(n_visible, n_hidden), VectorX<Scalar>::Zero(n_visible),
            VectorX<Scalar>::Zero(n_hidden)};
  }

  void validate() const {
    if (visible_bias.size() != n_visible() || hidden_bias.size() != n_hidden())
      throw std::invalid_argument("RBM parameter dimensions are inconsistent");
    if (!weights.allFinite() || !visible_bias.allFinite() || !hidden_bias.allFinite())
      throw std::invalid_argument("RBM parameters contain non-finite values");
  }

  template <typename Other>
  RbmParams<Other> cast() const {
    return {weights.template cast<Other>(), visible_bias.template cast<Other>(),
            hidden_bias.template cast<Other>()};
  }

  friend bool operator==(const RbmParams& x, const RbmParams& y) {
    return x.weights == y.weights && x.visible_bias == y.visible_bias && x.hidden_bias == y.hidden_bias;
  }
};

/// Contrastive-divergence hyperparameters. Defaults are the fixed values used
/// across every experiment: lr 0.01, CD-10, 200 epochs, batch 32, seed 0.
struct TrainConfig {
  double learning_rate = 0.01;
  int cd_k = 10;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0) || cd_k < 1 || epochs < 1 || batch_size < 1)
      throw std::invalid_argument("train config: learning rate, cd_k, epochs and batch size must be positive");
  }

  TrainConfig with_seed(std::uint64_t s) const {
    TrainConfig c = *this;
    c.seed = s;
    return c;
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

namespace detail {

template <typename Derived>
typename Derived::PlainObject logistic(const Eigen::MatrixBase<Derived>& x) {
  return ((-x.array()).exp() + typename Derived::Scalar(1)).inverse().matrix();
}

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

/// Bernoulli draws in column-major storage order.
template <typename Scalar>
MatrixX<Scalar> sample_bernoulli(const MatrixX<Scalar>& probs, Rng& rng) {
  MatrixX<Scalar> out(probs.rows(), probs.cols());
  for (Index k = 0; k < probs.size(); ++k)
    out.data()[k] = static_cast<Scalar>(rng.uniform()) < probs.data()[k] ? Scalar(1) : Scalar(0);
  return out;
}

template <typename Scalar>
Scalar log_sum_exp(const std::vector<Scalar>& xs) {
  Scalar m = -std::numeric_limits<Scalar>::infinity();
  for (Scalar x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  Scalar s(0);
  for (Scalar x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Binary configuration `bits` of width n as a vector.
template <typename Scalar>
VectorX<Scalar> bit_vector(std::uint64_t bits, Index n) {
  VectorX<Scalar> v(n);
  for (Index i = 0; i < n; ++i) v(i) = static_cast<Scalar>((bits >> i) & 1U);
  return v;
}

}  // namespace detail

/// E(v, h) = -a.v - b.h - v' W h
template <typename Scalar>
Scalar energy(const VectorX<Scalar>& v, const VectorX<Scalar>& h, const RbmParams<Scalar>& p) {
  detail::require(v.size() == p.n_visible() && h.size() == p.n_hidden(), "energy: dimension mismatch");
  return -p.visible_bias.dot(v) - p.hidden_bias.dot(h) - v.dot(p.weights * h);
}

/// Row-wise p(h_j = 1 | v) for a batch (rows are samples).
template <typename Scalar>
MatrixX<Scalar> hidden_cond_prob(const MatrixX<Scalar>& v, const RbmParams<Scalar>& p) {
  detail::require(v.cols() == p.n_visible(), "hidden_cond_prob: visible width mismatch");
  MatrixX<Scalar> pre = v * p.weights;
  pre.rowwise() += p.hidden_bias.transpose();
  return detail::logistic(pre);
}

template <typename Scalar>
VectorX<Scalar> hidden_cond_prob(const VectorX<Scalar>& v, const RbmParams<Scalar>& p) {
  detail::require(v.size() == p.n_visible(), "hidden_cond_prob: visible width mismatch");
  return detail::logistic(VectorX<Scalar>(p.weights.transpose() * v + p.hidden_bias));
}

/// Row-wise p(v_i = 1 | h).
template <typename Scalar>
MatrixX<Scalar> visible_cond_prob(const MatrixX<Scalar>& h, const RbmParams<Scalar>& p) {
  detail::require(h.cols() == p.n_hidden(), "visible_cond_prob: hidden width mismatch");
  MatrixX<Scalar> pre = h * p.weights.transpose();
  pre.rowwise() += p.visible_bias.transpose();
  return detail::logistic(pre);
}

template <typename Scalar>
VectorX<Scalar> visible_cond_prob(const VectorX<Scalar>& h, const RbmParams<Scalar>& p) {
  detail::require(h.size() == p.n_hidden(), "visible_cond_prob: hidden width mismatch");
  return detail::logistic(VectorX<Scalar>(p.weights * h + p.visible_bias));
}

/// Mean-field hidden activations; the map passed from one layer to the next.
template <typename Scalar>
MatrixX<Scalar> transform(const MatrixX<Scalar>& v, const RbmParams<Scalar>& p) {
  return hidden_cond_prob(v, p);
}

template <typename Scalar>
VectorX<Scalar> transform(const VectorX<Scalar>& v, const RbmParams<Scalar>& p) {
  return hidden_cond_prob(v, p);
}

template <typename Scalar>
struct GibbsState {
  VectorX<Scalar> visible_mean;
  VectorX<Scalar> hidden_mean;
  VectorX<Scalar> visible_sample;
  VectorX<Scalar> hidden_sample;
};

/// k full steps of block Gibbs sampling starting from v0:
/// h ~ p(h|v0), then k times { v ~ p(v|h), h ~ p(h|v) }.
template <typename Scalar>
GibbsState<Scalar> gibbs_chain(const VectorX<Scalar>& v0, const RbmParams<Scalar>& p, int k, Rng& rng) {
  detail::require(k >= 1, "gibbs_chain: k must be positive");
  GibbsState<Scalar> s;
  s.visible_sample = v0;
  s.hidden_mean = hidden_cond_prob(v0, p);
  s.hidden_sample = detail::sample_bernoulli<Scalar>(s.hidden_mean, rng);
  for (int step = 0; step < k; ++step) {
    s.visible_mean = visible_cond_prob(s.hidden_sample, p);
    s.visible_sample = detail::sample_bernoulli<Scalar>(s.visible_mean, rng);
    s.hidden_mean = hidden_cond_prob(s.visible_sample, p);
    s.hidden_sample = detail::sample_bernoulli<Scalar>(s.hidden_mean, rng);
  }
  return s;
}

/// CD-k estimate of the log-likelihood gradient for one batch, averaged over
/// rows. The data phase uses real-valued visibles and hidden means; the
/// reconstruction keeps visible means and samples hidden states on every step
/// except the last.
template <typename Scalar>
RbmParams<Scalar> cd_direction(const MatrixX<Scalar>& batch, const RbmParams<Scalar>& p, int k, Rng& rng) {
  detail::require(batch.rows() > 0, "cd_update: empty batch");
  detail::require(batch.cols() == p.n_visible(), "cd_update: batch width mismatch");
  detail::require(k >= 1, "cd_update: k must be positive");

  const MatrixX<Scalar> h_data = hidden_cond_prob(batch, p);
  MatrixX<Scalar> h_state = detail::sample_bernoulli<Scalar>(h_data, rng);
  MatrixX<Scalar> v_model;
  MatrixX<Scalar> h_model;
  for (int step = 1; step <= k; ++step) {
    v_model = visible_cond_prob(h_state, p);
    h_model = hidden_cond_prob(v_model, p);
    if (step < k) h_state = detail::sample_bernoulli<Scalar>(h_model, rng);
  }

  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(batch.rows());
  RbmParams<Scalar> g;
  g.weights = (batch.transpose() * h_data - v_model.transpose() * h_model) * inv_n;
  g.visible_bias = (batch - v_model).colwise().sum().transpose() * inv_n;
  g.hidden_bias = (h_data - h_model).colwise().sum().transpose() * inv_n;
  return g;
}

/// One plain SGD step along the CD-k direction.
template <typename Scalar>
RbmParams<Scalar> cd_update(const MatrixX<Scalar>& batch, const RbmParams<Scalar>& p, const TrainConfig& config,
                            Rng& rng) {
  config.validate();
  const RbmParams<Scalar> g = cd_direction(batch, p, config.cd_k, rng);
  const auto lr = static_cast<Scalar>(config.learning_rate);
  return {p.weights + lr * g.weights, p.visible_bias + lr * g.visible_bias, p.hidden_bias + lr * g.hidden_bias};
}

/// Uniform(-0.01, 0.01) weights, zero biases.
template <typename Scalar>
RbmParams<Scalar> init_rbm(Index n_visible, Index n_hidden, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "rbm.init"));
  auto p = RbmParams<Scalar>::zeros(n_visible, n_hidden);
  for (Index k = 0; k < p.weights.size(); ++k) p.weights.data()[k] = static_cast<Scalar>(rng.uniform(-0.01, 0.01));
  return p;
}

/// Trains one RBM with mini-batch CD-k. Batches are reshuffled every epoch;
/// a short final batch is used as-is.
template <typename Scalar>
RbmParams<Scalar> train_rbm(const MatrixX<Scalar>& data, Index n_hidden, const TrainConfig& config) {
  config.validate();
  detail::require(n_hidden >= 1, "train_rbm: n_hidden must be at least 1");
  detail::require(data.rows() > 0 && data.cols() > 0, "train_rbm: empty data");
  detail::require(data.allFinite(), "train_rbm: data contains non-finite values");

  RbmParams<Scalar> p = init_rbm<Scalar>(data.cols(), n_hidden, config.seed);
  Rng shuffle_rng(derive_seed(config.seed, "rbm.shuffle"));
  Rng gibbs_rng(derive_seed(config.seed, "rbm.gibbs"));

  const Index n = data.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  MatrixX<Scalar> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Index{0});
    shuffle_rng.shuffle(order.begin(), order.end());
    for (Index start = 0; start < n; start += config.batch_size) {
      const Index size = std::min<Index>(config.batch_size, n - start);
      batch.resize(size, data.cols());
      for (Index r = 0; r < size; ++r) batch.row(r) = data.row(order[static_cast<std::size_t>(start + r)]);
      p = cd_update(batch, p, config, gibbs_rng);
    }
  }
  return p;
}

/// Largest n_visible + n_hidden accepted by the enumeration routines.
inline constexpr Index kMaxEnumerableUnits = 20;

/// log Z by enumerating every binary (v, h).
template <typename Scalar>
Scalar exact_log_partition(const RbmParams<Scalar>& p) {
  detail::require(p.n_visible() + p.n_hidden() <= kMaxEnumerableUnits,
                  "exact likelihood: n_visible + n_hidden exceeds the enumeration bound");
  const Index nv = p.n_visible();
  const Index nh = p.n_hidden();
  std::vector<Scalar> terms;
  terms.reserve(std::size_t{1} << (nv + nh));
  for (std::uint64_t vb = 0; vb < (std::uint64_t{1} << nv); ++vb) {
    const VectorX<Scalar> v = detail::bit_vector<Scalar>(vb, nv);
    for (std::uint64_t hb = 0; hb < (std::uint64_t{1} << nh); ++hb)
      terms.push_back(-energy(v, detail::bit_vector<Scalar>(hb, nh), p));
  }
  return detail::log_sum_exp(terms);
}

/// log of the unnormalised marginal sum_h exp(-E(v, h)).
template <typename Scalar>
Scalar log_unnormalized_marginal(const VectorX<Scalar>& v, const RbmParams<Scalar>& p) {
  const Index nh = p.n_hidden();
  std::vector<Scalar> terms;
  terms.reserve(std::size_t{1} << nh);
  for (std::uint64_t hb = 0; hb < (std::uint64_t{1} << nh); ++hb)
    terms.push_back(-energy(v, detail::bit_vector<Scalar>(hb, nh), p));
  return detail::log_sum_exp(terms);
}

/// Sum over rows of log P(v) with P(v, h) = exp(-E(v, h)) / Z.
template <typename Scalar>
Scalar exact_log_likelihood(const MatrixX<Scalar>& data, const RbmParams<Scalar>& p) {
  detail::require(data.cols() == p.n_visible(), "exact_log_likelihood: width mismatch");
  const Scalar log_z = exact_log_partition(p);
  Scalar total(0);
  for (Index r = 0; r < data.rows(); ++r) total += log_unnormalized_marginal<Scalar>(data.row(r).transpose(), p) - log_z;
  return total;
}

/// Gradient of the mean per-row log-likelihood:
/// E_data[v p(h|v)'] - E_model[v h'] (and the matching bias terms).
template <typename Scalar>
RbmParams<Scalar> exact_log_likelihood_grad(const MatrixX<Scalar>& data, const RbmParams<Scalar>& p) {
  detail::require(data.rows() > 0, "exact_log_likelihood_grad: empty data");
  detail::require(data.cols() == p.n_visible(), "exact_log_likelihood_grad: width mismatch");
  const Index nv = p.n_visible();
  const Index nh = p.n_hidden();
  const Scalar log_z = exact_log_partition(p);

  auto model = RbmParams<Scalar>::zeros(nv, nh);
  for (std::uint64_t vb = 0; vb < (std::uint64_t{1} << nv); ++vb) {
    const VectorX<Scalar> v = detail::bit_vector<Scalar>(vb, nv);
    for (std::uint64_t hb = 0; hb < (std::uint64_t{1} << nh); ++hb) {
      const VectorX<Scalar> h = detail::bit_vector<Scalar>(hb, nh);
      const Scalar prob = std::exp(-energy(v, h, p) - log_z);
      model.weights.noalias() += prob * v * h.transpose();
      model.visible_bias += prob * v;
      model.hidden_bias += prob * h;
    }
  }

  const MatrixX<Scalar> h_data = hidden_cond_prob(data, p);
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(data.rows());
  RbmParams<Scalar> g;
  g.weights = data.transpose() * h_data * inv_n - model.weights;
  g.visible_bias = data.colwise().sum().transpose() * inv_n - model.visible_bias;
  g.hidden_bias = h_data.colwise().sum().transpose() * inv_n - model.hidden_bias;
  return g;
}

/// Flattens (W, a, b) into one vector, for comparing update directions.
template <typename Scalar>
VectorX<Scalar> flatten(const RbmParams<Scalar>& p) {
  VectorX<Scalar> out(p.weights.size() + p.visible_bias.size() + p.hidden_bias.size());
  out << p.weights.reshaped(), p.visible_bias, p.hidden_bias;
  return out;
}

}  // namespace affdbn
