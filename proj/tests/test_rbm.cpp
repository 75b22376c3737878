#include "affdbn/rbm.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace affdbn;
using testsupport::random_binary;
using testsupport::random_matrix;

namespace {

RbmParams<double> random_params(Index nv, Index nh, Rng& rng, double scale = 1.0) {
  RbmParams<double> p;
  p.weights = testsupport::random_normal(nv, nh, rng) * scale;
  p.visible_bias = testsupport::random_normal(nv, 1, rng).col(0) * scale;
  p.hidden_bias = testsupport::random_normal(nh, 1, rng).col(0) * scale;
  return p;
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Second enumeration through the free energy: hidden units summed out
// analytically, then only visible configurations enumerated.
double free_energy_log_prob(const Vector& v, const RbmParams<double>& p) {
  auto neg_free = [&](const Vector& x) {
    double f = p.visible_bias.dot(x);
    const Vector pre = p.weights.transpose() * x + p.hidden_bias;
    for (Index j = 0; j < pre.size(); ++j) f += softplus(pre(j));
    return f;
  };
  const Index nv = p.n_visible();
  double m = -1e300;
  std::vector<double> terms;
  for (std::uint64_t b = 0; b < (1u << nv); ++b) {
    Vector x(nv);
    for (Index i = 0; i < nv; ++i) x(i) = (b >> i) & 1u;
    terms.push_back(neg_free(x));
    m = std::max(m, terms.back());
  }
  double s = 0;
  for (double t : terms) s += std::exp(t - m);
  return neg_free(v) - (m + std::log(s));
}

Vector bits(std::uint64_t b, Index n) {
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = (b >> i) & 1u;
  return x;
}

}  // namespace

TEST_CASE("energy examples") {
  Rng rng(1);
  const auto p = random_params(3, 2, rng);
  CHECK(energy<double>(Vector::Zero(3), Vector::Zero(2), p) == 0.0);

  RbmParams<double> q;
  q.weights = Matrix::Constant(1, 1, 2.0);
  q.visible_bias = Vector::Constant(1, 0.5);
  q.hidden_bias = Vector::Constant(1, -0.25);
  CHECK(energy<double>(Vector::Ones(1), Vector::Ones(1), q) == doctest::Approx(-2.25));
}

TEST_CASE("energy is linear in the parameters") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto p = random_params(4, 3, rng);
    const double c = rng.uniform(-3, 3);
    RbmParams<double> cp{p.weights * c, p.visible_bias * c, p.hidden_bias * c};
    const Vector v = random_binary(4, 1, rng).col(0);
    const Vector h = random_binary(3, 1, rng).col(0);
    CHECK(energy(v, h, cp) == doctest::Approx(c * energy(v, h, p)).epsilon(1e-12));
  }
}

TEST_CASE("conditional probabilities") {
  const auto z = RbmParams<double>::zeros(3, 4);
  Rng rng(3);
  const Vector v = random_matrix(3, 1, rng).col(0);
  CHECK(hidden_cond_prob(v, z).isConstant(0.5));
  CHECK(visible_cond_prob(Vector(Vector::Ones(4)), z).isConstant(0.5));
  CHECK(transform(v, z).isConstant(0.5));

  RbmParams<double> one;
  one.weights = Matrix::Constant(1, 1, 10.0);
  one.visible_bias = Vector::Zero(1);
  one.hidden_bias = Vector::Zero(1);
  CHECK(std::abs(hidden_cond_prob(Vector(Vector::Ones(1)), one)(0) - 0.999955) < 1e-6);
  CHECK(std::abs(transform(Vector(Vector::Ones(1)), one)(0) - 1.0 / (1.0 + std::exp(-10.0))) < 1e-15);

  RbmParams<double> two;
  two.weights = Matrix(1, 2);
  two.weights << 3.0, -3.0;
  two.visible_bias = Vector::Zero(1);
  two.hidden_bias = Vector::Zero(2);
  Vector h(2);
  h << 1.0, 0.0;
  CHECK(std::abs(visible_cond_prob(h, two)(0) - 1.0 / (1.0 + std::exp(-3.0))) < 1e-9);

  // Swapping the roles of the layers turns one conditional into the other.
  const auto p = random_params(5, 3, rng);
  const RbmParams<double> swapped{p.weights.transpose(), p.hidden_bias, p.visible_bias};
  const Vector x = random_matrix(5, 1, rng).col(0);
  CHECK((hidden_cond_prob(x, p) - visible_cond_prob(x, swapped)).cwiseAbs().maxCoeff() < 1e-15);

  // Batch and vector forms agree row by row.
  const Matrix batch = random_matrix(6, 5, rng);
  const Matrix hb = hidden_cond_prob(batch, p);
  for (Index r = 0; r < 6; ++r)
    CHECK((hb.row(r).transpose() - hidden_cond_prob(Vector(batch.row(r).transpose()), p)).norm() < 1e-15);

  CHECK_THROWS_AS(hidden_cond_prob(Vector(Vector::Ones(4)), p), std::invalid_argument);
}

TEST_CASE("gibbs chain") {
  const auto z = RbmParams<double>::zeros(4, 3);
  Rng rng(4);
  Vector v0(4);
  v0 << 1, 0, 1, 1;
  const auto s = gibbs_chain(v0, z, 1, rng);
  CHECK(s.visible_mean.isConstant(0.5));

  Rng prng(5);
  const auto p = random_params(4, 3, prng);
  Rng r1(77), r2(77);
  const auto a = gibbs_chain(v0, p, 7, r1);
  const auto b = gibbs_chain(v0, p, 7, r2);
  CHECK(a.visible_sample == b.visible_sample);
  CHECK(a.hidden_sample == b.hidden_sample);
  CHECK(a.visible_mean == b.visible_mean);
  CHECK_THROWS_AS(gibbs_chain(v0, p, 0, r1), std::invalid_argument);
}

TEST_CASE("Gibbs sampling converges to the exact marginal") {
  Rng prng(6);
  const auto p = random_params(3, 2, prng, 0.8);
  const double log_z = exact_log_partition(p);
  Rng rng(60);
  std::vector<double> counts(8, 0.0);
  Vector v = Vector::Zero(3);
  const int burn = 1000, steps = 200000;
  for (int t = 0; t < burn + steps; ++t) {
    v = gibbs_chain(v, p, 1, rng).visible_sample;
    if (t >= burn) counts[static_cast<std::size_t>(v(0) + 2 * v(1) + 4 * v(2))] += 1.0;
  }
  for (std::uint64_t b = 0; b < 8; ++b) {
    const double exact = std::exp(log_unnormalized_marginal<double>(bits(b, 3), p) - log_z);
    CHECK(std::abs(counts[b] / steps - exact) < 0.01);
  }

  // Hidden samples given a fixed visible vector follow hidden_cond_prob.
  const Vector x = bits(5, 3);
  const Vector ph = hidden_cond_prob(x, p);
  Vector freq = Vector::Zero(2);
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) freq += detail::sample_bernoulli<double>(ph, rng);
  CHECK((freq / draws - ph).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("exact likelihood") {
  const auto z = RbmParams<double>::zeros(5, 3);
  Rng rng(7);
  const Matrix rows = random_binary(4, 5, rng);
  CHECK(exact_log_likelihood(rows, z) == doctest::Approx(-4 * 5 * std::log(2.0)));

  for (int t = 0; t < 10; ++t) {
    const auto p = random_params(4, 3, rng);
    const double log_z = exact_log_partition(p);
    double total = 0;
    for (std::uint64_t vb = 0; vb < 16; ++vb)
      for (std::uint64_t hb = 0; hb < 8; ++hb) total += std::exp(-energy<double>(bits(vb, 4), bits(hb, 3), p) - log_z);
    CHECK(std::abs(total - 1.0) < 1e-12);

    for (std::uint64_t vb = 0; vb < 16; ++vb) {
      Matrix row = bits(vb, 4).transpose();
      CHECK(std::abs(exact_log_likelihood(row, p) - free_energy_log_prob(bits(vb, 4), p)) < 1e-12);
    }
  }
  CHECK_THROWS_AS(exact_log_partition(RbmParams<double>::zeros(12, 9)), std::invalid_argument);
}

TEST_CASE("exact gradient matches finite differences") {
  Rng rng(8);
  const auto p = random_params(3, 2, rng, 0.5);
  const Matrix data = random_matrix(5, 3, rng);
  const auto g = exact_log_likelihood_grad(data, p);
  const Vector flat = flatten(g);
  const Vector theta = flatten(p);
  auto unflatten = [&](const Vector& t) {
    RbmParams<double> q = p;
    Index k = 0;
    for (Index i = 0; i < q.weights.size(); ++i) q.weights.data()[i] = t(k++);
    for (Index i = 0; i < q.visible_bias.size(); ++i) q.visible_bias(i) = t(k++);
    for (Index i = 0; i < q.hidden_bias.size(); ++i) q.hidden_bias(i) = t(k++);
    return q;
  };
  const double h = 1e-6;
  for (Index k = 0; k < theta.size(); ++k) {
    Vector up = theta, down = theta;
    up(k) += h;
    down(k) -= h;
    const double fd = (exact_log_likelihood(data, unflatten(up)) - exact_log_likelihood(data, unflatten(down))) /
                      (2 * h * static_cast<double>(data.rows()));
    CHECK(std::abs(fd - flat(k)) < 1e-6);
  }
}

TEST_CASE("CD update") {
  // At W = 0 and data mean 0.5 the two phases cancel in expectation.
  const auto z = RbmParams<double>::zeros(4, 3);
  Matrix batch(2, 4);
  batch << 1, 0, 1, 0, 0, 1, 0, 1;
  Vector mean = Vector::Zero(flatten(z).size());
  const int seeds = 2000;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    mean += flatten(cd_direction(batch, z, 10, rng));
  }
  CHECK((mean / seeds).cwiseAbs().maxCoeff() < 0.02);

  Rng prng(9);
  const auto p = random_params(4, 3, prng, 0.3);
  TrainConfig cfg;
  Rng r1(5), r2(5);
  const auto a = cd_update(batch, p, cfg, r1);
  const auto b = cd_update(batch, p, cfg, r2);
  CHECK(a == b);
  CHECK_FALSE(a == p);

  CHECK_THROWS_AS(cd_update<double>(Matrix(0, 4), p, cfg, r1), std::invalid_argument);
  CHECK_THROWS_AS(cd_update<double>(Matrix::Zero(2, 3), p, cfg, r1), std::invalid_argument);
}

TEST_CASE("training") {
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 8;
  const Matrix zeros = Matrix::Zero(40, 5);
  const auto p = train_rbm(zeros, 3, cfg);
  CHECK(p.visible_bias.maxCoeff() < -2.0);
  CHECK(visible_cond_prob<double>(hidden_cond_prob<double>(zeros, p), p).maxCoeff() < 0.1);

  Rng rng(10);
  const Matrix data = random_matrix(37, 6, rng);
  cfg.epochs = 5;
  CHECK(train_rbm(data, 4, cfg) == train_rbm(data, 4, cfg));
  CHECK_FALSE(train_rbm(data, 4, cfg) == train_rbm(data, 4, cfg.with_seed(1)));

  TrainConfig bad = cfg;
  bad.cd_k = 0;
  CHECK_THROWS_AS(train_rbm(data, 4, bad), std::invalid_argument);
  bad = cfg;
  bad.learning_rate = -1;
  CHECK_THROWS_AS(train_rbm(data, 4, bad), std::invalid_argument);
  Matrix nan = data;
  nan(3, 2) = std::nan("");
  CHECK_THROWS_AS(train_rbm(nan, 4, cfg), std::invalid_argument);
}

TEST_CASE("float and double RBMs agree") {
  Rng rng(11);
  const auto p = random_params(5, 3, rng, 0.5);
  const Matrix x = random_matrix(4, 5, rng);
  const auto pf = p.cast<float>();
  const Eigen::MatrixXf hf = hidden_cond_prob(Eigen::MatrixXf(x.cast<float>()), pf);
  CHECK((hf.cast<double>() - hidden_cond_prob(x, p)).cwiseAbs().maxCoeff() < 1e-6);
}
