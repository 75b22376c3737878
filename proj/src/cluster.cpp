#include "affdbn/cluster.hpp"

#include "affdbn/random.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace affdbn {

namespace {

constexpr double kMinWeight = 1e-12;

void check_matrix(const Matrix& x, const char* who) {
  if (!x.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

double log_sum_exp2(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Returns the fitted responsibilities' log-normaliser per row.
Vector row_log_norm(const Matrix& log_joint) {
  Vector out(log_joint.rows());
  for (Index i = 0; i < log_joint.rows(); ++i) out(i) = log_sum_exp2(log_joint(i, 0), log_joint(i, 1));
  return out;
}

Index pick_second_centre(const Matrix& x, Index first, Rng& rng) {
  const Index n = x.rows();
  Vector d2 = (x.rowwise() - x.row(first)).rowwise().squaredNorm();
  const double total = d2.sum();
  if (!(total > 0.0)) {
    // All rows coincide: any other row will do.
    Index other = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - 1)));
    return other >= first ? other + 1 : other;
  }
  const double target = rng.uniform() * total;
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    acc += d2(i);
    if (target < acc && d2(i) > 0.0) return i;
  }
  // Rounding at the top of the range: last row with positive distance.
  for (Index i = n - 1; i >= 0; --i)
    if (d2(i) > 0.0) return i;
  return first;
}

}  // namespace

Matrix gmm_log_joint(const Matrix& x, const GmmModel& model) {
  if (x.cols() != model.dim()) throw std::invalid_argument("gmm: input width does not match the model");
  Matrix out(x.rows(), 2);
  for (int k = 0; k < 2; ++k) {
    const Eigen::RowVectorXd var = model.variances.row(k);
    const Eigen::RowVectorXd mu = model.means.row(k);
    const double log_norm =
        std::log(model.weights[k]) - 0.5 * (var.array() * (2.0 * std::numbers::pi)).log().sum();
    const Eigen::RowVectorXd inv_var = var.cwiseInverse();
    for (Index i = 0; i < x.rows(); ++i)
      out(i, k) = log_norm - 0.5 * ((x.row(i) - mu).array().square() * inv_var.array()).sum();
  }
  return out;
}

Matrix gmm_responsibilities(const Matrix& x, const GmmModel& model) {
  const Matrix lj = gmm_log_joint(x, model);
  const Vector norm = row_log_norm(lj);
  Matrix r(x.rows(), 2);
  for (Index i = 0; i < x.rows(); ++i) {
    r(i, 0) = std::exp(lj(i, 0) - norm(i));
    r(i, 1) = 1.0 - r(i, 0);
  }
  return r;
}

double gmm_mean_log_likelihood(const Matrix& x, const GmmModel& model) {
  return row_log_norm(gmm_log_joint(x, model)).mean();
}

GmmModel fit_gmm(const Matrix& x, const GmmOptions& options) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (n < 2) throw std::invalid_argument("fit_gmm: at least two rows are required");
  if (d < 1) throw std::invalid_argument("fit_gmm: data has no columns");
  if (options.max_iter < 1 || !(options.variance_floor > 0.0))
    throw std::invalid_argument("fit_gmm: max_iter and variance floor must be positive");
  check_matrix(x, "fit_gmm");

  Rng rng(derive_seed(options.seed, "gmm.init"));
  const Index first = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  const Index second = pick_second_centre(x, first, rng);

  GmmModel model;
  model.means.resize(2, d);
  model.means.row(0) = x.row(first);
  model.means.row(1) = x.row(second);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::RowVectorXd var =
      ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n)).max(options.variance_floor);
  model.variances.resize(2, d);
  model.variances.row(0) = var;
  model.variances.row(1) = var;

  Matrix lj = gmm_log_joint(x, model);
  Vector norm = row_log_norm(lj);
  double ll = norm.mean();
  model.log_likelihood_trace.push_back(ll);

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    // M-step from the current responsibilities.
    Matrix resp(n, 2);
    for (Index i = 0; i < n; ++i) {
      resp(i, 0) = std::exp(lj(i, 0) - norm(i));
      resp(i, 1) = std::exp(lj(i, 1) - norm(i));
    }
    for (int k = 0; k < 2; ++k) {
      const double nk = resp.col(k).sum();
      if (nk <= kMinWeight * static_cast<double>(n)) {
        model.weights[k] = kMinWeight;
        continue;  // dead component keeps its mean and variance
      }
      model.weights[k] = nk / static_cast<double>(n);
      const Eigen::RowVectorXd mu = (resp.col(k).transpose() * x) / nk;
      const Eigen::RowVectorXd second_moment =
          (resp.col(k).transpose() * (x.rowwise() - mu).array().square().matrix()) / nk;
      model.means.row(k) = mu;
      model.variances.row(k) = second_moment.array().max(options.variance_floor);
    }
    const double wsum = model.weights[0] + model.weights[1];
    model.weights[0] /= wsum;
    model.weights[1] = 1.0 - model.weights[0];

    lj = gmm_log_joint(x, model);
    norm = row_log_norm(lj);
    const double next = norm.mean();
    model.log_likelihood_trace.push_back(next);
    model.iterations = iter;
    const double gain = next - ll;
    ll = next;
    if (std::abs(gain) < options.tolerance) {
      model.converged = true;
      break;
    }
  }
  return model;
}

GmmModel orient_gmm(GmmModel model, const Matrix& train_x, std::span<const Label> train_labels) {
  if (static_cast<std::size_t>(train_x.rows()) != train_labels.size())
    throw std::invalid_argument("orient_gmm: label count does not match row count");
  const Matrix r = gmm_responsibilities(train_x, model);
  std::array<double, 2> members{0, 0};
  std::array<double, 2> deceptive{0, 0};
  for (Index i = 0; i < r.rows(); ++i) {
    const int k = r(i, 0) >= r(i, 1) ? 0 : 1;
    members[k] += 1;
    if (is_deceptive(train_labels[static_cast<std::size_t>(i)])) deceptive[k] += 1;
  }
  auto fraction = [&](int k) { return members[k] > 0 ? deceptive[k] / members[k] : 0.5; };
  model.deceptive_component = fraction(0) >= fraction(1) ? 0 : 1;
  return model;
}

Vector score_deceptive(const Matrix& x, const GmmModel& model) {
  if (!model.oriented()) throw std::invalid_argument("score_deceptive: model is not oriented");
  return gmm_responsibilities(x, model).col(model.deceptive_component);
}

PcaModel fit_pca(const Matrix& x, Index d) {
  if (d < 1 || d > std::min(x.rows(), x.cols()))
    throw std::invalid_argument("fit_pca: dimension " + std::to_string(d) + " exceeds min(rows, cols)");
  check_matrix(x, "fit_pca");
  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  const Matrix centred = x.rowwise() - model.mean.transpose();
  Eigen::BDCSVD<Matrix> svd(centred, Eigen::ComputeThinV);
  model.components = svd.matrixV().leftCols(d).transpose();
  for (Index k = 0; k < d; ++k) {
    Index arg = 0;
    model.components.row(k).cwiseAbs().maxCoeff(&arg);
    if (model.components(k, arg) < 0.0) model.components.row(k) *= -1.0;
  }
  return model;
}

Matrix project(const Matrix& x, const PcaModel& model) {
  if (x.cols() != model.input_width()) throw std::invalid_argument("project: input width does not match the model");
  return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

double auc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the number of (deceptive, truthful) pairs ranked correctly, with
  // ties contributing one; kept integral so the result is exact.
  std::uint64_t twice_wins = 0;
  std::uint64_t positives = 0;
  std::uint64_t negatives_below = 0;
  for (std::size_t g = 0; g < order.size();) {
    std::size_t end = g;
    std::uint64_t pos = 0, neg = 0;
    while (end < order.size() && scores[order[end]] == scores[order[g]]) {
      is_deceptive(labels[order[end]]) ? ++pos : ++neg;
      ++end;
    }
    twice_wins += pos * (2 * negatives_below + neg);
    positives += pos;
    negatives_below += neg;
    g = end;
  }
  if (positives == 0 || negatives_below == 0) throw std::invalid_argument("auc: both classes must be present");
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives_below));
}

AccuracyPrecision accuracy_precision(std::span<const double> scores, std::span<const Label> labels,
                                     double threshold) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("accuracy_precision: scores and labels differ in length");
  if (scores.empty()) throw std::invalid_argument("accuracy_precision: no samples");
  std::size_t correct = 0, tp = 0, fp = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = is_deceptive(labels[i]);
    correct += predicted == actual;
    tp += predicted && actual;
    fp += predicted && !actual;
  }
  AccuracyPrecision out;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
  if (tp + fp > 0) out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  return out;
}

McNemarResult mcnemar(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b) {
  if (correct_a.size() != correct_b.size()) throw std::invalid_argument("mcnemar: vectors differ in length");
  McNemarResult r;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    r.b += correct_a[i] && !correct_b[i];
    r.c += !correct_a[i] && correct_b[i];
  }
  if (r.b + r.c == 0) throw std::invalid_argument("mcnemar: no discordant pairs, test undefined");
  const double diff = std::abs(static_cast<double>(r.b - r.c)) - 1.0;
  r.chi2 = diff * diff / static_cast<double>(r.b + r.c);
  r.p_value = chi_squared_sf(r.chi2, 1.0);
  return r;
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || !std::isfinite(x)) {
    if (x == std::numeric_limits<double>::infinity() && a > 0.0) return 0.0;
    throw std::invalid_argument("regularized_gamma_q: requires a > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  constexpr double eps = 1e-16;
  constexpr int max_terms = 10000;

  if (x < a + 1.0) {
    // P(a, x) = x^a e^-x / Gamma(a + 1) * sum x^n / ((a+1)...(a+n))
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < max_terms; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * eps) break;
    }
    return std::max(0.0, 1.0 - sum * std::exp(log_prefix));
  }

  // Modified Lentz evaluation of the continued fraction for Q(a, x).
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < max_terms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::exp(log_prefix) * h;
}

double chi_squared_sf(double x, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("chi_squared_sf: degrees of freedom must be positive");
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * dof, 0.5 * x);
}

MetricsReport evaluate_scores(std::span<const double> scores, std::span<const Label> labels, double threshold) {
  MetricsReport report;
  const auto ap = accuracy_precision(scores, labels, threshold);
  report.accuracy = ap.accuracy;
  report.precision = ap.precision;
  report.scores.assign(scores.begin(), scores.end());
  report.correct.resize(scores.size());
  bool any_pos = false, any_neg = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    report.correct[i] = (scores[i] >= threshold) == is_deceptive(labels[i]);
    (is_deceptive(labels[i]) ? any_pos : any_neg) = true;
  }
  if (any_pos && any_neg) report.auc = auc(scores, labels);
  return report;
}

MetricsReport human_baseline(std::span<const Label> labels) {
  if (labels.empty()) throw std::invalid_argument("human_baseline: no labels");
  const std::vector<double> scores(labels.size(), 1.0);
  return evaluate_scores(scores, labels);
}

}  // namespace affdbn
