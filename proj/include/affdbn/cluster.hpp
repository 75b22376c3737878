#pragma once

#include "affdbn/common.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace affdbn {

// ---------------------------------------------------------------------------
// Two-component diagonal Gaussian mixture

struct GmmOptions {
  std::uint64_t seed = 1;
  int max_iter = 100;
  double tolerance = 1e-6;       // on the mean per-row log-likelihood
  double variance_floor = 1e-6;  // per dimension
};

struct GmmModel {
  std::array<double, 2> weights{0.5, 0.5};
  Matrix means;      // 2 x D
  Matrix variances;  // 2 x D
  int deceptive_component = -1;  // -1 until oriented

  // Fit diagnostics: mean log-likelihood after initialisation and after
  // every EM iteration.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;

  Index dim() const { return means.cols(); }
  bool oriented() const { return deceptive_component == 0 || deceptive_component == 1; }
};

/// k-means++ style seeding (two centres), per-dimension data variance,
/// equal weights; then EM until max_iter or improvement < tolerance.
GmmModel fit_gmm(const Matrix& x, const GmmOptions& options = {});

/// Per-row log of w_k N(x | mu_k, diag var_k), N x 2.
Matrix gmm_log_joint(const Matrix& x, const GmmModel& model);

/// Posterior component probabilities, N x 2; rows sum to 1.
Matrix gmm_responsibilities(const Matrix& x, const GmmModel& model);

/// Mean per-row log-likelihood.
double gmm_mean_log_likelihood(const Matrix& x, const GmmModel& model);

/// Maps components to classes from the training labels: rows are hard
/// assigned, and the component with the larger deceptive fraction becomes
/// the deceptive one (component 0 on ties; an empty component counts as
/// 0.5). Labels never influence the fitted parameters.
GmmModel orient_gmm(GmmModel model, const Matrix& train_x, std::span<const Label> train_labels);

/// Posterior probability of the deceptive component per row.
Vector score_deceptive(const Matrix& x, const GmmModel& model);

// ---------------------------------------------------------------------------
// PCA baseline

struct PcaModel {
  Vector mean;        // D
  Matrix components;  // d x D, orthonormal rows

  Index dim() const { return components.rows(); }
  Index input_width() const { return components.cols(); }
};

/// Top-d principal directions via SVD of the centred data. Each component is
/// signed so its largest-magnitude entry is positive.
PcaModel fit_pca(const Matrix& x, Index d);

Matrix project(const Matrix& x, const PcaModel& model);

// ---------------------------------------------------------------------------
// Metrics

/// P(score of a random deceptive row > score of a random truthful row),
/// ties counted 1/2. Requires both classes.
double auc(std::span<const double> scores, std::span<const Label> labels);

struct AccuracyPrecision {
  double accuracy = 0.0;
  std::optional<double> precision;  // absent when nothing is predicted deceptive
};

/// Predicts deceptive when score >= threshold.
AccuracyPrecision accuracy_precision(std::span<const double> scores, std::span<const Label> labels,
                                     double threshold = 0.5);

struct McNemarResult {
  long b = 0;  // A correct, B wrong
  long c = 0;  // A wrong, B correct
  double chi2 = 0.0;
  double p_value = 1.0;
};

/// Continuity-corrected McNemar test, chi2 = (|b - c| - 1)^2 / (b + c), one
/// degree of freedom. Throws when b + c == 0.
McNemarResult mcnemar(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b);

/// Regularised upper incomplete gamma Q(a, x): series for x < a + 1,
/// Lentz continued fraction otherwise; relative accuracy ~1e-14.
double regularized_gamma_q(double a, double x);

/// Survival function of the chi-squared distribution, Q(dof/2, x/2).
double chi_squared_sf(double x, double dof);

struct MetricsReport {
  std::optional<double> auc;  // absent when the labels hold one class only
  double accuracy = 0.0;
  std::optional<double> precision;
  std::vector<double> scores;
  std::vector<bool> correct;
};

MetricsReport evaluate_scores(std::span<const double> scores, std::span<const Label> labels,
                              double threshold = 0.5);

/// Constant "always deceptive" predictor.
MetricsReport human_baseline(std::span<const Label> labels);

}  // namespace affdbn
