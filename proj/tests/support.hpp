#pragma once

// Shared helpers for the unit and acceptance tests.

#include "affdbn/harness.hpp"
#include "affdbn/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace testsupport {

using affdbn::Index;
using affdbn::Matrix;
using affdbn::Vector;

inline Matrix random_matrix(Index rows, Index cols, affdbn::Rng& rng, double lo = 0.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(lo, hi);
  return m;
}

inline Matrix random_normal(Index rows, Index cols, affdbn::Rng& rng) {
  Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = rng.normal();
  return m;
}

inline Matrix random_binary(Index rows, Index cols, affdbn::Rng& rng) {
  Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  return m;
}

// Haar-ish rotation from the QR of a Gaussian matrix, forced to det +1.
inline Matrix random_rotation(Index d, affdbn::Rng& rng) {
  const Matrix g = random_normal(d, d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < d; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

inline double cosine(const Vector& a, const Vector& b) { return a.dot(b) / (a.norm() * b.norm()); }

inline std::vector<affdbn::Label> random_labels(std::size_t n, affdbn::Rng& rng) {
  std::vector<affdbn::Label> out(n);
  for (auto& l : out) l = rng.uniform() < 0.5 ? affdbn::Label::deceptive : affdbn::Label::truthful;
  return out;
}

// Pair-counting AUC: P(score_d > score_t) + P(tie) / 2 over all pairs.
inline double brute_force_auc(const std::vector<double>& scores, const std::vector<affdbn::Label>& labels) {
  long wins2 = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != affdbn::Label::deceptive) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != affdbn::Label::truthful) continue;
      ++pairs;
      wins2 += scores[i] > scores[j] ? 2 : scores[i] == scores[j] ? 1 : 0;
    }
  }
  return static_cast<double>(wins2) / static_cast<double>(2 * pairs);
}

// Two-class diagonal Gaussian blobs.
inline Matrix two_blobs(Index per_blob, const Vector& a, const Vector& b, double sd, affdbn::Rng& rng) {
  Matrix x(2 * per_blob, a.size());
  for (Index i = 0; i < 2 * per_blob; ++i)
    for (Index j = 0; j < a.size(); ++j) x(i, j) = (i < per_blob ? a(j) : b(j)) + sd * rng.normal();
  return x;
}

inline std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = i;
  return r;
}

}  // namespace testsupport
