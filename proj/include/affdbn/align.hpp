#pragma once

#include "affdbn/common.hpp"
#include "affdbn/dbn.hpp"

#include <Eigen/SVD>

#include <stdexcept>
#include <vector>

namespace affdbn {

/// Rigid map x -> R (x - c_x) + c_a on row vectors.
template <typename Scalar>
struct AlignmentTransform {
  MatrixX<Scalar> rotation;
  VectorX<Scalar> centroid_x;
  VectorX<Scalar> centroid_a;

  Index dim() const { return rotation.rows(); }

  static AlignmentTransform identity(Index d) {
    return {MatrixX<Scalar>::Identity(d, d), VectorX<Scalar>::Zero(d), VectorX<Scalar>::Zero(d)};
  }

  friend bool operator==(const AlignmentTransform& x, const AlignmentTransform& y) {
    return x.rotation == y.rotation && x.centroid_x == y.centroid_x && x.centroid_a == y.centroid_a;
  }
};

/// Proper rotation R minimising ||R X_c' - A_c'||_F (rows of X and A are
/// paired points, X_c and A_c their centred copies).
///
/// H = X_c' A_c = U S V', R = V diag(1, ..., 1, sign(det(V U'))) U'.
/// A zero cross-covariance returns the identity rotation.
template <typename Scalar>
AlignmentTransform<Scalar> kabsch(const MatrixX<Scalar>& x, const MatrixX<Scalar>& a) {
  if (x.rows() != a.rows() || x.cols() != a.cols())
    throw std::invalid_argument("kabsch: point sets must have the same shape");
  if (x.rows() < 2) throw std::invalid_argument("kabsch: at least two points are required");
  if (x.cols() < 1) throw std::invalid_argument("kabsch: dimension must be positive");
  if (!x.allFinite() || !a.allFinite()) throw std::invalid_argument("kabsch: non-finite input");

  AlignmentTransform<Scalar> t;
  t.centroid_x = x.colwise().mean().transpose();
  t.centroid_a = a.colwise().mean().transpose();
  const MatrixX<Scalar> xc = x.rowwise() - t.centroid_x.transpose();
  const MatrixX<Scalar> ac = a.rowwise() - t.centroid_a.transpose();
  const MatrixX<Scalar> h = xc.transpose() * ac;

  const Index d = x.cols();
  if (h.isZero(Scalar(0))) {
    t.rotation = MatrixX<Scalar>::Identity(d, d);
    return t;
  }

  Eigen::JacobiSVD<MatrixX<Scalar>> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const MatrixX<Scalar>& u = svd.matrixU();
  const MatrixX<Scalar>& v = svd.matrixV();
  VectorX<Scalar> correction = VectorX<Scalar>::Ones(d);
  correction(d - 1) = (v * u.transpose()).determinant() < Scalar(0) ? Scalar(-1) : Scalar(1);
  t.rotation = v * correction.asDiagonal() * u.transpose();
  return t;
}

/// Applies the transform to every row: R (x - c_x) + c_a.
template <typename Scalar>
MatrixX<Scalar> align_apply(const MatrixX<Scalar>& x, const AlignmentTransform<Scalar>& t) {
  if (x.cols() != t.dim()) throw std::invalid_argument("align_apply: width mismatch");
  MatrixX<Scalar> out = (x.rowwise() - t.centroid_x.transpose()) * t.rotation.transpose();
  out.rowwise() += t.centroid_a.transpose();
  return out;
}

/// Two DBNs trained side by side: one on audio/visual input, one on affect
/// input, with the audio/visual activations rotated onto the affect
/// activations after every layer.
struct AlignedDbnModel {
  Architecture architecture;
  TrainConfig config;
  DbnModel av;
  DbnModel affect;
  std::vector<AlignmentTransform<double>> transforms;  // one per layer
};

enum class StreamSeeding {
  independent,  // the two streams draw from distinct sub-seeds
  shared,       // both streams use the same per-layer seed
};

/// Per-layer seeds of the two streams.
std::uint64_t aligned_av_seed(std::uint64_t seed, std::size_t layer, StreamSeeding seeding);
std::uint64_t aligned_affect_seed(std::uint64_t seed, std::size_t layer, StreamSeeding seeding);

/// Layer by layer: train the affect RBM, train the AV RBM, fit kabsch on
/// the two training-set activations, pass the aligned AV activations
/// (clamped to [0, 1]) and the affect activations to the next layer.
AlignedDbnModel train_affect_aligned(const Matrix& av_data, const Matrix& affect_data,
                                     const Architecture& architecture, const TrainConfig& config,
                                     StreamSeeding seeding = StreamSeeding::independent);

/// AV stream only; reuses the stored training centroids and rotations.
/// Output is the top-layer aligned representation (not clamped).
Matrix represent_aligned(const Matrix& av_data, const AlignedDbnModel& model);

}  // namespace affdbn
