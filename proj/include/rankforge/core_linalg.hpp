#pragma once

#include <Eigen/Dense>
#include <utility>

#include "rankforge/errors.hpp"

namespace rankforge::linalg {

/// A root-n-consistent matrix estimate together with the estimated
/// asymptotic covariance of its column-major vectorization.
///
/// Convention: m_hat is p x H with p <= H; gamma_hat is (p*H) x (p*H),
/// symmetric positive semi-definite.
struct EstimatedMatrix {
  Eigen::MatrixXd m_hat;
  Eigen::MatrixXd gamma_hat;
  long n = 0;

  EstimatedMatrix(Eigen::MatrixXd m, Eigen::MatrixXd gamma, long n_obs);

  /// Skips the validation pass. For hot loops building replicate inputs
  /// whose shape is correct by construction.
  static EstimatedMatrix unchecked(Eigen::MatrixXd m, Eigen::MatrixXd gamma,
                                   long n_obs);

  long p() const { return m_hat.rows(); }
  long h() const { return m_hat.cols(); }

 private:
  EstimatedMatrix() = default;
};

/// Full SVD of a p x H matrix (p <= H) split at a candidate rank m.
/// u is p x p orthogonal, v is H x p with orthonormal columns, and
/// singular_values holds the p singular values in descending order.
struct SvdParts {
  Eigen::MatrixXd u;
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd v;
  int split = 0;

  /// Sum of squared singular values strictly after the split.
  double trailing_energy() const;
};

/// Orthogonal projectors onto the singular subspaces "discarded" by a
/// rank-m split: q1 (p x p, rank p-m) on the left, q2 (H x H, rank H-m)
/// on the right. Complements p1(), p2() satisfy p + q = I exactly.
struct ProjectorPair {
  Eigen::MatrixXd q1;
  Eigen::MatrixXd q2;
  int m = 0;

  Eigen::MatrixXd p1() const {
    return Eigen::MatrixXd::Identity(q1.rows(), q1.cols()) - q1;
  }
  Eigen::MatrixXd p2() const {
    return Eigen::MatrixXd::Identity(q2.rows(), q2.cols()) - q2;
  }
};

/// Column-major vectorization (stacks columns).
inline Eigen::VectorXd vec(const Eigen::MatrixXd& a) {
  return Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
}

/// Inverse of vec for a p x h target.
inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, long p, long h) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), p, h);
}

/// Full SVD with a deterministic sign convention: in each left singular
/// vector the entry of largest magnitude is nonnegative (ties broken by
/// lowest index); the matching right vector is flipped along with it.
SvdParts svd_split(const Eigen::MatrixXd& m_hat, int m);

/// Projectors onto the trailing singular subspaces of a split SVD.
/// Requires a spectral gap at the split: lambda_m - lambda_{m+1} must
/// exceed 1e-10 * lambda_1 whenever 1 <= m <= p-1.
ProjectorPair projectors(const SvdParts& parts);

/// Frobenius-nearest matrix of rank <= m (truncated SVD) and the squared
/// residual, i.e. the sum of squared trailing singular values.
std::pair<Eigen::MatrixXd, double> nearest_rank_frobenius(
    const Eigen::MatrixXd& m_hat, int m);

/// (q2 (x) q1) * gamma * (q2 (x) q1) without materializing the Kronecker
/// product when the vec dimension exceeds 400. Column-major vec.
Eigen::MatrixXd sandwich(const ProjectorPair& proj,
                         const Eigen::MatrixXd& gamma);

/// Eigendecomposition-based Moore-Penrose inverse of a symmetric matrix.
/// Eigenvalues with magnitude below rel_tol * max|eigenvalue| are zeroed.
/// Returns the inverse and the count of retained eigenvalues.
std::pair<Eigen::MatrixXd, int> pseudo_inverse(const Eigen::MatrixXd& a,
                                               double rel_tol = 1e-9);

/// Spectral-gap threshold used by projectors(), relative to lambda_1.
inline constexpr double kSpectralGapRelTol = 1e-10;

}  // namespace rankforge::linalg
