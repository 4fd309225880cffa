#pragma once

#include <Eigen/Dense>
#include <optional>

#include "rankforge/core_linalg.hpp"
#include "rankforge/min_discrepancy.hpp"

namespace rankforge::stats {

enum class StatKind { Lambda1, Lambda2, Lambda3 };

const char* to_string(StatKind kind);

/// A computed rank-test statistic: the value, the constrained (rank-<=m)
/// matrix achieving the underlying minimum, and statistic-specific
/// auxiliaries (estimated weights for Lambda1, chi-squared df for
/// Lambda2/Lambda3).
struct StatValue {
  StatKind kind;
  double value = 0.0;
  int m = 0;
  Eigen::MatrixXd constrained_matrix;
  std::optional<Eigen::VectorXd> weights;  // Lambda1 only
  std::optional<int> df;                   // Lambda2 / Lambda3
};

/// n * sum of squared trailing singular values. When with_weights is set,
/// also estimates the weighted chi-squared weights as the eigenvalues of
/// the projector-sandwiched covariance.
StatValue lambda1(const linalg::EstimatedMatrix& est, int m,
                  bool with_weights = true);

/// Wald-type statistic: the trailing-block quadratic form normalized by
/// the pseudo-inverted sandwiched covariance.
StatValue lambda2(const linalg::EstimatedMatrix& est, int m);

/// Minimum discrepancy statistic: n times the Gamma^{-1}-weighted squared
/// distance to the fixed-rank manifold. Requires a full-rank gamma_hat
/// (condition number at most 1e12).
StatValue lambda3(const linalg::EstimatedMatrix& est, int m,
                  const mindisc::OptimizerConfig& opt = {});

// Low-level value computations on raw matrices, used in bootstrap loops
// where the surrounding types are rebuilt per replicate.

/// n * trailing energy of m_hat after a rank-m split.
double lambda1_value(const Eigen::MatrixXd& m_hat, int m, long n);

/// Full Lambda2 pipeline on raw inputs (projectors of m_hat, sandwich of
/// gamma, pseudo-inverse, quadratic form).
double lambda2_value(const Eigen::MatrixXd& m_hat,
                     const Eigen::MatrixXd& gamma, int m, long n);

/// Full Lambda3 pipeline on raw inputs. gamma must be full rank.
double lambda3_value(const Eigen::MatrixXd& m_hat,
                     const Eigen::MatrixXd& gamma, int m, long n,
                     const mindisc::OptimizerConfig& opt = {});

/// Symmetric inverse square root of a full-rank covariance; throws
/// SingularGamma when the condition number exceeds 1e12.
Eigen::MatrixXd gamma_inverse_sqrt(const Eigen::MatrixXd& gamma);

/// Condition-number ceiling operationalizing the full-rank assumption.
inline constexpr double kGammaConditionLimit = 1e12;

}  // namespace rankforge::stats
