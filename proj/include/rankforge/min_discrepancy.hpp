#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace rankforge::mindisc {

struct OptimizerConfig {
  int max_outer_iterations = 500;
  double objective_tolerance = 1e-10;  // relative decrease per round
  int restarts = 2;                    // random restarts beyond the SVD start
  std::uint64_t restart_seed = 1;
};

/// A point of the factored search space: a has orthonormal columns,
/// b is unconstrained, and a * b^T is the rank-<=m candidate.
struct FactoredPoint {
  Eigen::MatrixXd a;  // p x m, a^T a = I
  Eigen::MatrixXd b;  // H x m
  double objective = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  /// Objective after every inner least-squares round of the winning run;
  /// nonincreasing by construction.
  std::vector<double> objective_history;

  Eigen::MatrixXd matrix() const { return a * b.transpose(); }
};

/// Minimizes || G (vec(m_hat) - vec(A B^T)) ||^2 over rank-m factorizations
/// by alternating least squares: B is solved exactly for fixed A; A is the
/// polar factor of the unconstrained solve for fixed B. G is a matrix with
/// G^T G = Gamma^{-1} (e.g. the symmetric inverse square root).
///
/// The best of the truncated-SVD warm start and cfg.restarts random
/// orthonormal starts is returned (ties keep the lowest start index).
FactoredPoint solve(const Eigen::MatrixXd& m_hat,
                    const Eigen::MatrixXd& gamma_inv_factor, int m,
                    const OptimizerConfig& cfg = {});

}  // namespace rankforge::mindisc
