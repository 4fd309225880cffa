#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rankforge/min_discrepancy.hpp"
#include "rankforge/rng.hpp"

namespace rankforge::lsce {

/// A constraint set with an A-weighted projection. The defining function
/// g and its Jacobian are optional: for fixed-rank constraints they depend
/// on the unknown limit and are unavailable.
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual long ambient_dimension() const = 0;
  virtual long codimension() const = 0;

  /// argmin over the manifold of (theta - t)^T a_weight (theta - t).
  virtual Eigen::VectorXd project(const Eigen::VectorXd& theta,
                                  const Eigen::MatrixXd& a_weight) const = 0;

  virtual bool has_constraint_oracle() const { return false; }
  virtual Eigen::VectorXd constraint(const Eigen::VectorXd& theta) const;
  virtual Eigen::MatrixXd constraint_jacobian(
      const Eigen::VectorXd& theta) const;
};

/// {-1, +1} in ambient dimension 1 (the set theta^2 = 1). project(0) = +1.
class UnitCircleManifold final : public Manifold {
 public:
  long ambient_dimension() const override { return 1; }
  long codimension() const override { return 1; }
  Eigen::VectorXd project(const Eigen::VectorXd& theta,
                          const Eigen::MatrixXd& a_weight) const override;
  bool has_constraint_oracle() const override { return true; }
  Eigen::VectorXd constraint(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd constraint_jacobian(
      const Eigen::VectorXd& theta) const override;
};

/// The unit sphere ||theta|| = 1 in a given ambient dimension. Projection
/// is implemented for isotropic weights (a = c I).
class SphereManifold final : public Manifold {
 public:
  explicit SphereManifold(long dim) : dim_(dim) {}
  long ambient_dimension() const override { return dim_; }
  long codimension() const override { return 1; }
  Eigen::VectorXd project(const Eigen::VectorXd& theta,
                          const Eigen::MatrixXd& a_weight) const override;
  bool has_constraint_oracle() const override { return true; }
  Eigen::VectorXd constraint(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd constraint_jacobian(
      const Eigen::VectorXd& theta) const override;

 private:
  long dim_;
};

/// A single point {mu}; projection is constant. The associated statistic
/// is the score statistic of the simple hypothesis theta = mu.
class PointManifold final : public Manifold {
 public:
  explicit PointManifold(Eigen::VectorXd mu) : mu_(std::move(mu)) {}
  long ambient_dimension() const override { return mu_.size(); }
  long codimension() const override { return mu_.size(); }
  Eigen::VectorXd project(const Eigen::VectorXd&,
                          const Eigen::MatrixXd&) const override {
    return mu_;
  }
  bool has_constraint_oracle() const override { return true; }
  Eigen::VectorXd constraint(const Eigen::VectorXd& theta) const override {
    return theta - mu_;
  }
  Eigen::MatrixXd constraint_jacobian(const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Identity(mu_.size(), mu_.size());
  }

 private:
  Eigen::VectorXd mu_;
};

/// vec'd p x H matrices of rank <= m. Isotropic weights use the truncated
/// SVD; general positive-definite weights go through the alternating
/// least-squares solver in the induced metric.
class FixedRankManifold final : public Manifold {
 public:
  FixedRankManifold(long p, long h, int m,
                    mindisc::OptimizerConfig opt = {},
                    bool force_iterative = false)
      : p_(p), h_(h), m_(m), opt_(opt), force_iterative_(force_iterative) {}

  long ambient_dimension() const override { return p_ * h_; }
  long codimension() const override { return (p_ - m_) * (h_ - m_); }
  Eigen::VectorXd project(const Eigen::VectorXd& theta,
                          const Eigen::MatrixXd& a_weight) const override;

 private:
  long p_, h_;
  int m_;
  mindisc::OptimizerConfig opt_;
  bool force_iterative_;
};

/// One bootstrap replicate's inputs: the centered draw W* and optional
/// replicate weight matrices (absent entries fall back to a_hat / b_hat).
struct CsReplicate {
  Eigen::VectorXd w_star;
  std::optional<Eigen::MatrixXd> a_star;
  std::optional<Eigen::MatrixXd> b_star;
};

struct CsBootstrapConfig {
  long replicates = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Draws W* (and optionally A*, B*) for one replicate from its own
  /// random stream.
  std::function<CsReplicate(RngStream&)> sampler;
};

struct ReplicateSummary {
  long count = 0;     // successful replicates
  long failures = 0;  // excluded replicates
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

struct CsBootstrapOutcome {
  double statistic = 0.0;
  std::vector<double> replicate_values;  // successful replicates, draw order
  double quantile = 0.0;
  double p_value = 0.0;
  bool reject = false;
  ReplicateSummary summary;
};

/// Projects theta_hat and evaluates the constrained statistic
/// n (theta_hat - theta_c)^T b (theta_hat - theta_c).
std::pair<Eigen::VectorXd, double> constrained_statistic(
    const Eigen::VectorXd& theta_hat, const Manifold& manifold,
    const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, long n);

/// The constrained bootstrap: perturbs the constrained estimator by
/// n^{-1/2} W*, re-projects, and compares the statistic to the
/// ceil(B(1-alpha)) order statistic of the replicate values.
CsBootstrapOutcome cs_bootstrap(const Eigen::VectorXd& theta_hat,
                                const Manifold& manifold,
                                const Eigen::MatrixXd& a_hat,
                                const Eigen::MatrixXd& b_hat, long n,
                                const CsBootstrapConfig& cfg);

/// Test-facing certificate of the first-order expansion of the projection:
/// || project(theta_c + delta, a) - theta_c - (I - P) delta || with
/// P = A^{-1} J^T (J A^{-1} J^T)^{-1} J evaluated at theta_c.
double linearization_residual(const Manifold& manifold,
                              const Eigen::VectorXd& theta_c,
                              const Eigen::VectorXd& delta,
                              const Eigen::MatrixXd& a);

/// 1-based order-statistic index ceil(count * level), snapped to the
/// nearest integer before the ceiling to keep e.g. 1000 * 0.95 at 950.
long order_statistic_index(long count, double level);

/// Shared replicate machinery: evaluates `replicate_value` on a derived
/// stream per index (parallelizable, order-invariant), excludes throwing
/// replicates within a 1% budget, and assembles the outcome.
CsBootstrapOutcome run_replicates(
    double statistic, long replicates, double alpha, int workers,
    std::uint64_t seed,
    const std::function<double(RngStream&)>& replicate_value);

}  // namespace rankforge::lsce
