#include "rankforge/lsce.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "rankforge/core_linalg.hpp"
#include "rankforge/errors.hpp"
#include "rankforge/statistics.hpp"

namespace rankforge::lsce {

Eigen::VectorXd Manifold::constraint(const Eigen::VectorXd&) const {
  throw InvalidInput("manifold has no constraint oracle");
}

Eigen::MatrixXd Manifold::constraint_jacobian(const Eigen::VectorXd&) const {
  throw InvalidInput("manifold has no constraint oracle");
}

Eigen::VectorXd UnitCircleManifold::project(
    const Eigen::VectorXd& theta, const Eigen::MatrixXd& a_weight) const {
  if (theta.size() != 1 || a_weight.size() != 1) {
    throw InvalidInput("circle manifold lives in ambient dimension 1");
  }
  Eigen::VectorXd out(1);
  out[0] = theta[0] >= 0.0 ? 1.0 : -1.0;  // project(0) = +1 by convention
  return out;
}

Eigen::VectorXd UnitCircleManifold::constraint(
    const Eigen::VectorXd& theta) const {
  Eigen::VectorXd g(1);
  g[0] = theta[0] * theta[0] - 1.0;
  return g;
}

Eigen::MatrixXd UnitCircleManifold::constraint_jacobian(
    const Eigen::VectorXd& theta) const {
  Eigen::MatrixXd j(1, 1);
  j(0, 0) = 2.0 * theta[0];
  return j;
}

namespace {

bool is_isotropic(const Eigen::MatrixXd& a, double* scale) {
  const long d = a.rows();
  const double c = a.trace() / static_cast<double>(d);
  const double dev =
      (a - c * Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
  if (dev <= 1e-12 * std::max(std::abs(c), 1.0)) {
    *scale = c;
    return true;
  }
  return false;
}

}  // namespace

Eigen::VectorXd SphereManifold::project(const Eigen::VectorXd& theta,
                                        const Eigen::MatrixXd& a_weight) const {
  double c = 0.0;
  if (!is_isotropic(a_weight, &c)) {
    throw InvalidInput("sphere projection requires an isotropic weight");
  }
  const double norm = theta.norm();
  if (norm == 0.0) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim_);
    e[0] = 1.0;
    return e;
  }
  return theta / norm;
}

Eigen::VectorXd SphereManifold::constraint(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd g(1);
  g[0] = theta.squaredNorm() - 1.0;
  return g;
}

Eigen::MatrixXd SphereManifold::constraint_jacobian(
    const Eigen::VectorXd& theta) const {
  return 2.0 * theta.transpose();
}

Eigen::VectorXd FixedRankManifold::project(
    const Eigen::VectorXd& theta, const Eigen::MatrixXd& a_weight) const {
  if (theta.size() != p_ * h_) {
    throw InvalidInput("fixed-rank projection: theta has wrong dimension");
  }
  const Eigen::MatrixXd mat = linalg::unvec(theta, p_, h_);
  if (m_ == 0) return Eigen::VectorXd::Zero(p_ * h_);

  double c = 0.0;
  if (!force_iterative_ && is_isotropic(a_weight, &c)) {
    return linalg::vec(linalg::nearest_rank_frobenius(mat, m_).first);
  }
  // General metric: factor the weight as G^T G and run the alternating
  // solver. stats::gamma_inverse_sqrt expects the covariance, i.e. the
  // inverse of the weight.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a_weight);
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0 ||
      ev.maxCoeff() / ev.minCoeff() > stats::kGammaConditionLimit) {
    const double cond = ev.minCoeff() > 0.0
                            ? ev.maxCoeff() / ev.minCoeff()
                            : std::numeric_limits<double>::infinity();
    throw SingularGamma(cond, "projection weight is not positive definite");
  }
  const Eigen::MatrixXd g = es.eigenvectors() *
                            ev.cwiseSqrt().asDiagonal() *
                            es.eigenvectors().transpose();
  return linalg::vec(mindisc::solve(mat, g, m_, opt_).matrix());
}

std::pair<Eigen::VectorXd, double> constrained_statistic(
    const Eigen::VectorXd& theta_hat, const Manifold& manifold,
    const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, long n) {
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a,
                                                      Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0 || hi / lo > stats::kGammaConditionLimit) {
      throw SingularGamma(lo > 0.0 ? hi / lo
                                   : std::numeric_limits<double>::infinity(),
                          "constrained_statistic: weight a is not positive "
                          "definite");
    }
  }
  Eigen::VectorXd theta_c = manifold.project(theta_hat, a);
  const Eigen::VectorXd d = theta_hat - theta_c;
  const double lambda =
      std::max(0.0, static_cast<double>(n) * d.dot(b * d));
  return {std::move(theta_c), lambda};
}

long order_statistic_index(long count, double level) {
  const double t = static_cast<double>(count) * level;
  const double r = std::round(t);
  const double k =
      (std::abs(t - r) < 1e-9 * std::max(1.0, std::abs(t))) ? r : std::ceil(t);
  return std::clamp(static_cast<long>(k), 1L, count);
}

CsBootstrapOutcome run_replicates(
    double statistic, long replicates, double alpha, int workers,
    std::uint64_t seed,
    const std::function<double(RngStream&)>& replicate_value) {
  if (replicates < 1) throw InvalidInput("bootstrap needs at least 1 replicate");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidInput("alpha must lie in (0, 1)");
  }

  std::vector<double> values(replicates,
                             std::numeric_limits<double>::quiet_NaN());
  std::vector<char> failed(replicates, 0);

  auto work = [&](long b) {
    RngStream rng(derive_seed(seed, {kTagReplicate,
                                     static_cast<std::uint64_t>(b)}));
    try {
      values[b] = replicate_value(rng);
    } catch (const Error&) {
      failed[b] = 1;
    }
  };

  const int nw = std::max(1, workers);
  if (nw == 1 || replicates < 2 * nw) {
    for (long b = 0; b < replicates; ++b) work(b);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int t = 0; t < nw; ++t) {
      pool.emplace_back([&] {
        for (long b = next.fetch_add(1); b < replicates;
             b = next.fetch_add(1)) {
          work(b);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  CsBootstrapOutcome out;
  out.statistic = statistic;
  long failures = 0;
  for (long b = 0; b < replicates; ++b) {
    if (failed[b]) {
      ++failures;
    } else {
      out.replicate_values.push_back(values[b]);
    }
  }
  if (failures > replicates / 100) {
    throw BootstrapUnstable(failures, replicates,
                            "more than 1% of bootstrap replicates failed");
  }
  const long count = static_cast<long>(out.replicate_values.size());
  std::vector<double> sorted = out.replicate_values;
  std::sort(sorted.begin(), sorted.end());
  const long idx = order_statistic_index(count, 1.0 - alpha);
  out.quantile = sorted[idx - 1];
  long ge = 0;
  for (double v : out.replicate_values) {
    if (v >= statistic) ++ge;
  }
  out.p_value = static_cast<double>(ge) / static_cast<double>(count);
  out.reject = statistic > out.quantile;
  out.summary.count = count;
  out.summary.failures = failures;
  out.summary.min = sorted.front();
  out.summary.max = sorted.back();
  out.summary.median = (count % 2 == 1)
                           ? sorted[count / 2]
                           : 0.5 * (sorted[count / 2 - 1] + sorted[count / 2]);
  return out;
}

CsBootstrapOutcome cs_bootstrap(const Eigen::VectorXd& theta_hat,
                                const Manifold& manifold,
                                const Eigen::MatrixXd& a_hat,
                                const Eigen::MatrixXd& b_hat, long n,
                                const CsBootstrapConfig& cfg) {
  if (!cfg.sampler) throw InvalidInput("cs_bootstrap: sampler is required");
  auto [theta_c, lambda] =
      constrained_statistic(theta_hat, manifold, a_hat, b_hat, n);

  const double root_n_inv = 1.0 / std::sqrt(static_cast<double>(n));
  const Eigen::VectorXd theta_c_copy = theta_c;
  auto replicate = [&, theta_c_copy](RngStream& rng) -> double {
    const CsReplicate draw = cfg.sampler(rng);
    if (!draw.w_star.allFinite()) {
      throw InvalidInput("sampler produced a non-finite draw");
    }
    const Eigen::VectorXd theta_star0 =
        theta_c_copy + root_n_inv * draw.w_star;
    const Eigen::MatrixXd& a_star = draw.a_star ? *draw.a_star : a_hat;
    const Eigen::MatrixXd& b_star = draw.b_star ? *draw.b_star : b_hat;
    const Eigen::VectorXd theta_star_c = manifold.project(theta_star0, a_star);
    const Eigen::VectorXd d = theta_star0 - theta_star_c;
    return std::max(0.0, static_cast<double>(n) * d.dot(b_star * d));
  };

  return run_replicates(lambda, cfg.replicates, cfg.alpha, cfg.workers,
                        cfg.seed, replicate);
}

double linearization_residual(const Manifold& manifold,
                              const Eigen::VectorXd& theta_c,
                              const Eigen::VectorXd& delta,
                              const Eigen::MatrixXd& a) {
  if (!manifold.has_constraint_oracle()) {
    throw InvalidInput("linearization_residual needs a constraint oracle");
  }
  const Eigen::MatrixXd j = manifold.constraint_jacobian(theta_c);
  const long q = j.rows();
  Eigen::JacobiSVD<Eigen::MatrixXd> jsvd(j);
  if (jsvd.singularValues().size() == 0 ||
      jsvd.singularValues()[q - 1] <=
          1e-12 * std::max(jsvd.singularValues()[0], 1.0)) {
    throw NonsingularityViolated(
        "constraint Jacobian is rank deficient at theta_c");
  }
  const Eigen::MatrixXd a_inv = a.inverse();
  const Eigen::MatrixXd jt = j.transpose();
  const Eigen::MatrixXd core = (j * a_inv * jt).inverse();
  const Eigen::MatrixXd p = a_inv * jt * core * j;
  const Eigen::MatrixXd eye =
      Eigen::MatrixXd::Identity(theta_c.size(), theta_c.size());
  const Eigen::VectorXd projected = manifold.project(theta_c + delta, a);
  return (projected - theta_c - (eye - p) * delta).norm();
}

}  // namespace rankforge::lsce
