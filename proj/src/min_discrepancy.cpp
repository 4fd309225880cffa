#include "rankforge/min_discrepancy.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "rankforge/core_linalg.hpp"
#include "rankforge/errors.hpp"
#include "rankforge/rng.hpp"

namespace rankforge::mindisc {

namespace {

using linalg::unvec;
using linalg::vec;

// G * (I_H (x) A), the design matrix of the B-step (x = vec(B^T)).
Eigen::MatrixXd design_for_b(const Eigen::MatrixXd& g,
                             const Eigen::MatrixXd& a, long h) {
  const long p = a.rows(), m = a.cols();
  Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(p * h, m * h);
  for (long j = 0; j < h; ++j) kron.block(j * p, j * m, p, m) = a;
  return g * kron;
}

// G * (B (x) I_p), the design matrix of the A-step (y = vec(A)).
Eigen::MatrixXd design_for_a(const Eigen::MatrixXd& g,
                             const Eigen::MatrixXd& b, long p) {
  const long h = b.rows(), m = b.cols();
  Eigen::MatrixXd kron(p * h, p * m);
  for (long j = 0; j < m; ++j) {
    for (long i = 0; i < h; ++i) {
      kron.block(i * p, j * p, p, p) =
          b(i, j) * Eigen::MatrixXd::Identity(p, p);
    }
  }
  return g * kron;
}

// Orthonormal polar factor of a possibly rank-deficient tall matrix.
Eigen::MatrixXd polar_factor(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::MatrixXd random_orthonormal(long p, long m, RngStream& rng) {
  Eigen::MatrixXd g(p, m);
  for (long j = 0; j < m; ++j) {
    for (long i = 0; i < p; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return Eigen::MatrixXd(qr.householderQ()) .leftCols(m);
}

struct RunResult {
  FactoredPoint point;
  double final_rel_decrease = 0.0;
  bool converged = false;
};

RunResult run_from(const Eigen::MatrixXd& m_hat, const Eigen::MatrixXd& g,
                   Eigen::MatrixXd a, const OptimizerConfig& cfg) {
  const long p = m_hat.rows(), h = m_hat.cols(), m = a.cols();
  const Eigen::VectorXd target = g * vec(m_hat);

  RunResult out;
  FactoredPoint& pt = out.point;
  pt.a = std::move(a);

  auto solve_b = [&](const Eigen::MatrixXd& cur_a) -> Eigen::MatrixXd {
    const Eigen::MatrixXd phi = design_for_b(g, cur_a, h);
    const Eigen::VectorXd x = phi.colPivHouseholderQr().solve(target);
    return unvec(x, m, h).transpose();  // x = vec(B^T)
  };
  auto objective = [&](const Eigen::MatrixXd& cur_a,
                       const Eigen::MatrixXd& cur_b) -> double {
    return (target - g * vec(cur_a * cur_b.transpose())).squaredNorm();
  };

  pt.b = solve_b(pt.a);
  pt.objective = objective(pt.a, pt.b);
  pt.objective_history.push_back(pt.objective);
  if (!std::isfinite(pt.objective)) {
    throw NumericalBreakdown("non-finite objective in alternating solve");
  }

  double rel = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < cfg.max_outer_iterations; ++iter) {
    const Eigen::MatrixXd psi = design_for_a(g, pt.b, p);
    const Eigen::VectorXd y = psi.colPivHouseholderQr().solve(target);
    pt.a = polar_factor(unvec(y, p, m));
    pt.b = solve_b(pt.a);
    const double next = objective(pt.a, pt.b);
    if (!std::isfinite(next)) {
      throw NumericalBreakdown("non-finite objective in alternating solve");
    }
    rel = (pt.objective - next) / std::max(pt.objective, 1e-300);
    pt.objective = next;
    pt.objective_history.push_back(next);
    if (rel < cfg.objective_tolerance) {
      out.converged = true;
      ++iter;
      break;
    }
  }
  pt.iterations = iter;
  out.final_rel_decrease = rel;

  const Eigen::VectorXd r = target - g * vec(pt.a * pt.b.transpose());
  const double gb = (design_for_b(g, pt.a, h).transpose() * r).norm();
  const double ga = (design_for_a(g, pt.b, p).transpose() * r).norm();
  pt.gradient_norm = 2.0 * std::hypot(ga, gb);
  return out;
}

}  // namespace

FactoredPoint solve(const Eigen::MatrixXd& m_hat,
                    const Eigen::MatrixXd& gamma_inv_factor, int m,
                    const OptimizerConfig& cfg) {
  const long p = m_hat.rows(), h = m_hat.cols();
  if (m < 1 || m > p) throw InvalidInput("solve: rank m must lie in [1, p]");
  if (!m_hat.allFinite() || !gamma_inv_factor.allFinite()) {
    throw InvalidInput("solve: non-finite input");
  }
  if (gamma_inv_factor.rows() != p * h || gamma_inv_factor.cols() != p * h) {
    throw InvalidInput("solve: gamma_inv_factor must be (p*H) x (p*H)");
  }

  // Warm start: leading left singular vectors of m_hat.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m_hat, Eigen::ComputeThinU);
  RunResult best =
      run_from(m_hat, gamma_inv_factor, svd.matrixU().leftCols(m), cfg);

  for (int r = 0; r < cfg.restarts; ++r) {
    RngStream rng(derive_seed(cfg.restart_seed,
                              {kTagRestart, static_cast<std::uint64_t>(r)}));
    RunResult cand = run_from(m_hat, gamma_inv_factor,
                              random_orthonormal(p, m, rng), cfg);
    if (cand.point.objective < best.point.objective) best = std::move(cand);
  }

  if (!best.converged &&
      best.final_rel_decrease > 100.0 * cfg.objective_tolerance) {
    std::ostringstream msg;
    msg << "alternating solve exhausted " << cfg.max_outer_iterations
        << " iterations (relative decrease " << best.final_rel_decrease
        << ", gradient norm " << best.point.gradient_norm << ")";
    throw OptimizerDidNotConverge(best.point.gradient_norm,
                                  best.point.iterations, msg.str());
  }
  return std::move(best.point);
}

}  // namespace rankforge::mindisc
