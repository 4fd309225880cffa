#include "rankforge/statistics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "rankforge/errors.hpp"

namespace rankforge::stats {

using linalg::EstimatedMatrix;
using linalg::ProjectorPair;
using linalg::SvdParts;
using linalg::vec;

const char* to_string(StatKind kind) {
  switch (kind) {
    case StatKind::Lambda1: return "lambda1";
    case StatKind::Lambda2: return "lambda2";
    case StatKind::Lambda3: return "lambda3";
  }
  return "?";
}

namespace {

void check_rank_arg(const EstimatedMatrix& est, int m) {
  if (m < 0 || m >= est.p()) {
    throw InvalidInput("tested rank m must lie in [0, p)");
  }
}

}  // namespace

Eigen::MatrixXd gamma_inverse_sqrt(const Eigen::MatrixXd& gamma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double hi = ev.maxCoeff();
  const double lo = ev.minCoeff();
  if (lo <= 0.0 || hi / lo > kGammaConditionLimit) {
    const double cond = lo > 0.0 ? hi / lo
                                 : std::numeric_limits<double>::infinity();
    std::ostringstream msg;
    msg << "gamma_hat is singular or ill-conditioned (condition " << cond
        << ")";
    throw SingularGamma(cond, msg.str());
  }
  return es.eigenvectors() *
         ev.cwiseInverse().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

double lambda1_value(const Eigen::MatrixXd& m_hat, int m, long n) {
  const SvdParts parts = linalg::svd_split(m_hat, m);
  return static_cast<double>(n) * parts.trailing_energy();
}

double lambda2_value(const Eigen::MatrixXd& m_hat,
                     const Eigen::MatrixXd& gamma, int m, long n) {
  const SvdParts parts = linalg::svd_split(m_hat, m);
  const ProjectorPair proj = linalg::projectors(parts);
  const Eigen::MatrixXd sand = linalg::sandwich(proj, gamma);
  const auto [pinv, rank] = linalg::pseudo_inverse(sand);
  const Eigen::VectorXd r = vec(proj.q1 * m_hat * proj.q2);
  return std::max(0.0, static_cast<double>(n) * r.dot(pinv * r));
}

double lambda3_value(const Eigen::MatrixXd& m_hat,
                     const Eigen::MatrixXd& gamma, int m, long n,
                     const mindisc::OptimizerConfig& opt) {
  const Eigen::MatrixXd g = gamma_inverse_sqrt(gamma);
  if (m == 0) {
    return static_cast<double>(n) * (g * vec(m_hat)).squaredNorm();
  }
  return static_cast<double>(n) *
         mindisc::solve(m_hat, g, m, opt).objective;
}

StatValue lambda1(const EstimatedMatrix& est, int m, bool with_weights) {
  check_rank_arg(est, m);
  const SvdParts parts = linalg::svd_split(est.m_hat, m);
  const ProjectorPair proj = linalg::projectors(parts);

  StatValue out;
  out.kind = StatKind::Lambda1;
  out.m = m;
  out.value = static_cast<double>(est.n) * parts.trailing_energy();
  out.constrained_matrix = proj.p1() * est.m_hat * proj.p2();
  if (with_weights) {
    const Eigen::MatrixXd sand = linalg::sandwich(proj, est.gamma_hat);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sand,
                                                      Eigen::EigenvaluesOnly);
    out.weights = es.eigenvalues().cwiseMax(0.0).reverse().eval();
  }
  return out;
}

StatValue lambda2(const EstimatedMatrix& est, int m) {
  check_rank_arg(est, m);
  const SvdParts parts = linalg::svd_split(est.m_hat, m);
  const ProjectorPair proj = linalg::projectors(parts);
  const Eigen::MatrixXd sand = linalg::sandwich(proj, est.gamma_hat);
  const auto [pinv, rank] = linalg::pseudo_inverse(sand);
  const Eigen::VectorXd r = vec(proj.q1 * est.m_hat * proj.q2);

  StatValue out;
  out.kind = StatKind::Lambda2;
  out.m = m;
  out.value = std::max(0.0, static_cast<double>(est.n) * r.dot(pinv * r));
  out.constrained_matrix = proj.p1() * est.m_hat * proj.p2();
  const long free_dim = (est.p() - m) * (est.h() - m);
  out.df = static_cast<int>(std::min<long>(rank, free_dim));
  return out;
}

StatValue lambda3(const EstimatedMatrix& est, int m,
                  const mindisc::OptimizerConfig& opt) {
  check_rank_arg(est, m);
  const Eigen::MatrixXd g = gamma_inverse_sqrt(est.gamma_hat);

  StatValue out;
  out.kind = StatKind::Lambda3;
  out.m = m;
  out.df = static_cast<int>((est.h() - m) * (est.p() - m));
  if (m == 0) {
    out.value = static_cast<double>(est.n) * (g * vec(est.m_hat)).squaredNorm();
    out.constrained_matrix = Eigen::MatrixXd::Zero(est.p(), est.h());
    return out;
  }
  const mindisc::FactoredPoint sol = mindisc::solve(est.m_hat, g, m, opt);
  out.value = static_cast<double>(est.n) * sol.objective;
  out.constrained_matrix = sol.matrix();
  return out;
}

}  // namespace rankforge::stats
