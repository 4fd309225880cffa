#include "rankforge/core_linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace rankforge::linalg {

namespace {

void require_finite(const Eigen::MatrixXd& a, const char* name) {
  if (!a.allFinite()) {
    throw InvalidInput(std::string(name) + " contains non-finite entries");
  }
}

}  // namespace

EstimatedMatrix::EstimatedMatrix(Eigen::MatrixXd m, Eigen::MatrixXd gamma,
                                 long n_obs) {
  require_finite(m, "m_hat");
  require_finite(gamma, "gamma_hat");
  const long p = m.rows(), h = m.cols();
  if (p < 1 || h < p) {
    throw InvalidInput("m_hat must be p x H with 1 <= p <= H");
  }
  if (n_obs < 2) throw InvalidInput("sample size n must be at least 2");
  if (gamma.rows() != p * h || gamma.cols() != p * h) {
    throw InvalidInput("gamma_hat must be (p*H) x (p*H)");
  }
  const double scale = gamma.cwiseAbs().maxCoeff();
  if ((gamma - gamma.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(scale, 1.0)) {
    throw InvalidInput("gamma_hat is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma,
                                                    Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo < -1e-8 * std::max(hi, 0.0)) {
    throw InvalidInput("gamma_hat is not positive semi-definite");
  }
  m_hat = std::move(m);
  gamma_hat = std::move(gamma);
  n = n_obs;
}

EstimatedMatrix EstimatedMatrix::unchecked(Eigen::MatrixXd m,
                                           Eigen::MatrixXd gamma, long n_obs) {
  EstimatedMatrix out;
  out.m_hat = std::move(m);
  out.gamma_hat = std::move(gamma);
  out.n = n_obs;
  return out;
}

double SvdParts::trailing_energy() const {
  double s = 0.0;
  for (int k = split; k < singular_values.size(); ++k) {
    s += singular_values[k] * singular_values[k];
  }
  return s;
}

SvdParts svd_split(const Eigen::MatrixXd& m_hat, int m) {
  require_finite(m_hat, "m_hat");
  const long p = m_hat.rows(), h = m_hat.cols();
  if (h < p) throw InvalidInput("svd_split expects p <= H");
  if (m < 0 || m > p) throw InvalidInput("candidate rank m out of [0, p]");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m_hat,
                                        Eigen::ComputeFullU | Eigen::ComputeThinV);
  SvdParts parts;
  parts.u = svd.matrixU();
  parts.v = svd.matrixV();
  parts.singular_values = svd.singularValues();
  parts.split = m;

  // Sign convention: largest-magnitude entry of each left vector is
  // nonnegative, ties broken by lowest index.
  for (long k = 0; k < parts.u.cols(); ++k) {
    long imax = 0;
    double best = -1.0;
    for (long i = 0; i < parts.u.rows(); ++i) {
      const double a = std::abs(parts.u(i, k));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (parts.u(imax, k) < 0.0) {
      parts.u.col(k) = -parts.u.col(k);
      if (k < parts.v.cols()) parts.v.col(k) = -parts.v.col(k);
    }
  }
  return parts;
}

ProjectorPair projectors(const SvdParts& parts) {
  const long p = parts.u.rows();
  const long h = parts.v.rows();
  const int m = parts.split;
  const double lambda1 = parts.singular_values.size() > 0
                             ? parts.singular_values[0]
                             : 0.0;
  if (m >= 1 && m <= p - 1) {
    const double gap =
        parts.singular_values[m - 1] - parts.singular_values[m];
    if (gap <= kSpectralGapRelTol * lambda1) {
      std::ostringstream msg;
      msg << "spectral gap at split " << m << " vanished ("
          << parts.singular_values[m - 1] << " vs "
          << parts.singular_values[m] << ")";
      throw DegenerateSpectrum(parts.singular_values[m - 1],
                               parts.singular_values[m], msg.str());
    }
  }
  ProjectorPair pair;
  pair.m = m;
  const Eigen::MatrixXd u1 = parts.u.leftCols(m);
  const Eigen::MatrixXd v1 = parts.v.leftCols(m);
  pair.q1 = Eigen::MatrixXd::Identity(p, p) - u1 * u1.transpose();
  pair.q2 = Eigen::MatrixXd::Identity(h, h) - v1 * v1.transpose();
  return pair;
}

std::pair<Eigen::MatrixXd, double> nearest_rank_frobenius(
    const Eigen::MatrixXd& m_hat, int m) {
  const SvdParts parts = svd_split(m_hat, m);
  const ProjectorPair proj = projectors(parts);
  Eigen::MatrixXd truncated = proj.p1() * m_hat * proj.p2();
  return {std::move(truncated), parts.trailing_energy()};
}

Eigen::MatrixXd sandwich(const ProjectorPair& proj,
                         const Eigen::MatrixXd& gamma) {
  const long p = proj.q1.rows();
  const long h = proj.q2.rows();
  const long d = p * h;
  if (gamma.rows() != d || gamma.cols() != d) {
    throw InvalidInput("sandwich: gamma dimension does not match p*H");
  }
  if (d <= 400) {
    Eigen::MatrixXd kron(d, d);
    for (long j = 0; j < h; ++j) {
      for (long i = 0; i < h; ++i) {
        kron.block(i * p, j * p, p, p) = proj.q2(i, j) * proj.q1;
      }
    }
    Eigen::MatrixXd out = kron * gamma * kron;
    return 0.5 * (out + out.transpose());
  }
  // Large case: apply X -> q1 * X * q2 column-block-wise on each vec'd
  // column of gamma, then again on the rows.
  Eigen::MatrixXd half(d, d);
  for (long c = 0; c < d; ++c) {
    const Eigen::MatrixXd x = unvec(gamma.col(c), p, h);
    half.col(c) = vec(proj.q1 * x * proj.q2);
  }
  Eigen::MatrixXd out(d, d);
  for (long c = 0; c < d; ++c) {
    const Eigen::MatrixXd x = unvec(half.row(c).transpose(), p, h);
    out.row(c) = vec(proj.q1 * x * proj.q2).transpose();
  }
  return 0.5 * (out + out.transpose());
}

std::pair<Eigen::MatrixXd, int> pseudo_inverse(const Eigen::MatrixXd& a,
                                               double rel_tol) {
  if (a.rows() != a.cols()) throw InvalidInput("pseudo_inverse: not square");
  require_finite(a, "pseudo_inverse input");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = rel_tol * ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  int rank = 0;
  for (long k = 0; k < ev.size(); ++k) {
    if (std::abs(ev[k]) > cutoff) {
      inv[k] = 1.0 / ev[k];
      ++rank;
    }
  }
  Eigen::MatrixXd pinv =
      es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  return {std::move(pinv), rank};
}

}  // namespace rankforge::linalg
