#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "rankforge/core_linalg.hpp"
#include "test_util.hpp"

using namespace rankforge;
using namespace rankforge::linalg;

TEST_CASE("svd_split on a diagonal matrix") {
  Eigen::MatrixXd m = Eigen::Vector3d(3, 2, 1).asDiagonal();
  const SvdParts parts = svd_split(m, 2);
  CHECK(parts.singular_values[0] == doctest::Approx(3.0));
  CHECK(parts.singular_values[1] == doctest::Approx(2.0));
  CHECK(parts.singular_values[2] == doctest::Approx(1.0));
  CHECK(parts.split == 2);
}

TEST_CASE("svd_split of the zero matrix") {
  const SvdParts parts = svd_split(Eigen::MatrixXd::Zero(2, 4), 0);
  CHECK(parts.singular_values.size() == 2);
  CHECK(parts.singular_values[0] == 0.0);
  CHECK(parts.singular_values[1] == 0.0);
}

TEST_CASE("svd_split reconstructs the input") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd m = testutil::random_matrix(3, 5, rng);
    const SvdParts parts = svd_split(m, 1);
    const Eigen::MatrixXd rebuilt =
        parts.u * parts.singular_values.asDiagonal() * parts.v.transpose();
    const double tol = 1e-10 * parts.singular_values[0];
    CHECK((rebuilt - m).cwiseAbs().maxCoeff() <= tol);
    // descending order
    for (int k = 1; k < 3; ++k) {
      CHECK(parts.singular_values[k - 1] >= parts.singular_values[k]);
    }
    // sign convention: largest-magnitude entry of each left vector >= 0
    for (int k = 0; k < 3; ++k) {
      long imax = 0;
      parts.u.col(k).cwiseAbs().maxCoeff(&imax);
      CHECK(parts.u(imax, k) >= 0.0);
    }
  }
}

TEST_CASE("svd_split rejects non-finite input and bad ranks") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3);
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svd_split(m, 1), InvalidInput);
  CHECK_THROWS_AS(svd_split(Eigen::MatrixXd::Zero(2, 3), 3), InvalidInput);
  CHECK_THROWS_AS(svd_split(Eigen::MatrixXd::Zero(2, 3), -1), InvalidInput);
}

TEST_CASE("projectors on diag(3,2,1) split at 2") {
  Eigen::MatrixXd m = Eigen::Vector3d(3, 2, 1).asDiagonal();
  const ProjectorPair proj = projectors(svd_split(m, 2));
  Eigen::MatrixXd expected = Eigen::Vector3d(0, 0, 1).asDiagonal();
  CHECK((proj.q1 - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((proj.q2 - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("projectors at m=0 keep everything") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd m = testutil::random_matrix(3, 5, rng);
  const ProjectorPair proj = projectors(svd_split(m, 0));
  CHECK((proj.q1 - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((proj.q2 - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(proj.q2.trace() == doctest::Approx(5.0));
}

TEST_CASE("projectors detect tied singular values") {
  Eigen::MatrixXd m = Eigen::Vector3d(2, 2, 1).asDiagonal();
  CHECK_THROWS_AS(projectors(svd_split(m, 1)), DegenerateSpectrum);
  try {
    projectors(svd_split(m, 1));
  } catch (const DegenerateSpectrum& e) {
    CHECK(e.lambda_m == doctest::Approx(2.0));
    CHECK(e.lambda_m1 == doctest::Approx(2.0));
  }
}

TEST_CASE("projector properties on random input") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd m = testutil::random_matrix(4, 6, rng);
    for (int split : {1, 2, 3}) {
      const ProjectorPair proj = projectors(svd_split(m, split));
      // symmetric idempotent
      CHECK((proj.q1 * proj.q1 - proj.q1).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((proj.q2 * proj.q2 - proj.q2).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((proj.q1 - proj.q1.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((proj.q2 - proj.q2.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      // traces
      CHECK(proj.q1.trace() == doctest::Approx(4.0 - split).epsilon(1e-8));
      CHECK(proj.q2.trace() == doctest::Approx(6.0 - split).epsilon(1e-8));
      // complementarity is exact by construction
      CHECK((proj.p1() + proj.q1 - Eigen::MatrixXd::Identity(4, 4))
                .cwiseAbs()
                .maxCoeff() == 0.0);
      CHECK((proj.p2() + proj.q2 - Eigen::MatrixXd::Identity(6, 6))
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("nearest_rank_frobenius on diagonal input") {
  Eigen::MatrixXd m = Eigen::Vector3d(3, 2, 1).asDiagonal();
  {
    const auto [t, res] = nearest_rank_frobenius(m, 2);
    Eigen::MatrixXd expected = Eigen::Vector3d(3, 2, 0).asDiagonal();
    CHECK((t - expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(res == doctest::Approx(1.0));
  }
  {
    const auto [t, res] = nearest_rank_frobenius(m, 0);
    CHECK(t.cwiseAbs().maxCoeff() == 0.0);
    CHECK(res == doctest::Approx(14.0));
  }
}

namespace {

// Independent rank-1 fit: alternating exact updates of a and b for
// min ||M - a b^T||_F^2, run from several starts.
double best_rank1_frobenius(const Eigen::MatrixXd& m, std::mt19937_64& rng) {
  double best = m.squaredNorm();
  std::normal_distribution<double> normal;
  for (int start = 0; start < 5; ++start) {
    Eigen::VectorXd a(m.rows());
    for (long i = 0; i < a.size(); ++i) a[i] = normal(rng);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m.cols());
    for (int it = 0; it < 200; ++it) {
      b = m.transpose() * a / a.squaredNorm();
      a = m * b / b.squaredNorm();
    }
    best = std::min(best, (m - a * b.transpose()).squaredNorm());
  }
  return best;
}

}  // namespace

TEST_CASE("nearest_rank_frobenius matches direct rank-1 optimization") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd m = testutil::random_matrix(3, 4, rng);
    const auto [t, res] = nearest_rank_frobenius(m, 1);
    const double direct = best_rank1_frobenius(m, rng);
    CHECK(res == doctest::Approx(direct).epsilon(1e-6));
    CHECK((m - t).squaredNorm() == doctest::Approx(res).epsilon(1e-9));
  }
}

TEST_CASE("Eckart-Young identity links the residual to trailing energy") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd m = testutil::random_matrix(4, 5, rng);
    for (int split : {0, 1, 2, 3}) {
      const SvdParts parts = svd_split(m, split);
      const auto [t, res] = nearest_rank_frobenius(m, split);
      CHECK(res == doctest::Approx(parts.trailing_energy()).epsilon(1e-9));
      CHECK((m - t).squaredNorm() == doctest::Approx(res).epsilon(1e-9));
    }
  }
}

TEST_CASE("singular values are invariant under orthogonal transforms") {
  std::mt19937_64 rng(31);
  const Eigen::MatrixXd m = testutil::random_matrix(3, 5, rng);
  const Eigen::MatrixXd qu =
      Eigen::HouseholderQR<Eigen::MatrixXd>(testutil::random_matrix(3, 3, rng))
          .householderQ();
  const Eigen::MatrixXd qv =
      Eigen::HouseholderQR<Eigen::MatrixXd>(testutil::random_matrix(5, 5, rng))
          .householderQ();
  const Eigen::VectorXd s0 = svd_split(m, 1).singular_values;
  const Eigen::VectorXd s1 = svd_split(qu * m * qv.transpose(), 1).singular_values;
  CHECK((s0 - s1).cwiseAbs().maxCoeff() <= 1e-9 * s0[0]);
}

TEST_CASE("sandwich with identity projectors returns gamma") {
  std::mt19937_64 rng(37);
  const Eigen::MatrixXd gamma = testutil::random_spd(6, rng);
  ProjectorPair proj;
  proj.q1 = Eigen::MatrixXd::Identity(2, 2);
  proj.q2 = Eigen::MatrixXd::Identity(3, 3);
  proj.m = 0;
  CHECK((sandwich(proj, gamma) - gamma).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("sandwich of the identity has projector spectrum") {
  Eigen::MatrixXd m(3, 4);
  m.setZero();
  m(0, 0) = 3;
  m(1, 1) = 2;
  m(2, 2) = 1;
  const ProjectorPair proj = projectors(svd_split(m, 1));
  const Eigen::MatrixXd s =
      sandwich(proj, Eigen::MatrixXd::Identity(12, 12));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  // rank(q1) = 2, rank(q2) = 3 -> six unit eigenvalues, six zeros
  int ones = 0, zeros = 0;
  for (long k = 0; k < 12; ++k) {
    if (std::abs(es.eigenvalues()[k] - 1.0) < 1e-9) ++ones;
    if (std::abs(es.eigenvalues()[k]) < 1e-9) ++zeros;
  }
  CHECK(ones == 6);
  CHECK(zeros == 6);
}

TEST_CASE("sandwich matches the dense Kronecker computation") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd m = testutil::random_matrix(2, 2, rng);
    const ProjectorPair proj = projectors(svd_split(m, 1));
    const Eigen::MatrixXd gamma = testutil::random_spd(4, rng);
    const Eigen::MatrixXd k = testutil::kronecker(proj.q2, proj.q1);
    const Eigen::MatrixXd expected = k * gamma * k;
    CHECK((sandwich(proj, gamma) - expected).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("sandwich avoids the dense Kronecker product on large inputs") {
  // 21 x 21 makes the vec dimension 441 > 400, forcing the block path.
  std::mt19937_64 rng(43);
  const Eigen::MatrixXd m = testutil::random_matrix(21, 21, rng);
  const ProjectorPair proj = projectors(svd_split(m, 2));
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Identity(441, 441);
  const Eigen::MatrixXd s = sandwich(proj, gamma);
  const Eigen::MatrixXd k = testutil::kronecker(proj.q2, proj.q1);
  CHECK((s - k * gamma * k).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("sandwich preserves positive semi-definiteness") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd m = testutil::random_matrix(3, 4, rng);
    const ProjectorPair proj = projectors(svd_split(m, 1));
    const Eigen::MatrixXd gamma = testutil::random_spd(12, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sandwich(proj, gamma));
    CHECK(es.eigenvalues().minCoeff() >=
          -1e-8 * es.eigenvalues().maxCoeff());
  }
}

TEST_CASE("sandwich rejects mismatched dimensions") {
  ProjectorPair proj;
  proj.q1 = Eigen::MatrixXd::Identity(2, 2);
  proj.q2 = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(sandwich(proj, Eigen::MatrixXd::Identity(5, 5)),
                  InvalidInput);
}

TEST_CASE("pseudo_inverse on simple diagonals") {
  {
    const auto [pinv, rank] = pseudo_inverse(Eigen::Vector2d(2, 0).asDiagonal());
    CHECK(pinv(0, 0) == doctest::Approx(0.5));
    CHECK(pinv(1, 1) == doctest::Approx(0.0));
    CHECK(rank == 1);
  }
  {
    const auto [pinv, rank] = pseudo_inverse(Eigen::MatrixXd::Identity(3, 3));
    CHECK((pinv - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <=
          1e-12);
    CHECK(rank == 3);
  }
  {
    const auto [pinv, rank] = pseudo_inverse(Eigen::MatrixXd::Zero(2, 2));
    CHECK(pinv.cwiseAbs().maxCoeff() == 0.0);
    CHECK(rank == 0);
  }
}

TEST_CASE("pseudo_inverse satisfies the Penrose identities") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd b = testutil::random_matrix(4, 2, rng);
    const Eigen::MatrixXd a = b * b.transpose();  // PSD, rank 2
    const auto [pinv, rank] = pseudo_inverse(a);
    CHECK(rank == 2);
    const double scale = a.norm();
    CHECK((a * pinv * a - a).norm() <= 1e-7 * scale);
    CHECK((pinv * a * pinv - pinv).norm() <= 1e-7 * pinv.norm());
    CHECK(((a * pinv).transpose() - a * pinv).norm() <= 1e-7);
    CHECK(((pinv * a).transpose() - pinv * a).norm() <= 1e-7);
  }
}

TEST_CASE("EstimatedMatrix validates its invariants") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3);
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Identity(6, 6);
  CHECK_NOTHROW(EstimatedMatrix(m, gamma, 10));
  CHECK_THROWS_AS(EstimatedMatrix(m, gamma, 1), InvalidInput);
  CHECK_THROWS_AS(EstimatedMatrix(Eigen::MatrixXd::Zero(3, 2), gamma, 10),
                  InvalidInput);
  CHECK_THROWS_AS(EstimatedMatrix(m, Eigen::MatrixXd::Identity(5, 5), 10),
                  InvalidInput);
  Eigen::MatrixXd asym = gamma;
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(EstimatedMatrix(m, asym, 10), InvalidInput);
  Eigen::MatrixXd indef = gamma;
  indef(0, 0) = -1.0;
  CHECK_THROWS_AS(EstimatedMatrix(m, indef, 10), InvalidInput);
}
