#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rankforge/core_linalg.hpp"
#include "rankforge/errors.hpp"
#include "rankforge/min_discrepancy.hpp"
#include "test_util.hpp"

using namespace rankforge;
using namespace rankforge::mindisc;

namespace {

// Brute force for the 2x2 rank-1 weighted projection: sweep the left
// direction and solve the two per-column weighted least squares in closed
// form, then refine around the best angle.
double brute_force_2x2(const Eigen::MatrixXd& m_hat,
                       const Eigen::Matrix2d& inv_var) {
  auto objective = [&](double phi) {
    const Eigen::Vector2d a(std::cos(phi), std::sin(phi));
    double total = 0.0;
    for (int j = 0; j < 2; ++j) {
      double num = 0.0, den = 0.0;
      for (int i = 0; i < 2; ++i) {
        num += inv_var(i, j) * a[i] * m_hat(i, j);
        den += inv_var(i, j) * a[i] * a[i];
      }
      const double b = den > 0.0 ? num / den : 0.0;
      for (int i = 0; i < 2; ++i) {
        const double r = m_hat(i, j) - a[i] * b;
        total += inv_var(i, j) * r * r;
      }
    }
    return total;
  };
  double best = std::numeric_limits<double>::infinity();
  double best_phi = 0.0;
  const int grid = 4000;
  for (int k = 0; k <= grid; ++k) {
    const double phi = M_PI * k / grid;
    const double v = objective(phi);
    if (v < best) {
      best = v;
      best_phi = phi;
    }
  }
  double lo = best_phi - M_PI / grid, hi = best_phi + M_PI / grid;
  for (int it = 0; it < 80; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (objective(m1) < objective(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return std::min(best, objective(0.5 * (lo + hi)));
}

// Diagonal weight matrix in vec order for the 2x2 example: variances
// (v1, off, off, v2) on the coordinates (1,1),(2,1),(1,2),(2,2).
Eigen::MatrixXd diag_gamma_factor(double v1, double v2, double off = 1.0) {
  Eigen::VectorXd var(4);
  var << v1, off, off, v2;
  return var.cwiseInverse().cwiseSqrt().asDiagonal();
}

}  // namespace

TEST_CASE("identity metric reproduces the Frobenius optimum") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd m = testutil::random_matrix(3, 4, rng);
    for (int rank : {1, 2}) {
      const FactoredPoint pt =
          solve(m, Eigen::MatrixXd::Identity(12, 12), rank);
      const auto [truncated, residual] =
          linalg::nearest_rank_frobenius(m, rank);
      CHECK(pt.objective == doctest::Approx(residual).epsilon(1e-8));
      CHECK((pt.matrix() - truncated).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("exact rank-m input converges immediately to zero") {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd ab = testutil::random_matrix(3, 1, rng) *
                             testutil::random_matrix(4, 1, rng).transpose();
  const FactoredPoint pt = solve(ab, Eigen::MatrixXd::Identity(12, 12), 1);
  CHECK(pt.objective <= 1e-18 * ab.squaredNorm());
}

TEST_CASE("the diagonal 2x2 example attains min(l1^2/v1, l2^2/v2)") {
  Eigen::MatrixXd m = Eigen::Vector2d(2.0, 0.5).asDiagonal();
  const FactoredPoint pt = solve(m, diag_gamma_factor(4.0, 1.0), 1);
  CHECK(pt.objective == doctest::Approx(0.25).epsilon(1e-8));

  Eigen::Matrix2d inv_var;
  inv_var << 1.0 / 4.0, 1.0, 1.0, 1.0 / 1.0;
  CHECK(brute_force_2x2(m, inv_var) == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("objective history is nonincreasing") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd m = testutil::random_matrix(3, 5, rng);
    Eigen::MatrixXd gamma = testutil::random_spd(15, rng, 0.5, 3.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
    const Eigen::MatrixXd g = es.operatorInverseSqrt();
    const FactoredPoint pt = solve(m, g, 2);
    for (std::size_t k = 1; k < pt.objective_history.size(); ++k) {
      const double prev = pt.objective_history[k - 1];
      const double cur = pt.objective_history[k];
      CHECK(cur <= prev + 1e-12 * std::max(prev, 1.0));
    }
    CHECK(pt.objective == doctest::Approx(pt.objective_history.back()));
    // warm-start dominance
    CHECK(pt.objective <= pt.objective_history.front() + 1e-12);
  }
}

TEST_CASE("returned factors are feasible") {
  std::mt19937_64 rng(17);
  const Eigen::MatrixXd m = testutil::random_matrix(4, 5, rng);
  Eigen::MatrixXd gamma = testutil::random_spd(20, rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
  const FactoredPoint pt = solve(m, es.operatorInverseSqrt(), 2);
  // orthonormal columns
  CHECK((pt.a.transpose() * pt.a - Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() <= 1e-9);
  // numerical rank <= m
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(pt.matrix());
  CHECK(svd.singularValues()[2] <= 1e-9 * svd.singularValues()[0]);
}

TEST_CASE("objective scales as 1/c when the metric is c*I") {
  std::mt19937_64 rng(19);
  const Eigen::MatrixXd m = testutil::random_matrix(3, 4, rng);
  const double c = 4.0;
  // gamma = c I  =>  G = c^{-1/2} I
  const Eigen::MatrixXd g1 = Eigen::MatrixXd::Identity(12, 12);
  const Eigen::MatrixXd gc = (1.0 / std::sqrt(c)) * g1;
  const double o1 = solve(m, g1, 1).objective;
  const double oc = solve(m, gc, 1).objective;
  CHECK(oc == doctest::Approx(o1 / c).epsilon(1e-10));
}

TEST_CASE("solve validates its arguments") {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(6, 6);
  CHECK_THROWS_AS(solve(m, g, 0), InvalidInput);
  CHECK_THROWS_AS(solve(m, g, 3), InvalidInput);
  CHECK_THROWS_AS(solve(m, Eigen::MatrixXd::Identity(5, 5), 1), InvalidInput);
}

TEST_CASE("a tight iteration budget raises OptimizerDidNotConverge") {
  std::mt19937_64 rng(71);
  const Eigen::MatrixXd m = testutil::random_matrix(4, 6, rng);
  Eigen::MatrixXd gamma = testutil::random_spd(24, rng, 0.05, 5.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
  OptimizerConfig cfg;
  cfg.max_outer_iterations = 1;
  cfg.objective_tolerance = 1e-16;
  cfg.restarts = 0;
  try {
    const FactoredPoint pt = solve(m, es.operatorInverseSqrt(), 2, cfg);
    // Converging in one round is possible; then no throw is correct.
    CHECK(pt.objective >= 0.0);
  } catch (const OptimizerDidNotConverge& e) {
    CHECK(e.iterations >= 1);
    CHECK(e.gradient_norm >= 0.0);
  }
}

TEST_CASE("grid of diagonal 2x2 instances matches brute force") {
  // Same construction as the acceptance grid, smaller here.
  const double l1s[] = {2.0, 3.0};
  const double l2s[] = {0.5, 1.0};
  for (double l1 : l1s) {
    for (double l2 : l2s) {
      for (double v1 : {3.0, 5.0}) {
        for (double v2 : {0.5, 1.0}) {
          Eigen::MatrixXd m = Eigen::Vector2d(l1, l2).asDiagonal();
          const double got = solve(m, diag_gamma_factor(v1, v2), 1).objective;
          const double expected = std::min(l1 * l1 / v1, l2 * l2 / v2);
          CHECK(got == doctest::Approx(expected).epsilon(1e-6));
        }
      }
    }
  }
}
