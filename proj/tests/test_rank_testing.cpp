#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rankforge/rank_testing.hpp"
#include "rankforge/sir_app.hpp"
#include "test_util.hpp"

using namespace rankforge;
using namespace rankforge::ranktest;
using linalg::EstimatedMatrix;
using stats::StatKind;

namespace {

// diag(3, 2, 0) + tiny noise, identity covariance.
EstimatedMatrix near_rank2(double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::MatrixXd m = Eigen::Vector3d(3, 2, 0).asDiagonal();
  for (long j = 0; j < 3; ++j) {
    for (long i = 0; i < 3; ++i) m(i, j) += normal(rng);
  }
  return EstimatedMatrix(m, Eigen::MatrixXd::Identity(9, 9), 500);
}

struct SirFixture {
  sir::SirTestInputs inputs;
  WStarSampler sampler;
  GammaStarRule gamma_rule;

  explicit SirFixture(const sir::ModelSpec& spec)
      : inputs(sir::make_test_inputs(sir::build_matrices(sir::generate(spec)),
                                     sir::WeightLaw::Normal)) {
    const sir::SirBootstrap* boot = &inputs.bootstrap;
    sampler = [boot](RngStream& rng) {
      sir::SirDraw d = boot->draw(rng);
      return WStarDraw{std::move(d.w_star), std::move(d.weights)};
    };
    gamma_rule = [boot](const WStarDraw& d) {
      return boot->gamma_star(sir::SirDraw{d.w_star, d.weights});
    };
  }
};

}  // namespace

TEST_CASE("exact-rank input is not rejected at its true rank") {
  const EstimatedMatrix est = near_rank2(1e-6, 1);
  RankTestSpec spec;
  spec.kind = StatKind::Lambda1;
  spec.m = 2;
  spec.method = Asymptotic{AsymptoticVariant::MonteCarloWeights};
  spec.alpha = 0.05;
  const RankTestResult r = run_test(est, spec);
  CHECK_FALSE(r.reject);
  CHECK(r.statistic.value < 1e-6);
  CHECK(r.quantile > 0.0);
}

TEST_CASE("an order-of-magnitude gap forces rejection below the true rank") {
  const EstimatedMatrix est = near_rank2(1e-6, 2);
  RankTestSpec spec;
  spec.kind = StatKind::Lambda1;
  spec.m = 1;
  spec.method = Asymptotic{AsymptoticVariant::MonteCarloWeights};
  spec.alpha = 0.05;
  const RankTestResult r = run_test(est, spec);
  CHECK(r.reject);
  CHECK(r.statistic.value > 1000.0);  // about 500 * 4
}

TEST_CASE("all asymptotic variants agree on the easy calls") {
  const EstimatedMatrix est = near_rank2(1e-6, 3);
  for (auto variant : {AsymptoticVariant::Wood, AsymptoticVariant::Adjusted,
                       AsymptoticVariant::Rescaled,
                       AsymptoticVariant::MonteCarloWeights}) {
    RankTestSpec spec;
    spec.kind = StatKind::Lambda1;
    spec.method = Asymptotic{variant};
    spec.m = 2;
    CHECK_FALSE(run_test(est, spec).reject);
    spec.m = 1;
    CHECK(run_test(est, spec).reject);
  }
}

TEST_CASE("lambda2 and lambda3 asymptotic paths use chi-squared quantiles") {
  const EstimatedMatrix est = near_rank2(1e-6, 4);
  for (StatKind kind : {StatKind::Lambda2, StatKind::Lambda3}) {
    RankTestSpec spec;
    spec.kind = kind;
    spec.m = 2;
    spec.method = Asymptotic{};
    const RankTestResult r = run_test(est, spec);
    CHECK_FALSE(r.reject);
    REQUIRE(r.df_used.has_value());
    CHECK(*r.df_used == 1);  // (p-m)(H-m) = 1
    CHECK(r.quantile == doctest::Approx(asym::chi2_quantile(1, 0.95)));
  }
}

TEST_CASE("tied singular values surface DegenerateSpectrum") {
  Eigen::MatrixXd m = Eigen::Vector3d(2, 2, 1).asDiagonal();
  const EstimatedMatrix est(m, Eigen::MatrixXd::Identity(9, 9), 100);
  RankTestSpec spec;
  spec.kind = StatKind::Lambda1;
  spec.m = 1;
  CHECK_THROWS_AS(run_test(est, spec), DegenerateSpectrum);
}

TEST_CASE("the bootstrap quantile is the 950th order statistic") {
  // Synthetic replicate values 1..1000 through the shared machinery.
  long counter = 0;
  const lsce::CsBootstrapOutcome out = lsce::run_replicates(
      10.0, 1000, 0.05, 1, 7,
      [&counter](RngStream&) { return static_cast<double>(++counter); });
  CHECK(out.quantile == doctest::Approx(950.0));
}

TEST_CASE("bootstrap path runs every statistic on Model I data") {
  const SirFixture fix({sir::Model::I, 120, 4, 5, 11});
  for (StatKind kind :
       {StatKind::Lambda1, StatKind::Lambda2, StatKind::Lambda3}) {
    RankTestSpec spec;
    spec.kind = kind;
    spec.m = 1;
    spec.method = CsBootstrap{200, 13, 1};
    spec.alpha = 0.05;
    const RankTestResult r =
        run_test(fix.inputs.est, spec, fix.sampler, fix.gamma_rule);
    REQUIRE(r.replicate_summary.has_value());
    CHECK(r.replicate_summary->count == 200);
    CHECK(r.replicate_summary->failures == 0);
    CHECK(r.quantile > 0.0);
    REQUIRE(r.p_value.has_value());
    CHECK(*r.p_value >= 0.0);
    CHECK(*r.p_value <= 1.0);
    CHECK(r.reject == (r.statistic.value > r.quantile));

    // determinism across runs and worker counts
    RankTestSpec spec2 = spec;
    spec2.method = CsBootstrap{200, 13, 4};
    const RankTestResult r2 =
        run_test(fix.inputs.est, spec2, fix.sampler, fix.gamma_rule);
    CHECK(r.quantile == r2.quantile);
    CHECK(*r.p_value == *r2.p_value);
  }
}

TEST_CASE("bootstrap without a sampler is rejected") {
  const EstimatedMatrix est = near_rank2(1e-6, 5);
  RankTestSpec spec;
  spec.method = CsBootstrap{};
  CHECK_THROWS_AS(run_test(est, spec), InvalidInput);
}

TEST_CASE("estimate_rank finds rank 2 in the majority of noisy draws") {
  std::mt19937_64 seeds(101);
  int correct = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(seeds());
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(500.0));
    Eigen::MatrixXd m = Eigen::Vector4d(5, 3, 0, 0).asDiagonal();
    for (long j = 0; j < 4; ++j) {
      for (long i = 0; i < 4; ++i) m(i, j) += normal(rng);
    }
    const EstimatedMatrix est(m, Eigen::MatrixXd::Identity(16, 16), 500);
    RankTestSpec spec;
    spec.kind = StatKind::Lambda1;
    spec.method = Asymptotic{AsymptoticVariant::Adjusted};
    spec.alpha = 0.05;
    const RankEstimate e = estimate_rank(est, spec);
    if (e.d_hat == 2) ++correct;
    CHECK(e.trail.size() == static_cast<std::size_t>(e.d_hat) +
                                (e.full_rank ? 0 : 1));
  }
  CHECK(correct > trials / 2);
}

TEST_CASE("the zero matrix is assigned rank 0") {
  const EstimatedMatrix est(Eigen::MatrixXd::Zero(3, 4),
                            Eigen::MatrixXd::Identity(12, 12), 100);
  RankTestSpec spec;
  spec.kind = StatKind::Lambda1;
  spec.method = Asymptotic{AsymptoticVariant::Adjusted};
  const RankEstimate e = estimate_rank(est, spec);
  CHECK(e.d_hat == 0);
  CHECK_FALSE(e.full_rank);
}

TEST_CASE("a well-separated full-rank matrix sweeps to the flag") {
  Eigen::MatrixXd m = Eigen::Vector3d(5, 4, 3).asDiagonal();
  const EstimatedMatrix est(m, Eigen::MatrixXd::Identity(9, 9), 2000);
  RankTestSpec spec;
  spec.kind = StatKind::Lambda1;
  spec.method = Asymptotic{AsymptoticVariant::Adjusted};
  const RankEstimate e = estimate_rank(est, spec);
  CHECK(e.d_hat == 3);
  CHECK(e.full_rank);
  CHECK(e.trail.size() == 3);
}

TEST_CASE("the bootstrap law of Lambda3 reproduces the null law") {
  // One Model I sample (true rank 1): the Lambda3 bootstrap replicates at
  // m = 1 should be distributed like Lambda3 computed on fresh samples.
  const long n = 200;
  const long draws = 2000;
  const SirFixture fix({sir::Model::I, n, 4, 5, 17});
  RankTestSpec spec;
  spec.kind = StatKind::Lambda3;
  spec.m = 1;
  CsBootstrap method;
  method.replicates = draws;
  method.seed = 19;
  method.workers = 4;
  method.keep_replicates = true;
  spec.method = method;
  const RankTestResult r =
      run_test(fix.inputs.est, spec, fix.sampler, fix.gamma_rule);
  REQUIRE(r.replicate_values.has_value());

  std::vector<double> fresh;
  fresh.reserve(draws);
  for (long k = 0; k < draws; ++k) {
    const SirFixture f2(
        {sir::Model::I, n, 4, 5, static_cast<std::uint64_t>(1000 + k)});
    fresh.push_back(stats::lambda3(f2.inputs.est, 1).value);
  }
  const double ks = testutil::ks_two_sample(*r.replicate_values, fresh);
  CHECK(ks < 0.08);
}

TEST_CASE("power mechanism: statistic grows with n, quantile does not") {
  double stat_small = 0.0, quant_small = 0.0;
  for (long n : {100L, 400L}) {
    const SirFixture fix({sir::Model::I, n, 4, 5, 23});
    RankTestSpec spec;
    spec.kind = StatKind::Lambda1;
    spec.m = 0;
    spec.method = CsBootstrap{500, 29, 1};
    const RankTestResult r =
        run_test(fix.inputs.est, spec, fix.sampler, fix.gamma_rule);
    CHECK(r.reject);
    if (n == 100) {
      stat_small = r.statistic.value;
      quant_small = r.quantile;
    } else {
      CHECK(r.statistic.value > 2.0 * stat_small);
      CHECK(r.quantile < 3.0 * quant_small + 1.0);
    }
  }
}
