#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "rankforge/asymptotics.hpp"
#include "rankforge/lsce.hpp"
#include "rankforge/statistics.hpp"

namespace rankforge::ranktest {

/// Reference-quantile approximations for the Lambda1 weighted
/// chi-squared limit. Lambda2/Lambda3 always use their chi-squared df.
enum class AsymptoticVariant { Wood, Adjusted, Rescaled, MonteCarloWeights };

const char* to_string(AsymptoticVariant variant);

struct Asymptotic {
  AsymptoticVariant variant = AsymptoticVariant::MonteCarloWeights;
  long mc_draws = 200000;
  std::uint64_t mc_seed = 20260810;
};

struct CsBootstrap {
  long replicates = 1000;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Keep the full replicate vector on the result (for diagnostics and
  /// distribution dumps).
  bool keep_replicates = false;
};

using TestMethod = std::variant<Asymptotic, CsBootstrap>;

struct RankTestSpec {
  stats::StatKind kind = stats::StatKind::Lambda1;
  int m = 0;
  TestMethod method = Asymptotic{};
  double alpha = 0.05;
  mindisc::OptimizerConfig optimizer;  // Lambda3 inner solver
};

/// One bootstrap perturbation draw: W* in the orientation of the tested
/// matrix, plus the raw multiplier weights when the sampler has them
/// (used by the covariance recomputation rule).
struct WStarDraw {
  Eigen::MatrixXd w_star;
  Eigen::VectorXd weights;
};

using WStarSampler = std::function<WStarDraw(RngStream&)>;
using GammaStarRule = std::function<Eigen::MatrixXd(const WStarDraw&)>;

struct RankTestResult {
  RankTestSpec spec;
  stats::StatValue statistic;
  double quantile = 0.0;
  std::optional<double> p_value;  // bootstrap path only
  bool reject = false;
  std::optional<lsce::ReplicateSummary> replicate_summary;
  std::optional<std::vector<double>> replicate_values;  // keep_replicates
  /// Degrees of freedom used on the asymptotic path (Lambda2/Lambda3).
  std::optional<int> df_used;
  /// Wood's moment system was infeasible; Monte Carlo was used instead.
  bool wood_fallback = false;
};

/// Runs one test of H0: rank = m. On the bootstrap path the perturbed
/// matrix is built from the statistic's own constrained matrix and the
/// replicate statistic is recomputed in full (its own projectors, the
/// replicate covariance from gamma_rule when given, else gamma_hat).
RankTestResult run_test(const linalg::EstimatedMatrix& est,
                        const RankTestSpec& spec,
                        const WStarSampler& sampler = nullptr,
                        const GammaStarRule& gamma_rule = nullptr);

struct RankEstimate {
  int d_hat = 0;
  /// Every tested rank was rejected; d_hat was forced to p.
  bool full_rank = false;
  std::vector<RankTestResult> trail;
};

/// Sequential sweep m = 0, 1, ...: the first non-rejected m is the
/// estimated rank; if every m < p is rejected, d_hat = p with the
/// full-rank flag set.
RankEstimate estimate_rank(const linalg::EstimatedMatrix& est,
                           RankTestSpec spec_template,
                           const WStarSampler& sampler = nullptr,
                           const GammaStarRule& gamma_rule = nullptr);

}  // namespace rankforge::ranktest
