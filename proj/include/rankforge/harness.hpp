#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rankforge/rank_testing.hpp"
#include "rankforge/sir_app.hpp"

namespace rankforge::harness {

/// What to do when a projector split hits tied singular values.
enum class TiePolicy { Error, Perturb };

/// One column of the output table: a statistic plus how its reference
/// quantile is obtained.
struct MethodColumn {
  stats::StatKind kind = stats::StatKind::Lambda1;
  bool bootstrap = false;
  ranktest::AsymptoticVariant variant =
      ranktest::AsymptoticVariant::MonteCarloWeights;

  std::string name() const;
  /// Stable id used to derive this column's random streams; adding or
  /// removing columns does not perturb the draws of the others.
  std::uint64_t cell_id() const;
};

/// The eight benchmark columns: Lambda1 x {wood, rescaled, adjusted, cb},
/// Lambda2 x {asymptotic, cb}, Lambda3 x {asymptotic, cb}.
std::vector<MethodColumn> default_columns();

MethodColumn parse_column(const std::string& name);

struct CampaignConfig {
  sir::Model model = sir::Model::I;
  int p = 6;
  int h = 5;
  std::vector<long> sample_sizes = {100};
  long reps = 500;
  long boot_b = 500;
  double alpha = 0.05;
  std::vector<int> ranks = {0, 1};
  std::vector<MethodColumn> columns = default_columns();
  std::uint64_t master_seed = 0;
  int parallelism = 1;
  sir::WeightLaw weight_law = sir::WeightLaw::Normal;
  sir::SliceMode slice_mode = sir::SliceMode::EqualCount;
  TiePolicy tie_policy = TiePolicy::Error;
  bool log_details = false;
  mindisc::OptimizerConfig optimizer;
};

struct CampaignCell {
  long rejects = 0;
  long successes = 0;
  long failures = 0;
  double frequency() const {
    return successes > 0
               ? static_cast<double>(rejects) / static_cast<double>(successes)
               : 0.0;
  }
};

struct DetailRecord {
  long n = 0;
  long rep = 0;
  int m = 0;
  std::string column;
  bool failed = false;
  bool reject = false;
  double statistic = 0.0;
  double quantile = 0.0;
};

struct CampaignTable {
  std::vector<long> sample_sizes;
  std::vector<int> ranks;
  std::vector<MethodColumn> columns;
  /// cells[n_index][m_index][column_index]
  std::vector<std::vector<std::vector<CampaignCell>>> cells;
  std::uint64_t master_seed = 0;
  long reps = 0;
  long boot_b = 0;
  double alpha = 0.0;
  double wall_seconds = 0.0;
  std::vector<DetailRecord> details;

  const CampaignCell& cell(long n, int m, const std::string& column) const;
  std::string to_csv() const;
  std::string metadata_json() const;
  std::string details_csv() const;
};

/// Runs the Monte Carlo campaign: per replication, generate a sample,
/// build the slicing matrices once, run every configured test, aggregate
/// rejection frequencies. Deterministic given master_seed, independent of
/// the worker count.
CampaignTable run_campaign(const CampaignConfig& cfg);

/// run_test wrapper implementing the tie policy: on DegenerateSpectrum
/// with TiePolicy::Perturb, adds 1e-8 * lambda_1 i.i.d. noise to the
/// estimate and retries once.
ranktest::RankTestResult run_with_tie_policy(
    const linalg::EstimatedMatrix& est, const ranktest::RankTestSpec& spec,
    const ranktest::WStarSampler& sampler,
    const ranktest::GammaStarRule& gamma_rule, TiePolicy policy,
    std::uint64_t perturb_seed);

/// Formats a double with 17 significant digits.
std::string format_g17(double v);

}  // namespace rankforge::harness
