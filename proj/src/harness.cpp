#include "rankforge/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rankforge/errors.hpp"

namespace rankforge::harness {

using ranktest::RankTestResult;
using ranktest::RankTestSpec;

std::string MethodColumn::name() const {
  std::string base = stats::to_string(kind);
  if (bootstrap) return base + "_cb";
  if (kind == stats::StatKind::Lambda1) {
    return base + "_" + ranktest::to_string(variant);
  }
  return base + "_asym";
}

std::uint64_t MethodColumn::cell_id() const {
  std::uint64_t k = 0;
  switch (kind) {
    case stats::StatKind::Lambda1: k = 1; break;
    case stats::StatKind::Lambda2: k = 2; break;
    case stats::StatKind::Lambda3: k = 3; break;
  }
  std::uint64_t v = bootstrap ? 8 : static_cast<std::uint64_t>(variant);
  return k * 16 + v;
}

std::vector<MethodColumn> default_columns() {
  using stats::StatKind;
  using ranktest::AsymptoticVariant;
  return {
      {StatKind::Lambda1, false, AsymptoticVariant::Wood},
      {StatKind::Lambda1, false, AsymptoticVariant::Rescaled},
      {StatKind::Lambda1, false, AsymptoticVariant::Adjusted},
      {StatKind::Lambda1, true, {}},
      {StatKind::Lambda2, false, {}},
      {StatKind::Lambda2, true, {}},
      {StatKind::Lambda3, false, {}},
      {StatKind::Lambda3, true, {}},
  };
}

MethodColumn parse_column(const std::string& name) {
  for (const MethodColumn& c : default_columns()) {
    if (c.name() == name) return c;
  }
  if (name == "lambda1_mc") {
    return {stats::StatKind::Lambda1, false,
            ranktest::AsymptoticVariant::MonteCarloWeights};
  }
  throw InvalidInput("unknown method column '" + name + "'");
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const CampaignCell& CampaignTable::cell(long n, int m,
                                        const std::string& column) const {
  for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
    if (sample_sizes[i] != n) continue;
    for (std::size_t j = 0; j < ranks.size(); ++j) {
      if (ranks[j] != m) continue;
      for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].name() == column) return cells[i][j][c];
      }
    }
  }
  throw InvalidInput("no such campaign cell: n=" + std::to_string(n) +
                     " m=" + std::to_string(m) + " column=" + column);
}

std::string CampaignTable::to_csv() const {
  std::ostringstream out;
  out << "n,m";
  for (const MethodColumn& c : columns) out << ',' << c.name();
  out << '\n';
  for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
    for (std::size_t j = 0; j < ranks.size(); ++j) {
      out << sample_sizes[i] << ',' << ranks[j];
      for (std::size_t c = 0; c < columns.size(); ++c) {
        out << ',' << format_g17(cells[i][j][c].frequency());
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string CampaignTable::metadata_json() const {
  nlohmann::json meta;
  meta["master_seed"] = master_seed;
  meta["reps"] = reps;
  meta["boot_b"] = boot_b;
  meta["alpha"] = alpha;
  meta["wall_seconds"] = wall_seconds;
  meta["sample_sizes"] = sample_sizes;
  meta["ranks"] = ranks;
  nlohmann::json per_cell = nlohmann::json::array();
  for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
    for (std::size_t j = 0; j < ranks.size(); ++j) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        const CampaignCell& cell = cells[i][j][c];
        per_cell.push_back({{"n", sample_sizes[i]},
                            {"m", ranks[j]},
                            {"column", columns[c].name()},
                            {"rejects", cell.rejects},
                            {"successes", cell.successes},
                            {"failures", cell.failures},
                            {"frequency", cell.frequency()}});
      }
    }
  }
  meta["cells"] = std::move(per_cell);
  return meta.dump(2);
}

std::string CampaignTable::details_csv() const {
  std::ostringstream out;
  out << "n,rep,m,column,failed,reject,statistic,quantile\n";
  for (const DetailRecord& d : details) {
    out << d.n << ',' << d.rep << ',' << d.m << ',' << d.column << ','
        << (d.failed ? 1 : 0) << ',' << (d.reject ? 1 : 0) << ','
        << format_g17(d.statistic) << ',' << format_g17(d.quantile) << '\n';
  }
  return out.str();
}

RankTestResult run_with_tie_policy(const linalg::EstimatedMatrix& est,
                                   const RankTestSpec& spec,
                                   const ranktest::WStarSampler& sampler,
                                   const ranktest::GammaStarRule& gamma_rule,
                                   TiePolicy policy,
                                   std::uint64_t perturb_seed) {
  try {
    return ranktest::run_test(est, spec, sampler, gamma_rule);
  } catch (const DegenerateSpectrum&) {
    if (policy == TiePolicy::Error) throw;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(est.m_hat);
    const double scale = 1e-8 * svd.singularValues()[0];
    RngStream rng(derive_seed(perturb_seed, {kTagPerturb}));
    Eigen::MatrixXd noisy = est.m_hat;
    for (long j = 0; j < noisy.cols(); ++j) {
      for (long i = 0; i < noisy.rows(); ++i) {
        noisy(i, j) += scale * rng.normal();
      }
    }
    const linalg::EstimatedMatrix perturbed =
        linalg::EstimatedMatrix::unchecked(std::move(noisy), est.gamma_hat,
                                           est.n);
    return ranktest::run_test(perturbed, spec, sampler, gamma_rule);
  }
}

namespace {

struct TaskOutcome {
  bool failed = true;
  bool reject = false;
  double statistic = 0.0;
  double quantile = 0.0;
};

}  // namespace

CampaignTable run_campaign(const CampaignConfig& cfg) {
  if (cfg.reps < 1) throw InvalidInput("campaign needs reps >= 1");
  if (cfg.boot_b < 1) throw InvalidInput("campaign needs boot_b >= 1");
  if (cfg.sample_sizes.empty() || cfg.ranks.empty() || cfg.columns.empty()) {
    throw InvalidInput("campaign needs sample sizes, ranks and columns");
  }
  const auto t0 = std::chrono::steady_clock::now();

  const std::size_t n_count = cfg.sample_sizes.size();
  const std::size_t m_count = cfg.ranks.size();
  const std::size_t c_count = cfg.columns.size();
  const long tasks_total = static_cast<long>(n_count) * cfg.reps;

  // outcomes[task][m][c]; task = n_index * reps + rep
  std::vector<std::vector<std::vector<TaskOutcome>>> outcomes(
      tasks_total, std::vector<std::vector<TaskOutcome>>(
                       m_count, std::vector<TaskOutcome>(c_count)));

  auto run_task = [&](long task) {
    const std::size_t n_idx = static_cast<std::size_t>(task / cfg.reps);
    const long rep = task % cfg.reps;
    const long n = cfg.sample_sizes[n_idx];

    sir::ModelSpec model{cfg.model, n, cfg.p, cfg.h,
                         derive_seed(cfg.master_seed,
                                     {kTagSample, static_cast<std::uint64_t>(n),
                                      static_cast<std::uint64_t>(rep)})};
    std::optional<sir::SirTestInputs> inputs;
    try {
      const sir::SirSample sample = sir::generate(model);
      const sir::SirMatrices mats = sir::build_matrices(sample, cfg.slice_mode);
      inputs.emplace(sir::make_test_inputs(mats, cfg.weight_law));
    } catch (const Error&) {
      return;  // all cells of this replication stay failed
    }

    const sir::SirBootstrap& boot = inputs->bootstrap;
    ranktest::WStarSampler sampler = [&boot](RngStream& rng) {
      sir::SirDraw d = boot.draw(rng);
      return ranktest::WStarDraw{std::move(d.w_star), std::move(d.weights)};
    };
    ranktest::GammaStarRule gamma_rule =
        [&boot](const ranktest::WStarDraw& d) {
          return boot.gamma_star(sir::SirDraw{d.w_star, d.weights});
        };

    for (std::size_t j = 0; j < m_count; ++j) {
      for (std::size_t c = 0; c < c_count; ++c) {
        const MethodColumn& col = cfg.columns[c];
        RankTestSpec spec;
        spec.kind = col.kind;
        spec.m = cfg.ranks[j];
        spec.alpha = cfg.alpha;
        spec.optimizer = cfg.optimizer;
        const std::uint64_t cell_seed = derive_seed(
            cfg.master_seed,
            {kTagCell, static_cast<std::uint64_t>(n),
             static_cast<std::uint64_t>(rep), col.cell_id(),
             static_cast<std::uint64_t>(cfg.ranks[j])});
        if (col.bootstrap) {
          spec.method = ranktest::CsBootstrap{cfg.boot_b, cell_seed, 1};
        } else {
          ranktest::Asymptotic a;
          a.variant = col.variant;
          a.mc_seed = cell_seed;
          spec.method = a;
        }
        TaskOutcome& slot = outcomes[task][j][c];
        try {
          const RankTestResult r =
              run_with_tie_policy(inputs->est, spec, sampler, gamma_rule,
                                  cfg.tie_policy, cell_seed);
          slot.failed = false;
          slot.reject = r.reject;
          slot.statistic = r.statistic.value;
          slot.quantile = r.quantile;
        } catch (const Error&) {
          slot.failed = true;
        }
      }
    }
  };

  const int workers = std::max(1, cfg.parallelism);
  if (workers == 1) {
    for (long task = 0; task < tasks_total; ++task) run_task(task);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (long task = next.fetch_add(1); task < tasks_total;
             task = next.fetch_add(1)) {
          run_task(task);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  CampaignTable table;
  table.sample_sizes = cfg.sample_sizes;
  table.ranks = cfg.ranks;
  table.columns = cfg.columns;
  table.master_seed = cfg.master_seed;
  table.reps = cfg.reps;
  table.boot_b = cfg.boot_b;
  table.alpha = cfg.alpha;
  table.cells.assign(n_count,
                     std::vector<std::vector<CampaignCell>>(
                         m_count, std::vector<CampaignCell>(c_count)));

  for (long task = 0; task < tasks_total; ++task) {
    const std::size_t n_idx = static_cast<std::size_t>(task / cfg.reps);
    const long rep = task % cfg.reps;
    for (std::size_t j = 0; j < m_count; ++j) {
      for (std::size_t c = 0; c < c_count; ++c) {
        const TaskOutcome& o = outcomes[task][j][c];
        CampaignCell& cell = table.cells[n_idx][j][c];
        if (o.failed) {
          ++cell.failures;
        } else {
          ++cell.successes;
          if (o.reject) ++cell.rejects;
        }
        if (cfg.log_details) {
          table.details.push_back({cfg.sample_sizes[n_idx], rep, cfg.ranks[j],
                                   cfg.columns[c].name(), o.failed, o.reject,
                                   o.statistic, o.quantile});
        }
      }
    }
  }

  for (std::size_t i = 0; i < n_count; ++i) {
    for (std::size_t j = 0; j < m_count; ++j) {
      for (std::size_t c = 0; c < c_count; ++c) {
        const CampaignCell& cell = table.cells[i][j][c];
        if (cell.failures * 50 > cfg.reps) {  // > 2%
          std::ostringstream msg;
          msg << "campaign cell n=" << cfg.sample_sizes[i]
              << " m=" << cfg.ranks[j] << " column="
              << cfg.columns[c].name() << " lost " << cell.failures << " of "
              << cfg.reps << " replications";
          throw Error(msg.str());
        }
      }
    }
  }

  table.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return table;
}

}  // namespace rankforge::harness
