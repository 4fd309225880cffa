// Command-line interface: single tests on CSV data, sequential rank
// estimation, and Monte Carlo level/power campaigns.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "rankforge/harness.hpp"
#include "rankforge/rank_testing.hpp"
#include "rankforge/sir_app.hpp"

namespace {

using namespace rankforge;
using nlohmann::json;

struct TestOptions {
  std::string input;
  std::string stat = "lambda1";
  int m = 0;
  std::string method = "bootstrap";
  std::string variant = "mc";
  double alpha = 0.05;
  long boot = 1000;
  std::uint64_t seed = 0;
  int slices = 5;
  std::string slice_mode = "count";
  std::string weight_law = "normal";
  std::string tie_policy = "error";
  int workers = 1;
  long mc_draws = 200000;
  std::string out = "-";
  std::string dump_replicates;
};

stats::StatKind parse_stat(const std::string& s) {
  if (s == "lambda1") return stats::StatKind::Lambda1;
  if (s == "lambda2") return stats::StatKind::Lambda2;
  if (s == "lambda3") return stats::StatKind::Lambda3;
  throw InvalidInput("unknown statistic '" + s + "'");
}

ranktest::AsymptoticVariant parse_variant(const std::string& s) {
  if (s == "wood") return ranktest::AsymptoticVariant::Wood;
  if (s == "adjusted") return ranktest::AsymptoticVariant::Adjusted;
  if (s == "rescaled") return ranktest::AsymptoticVariant::Rescaled;
  if (s == "mc") return ranktest::AsymptoticVariant::MonteCarloWeights;
  throw InvalidInput("unknown variant '" + s + "'");
}

sir::WeightLaw parse_weight_law(const std::string& s) {
  if (s == "normal") return sir::WeightLaw::Normal;
  if (s == "rademacher") return sir::WeightLaw::Rademacher;
  throw InvalidInput("unknown weight law '" + s + "'");
}

sir::SliceMode parse_slice_mode(const std::string& s) {
  if (s == "count") return sir::SliceMode::EqualCount;
  if (s == "width") return sir::SliceMode::EqualWidth;
  throw InvalidInput("unknown slice mode '" + s + "'");
}

harness::TiePolicy parse_tie_policy(const std::string& s) {
  if (s == "error") return harness::TiePolicy::Error;
  if (s == "perturb") return harness::TiePolicy::Perturb;
  throw InvalidInput("unknown tie policy '" + s + "'");
}

int thread_override(int requested) {
  if (const char* env = std::getenv("RANKFORGE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return requested;
}

void write_output(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << content;
}

json result_to_json(const ranktest::RankTestResult& r) {
  json doc;
  doc["statistic"]["kind"] = stats::to_string(r.spec.kind);
  doc["statistic"]["m"] = r.spec.m;
  doc["statistic"]["value"] = r.statistic.value;
  if (r.statistic.df) doc["statistic"]["df"] = *r.statistic.df;
  if (r.statistic.weights) {
    doc["statistic"]["weights"] = std::vector<double>(
        r.statistic.weights->data(),
        r.statistic.weights->data() + r.statistic.weights->size());
  }
  if (std::holds_alternative<ranktest::Asymptotic>(r.spec.method)) {
    doc["method"] = "asymptotic";
    if (r.spec.kind == stats::StatKind::Lambda1) {
      doc["variant"] = ranktest::to_string(
          std::get<ranktest::Asymptotic>(r.spec.method).variant);
    }
  } else {
    doc["method"] = "bootstrap";
    doc["boot"] = std::get<ranktest::CsBootstrap>(r.spec.method).replicates;
  }
  doc["alpha"] = r.spec.alpha;
  doc["quantile"] = r.quantile;
  doc["reject"] = r.reject;
  if (r.p_value) doc["p_value"] = *r.p_value;
  if (r.df_used) doc["df_used"] = *r.df_used;
  if (r.wood_fallback) doc["wood_fallback"] = true;
  if (r.replicate_summary) {
    doc["replicates"] = {{"count", r.replicate_summary->count},
                         {"failures", r.replicate_summary->failures},
                         {"min", r.replicate_summary->min},
                         {"median", r.replicate_summary->median},
                         {"max", r.replicate_summary->max}};
  }
  return doc;
}

struct LoadedInputs {
  sir::SirTestInputs inputs;
  long n;
};

LoadedInputs load_inputs(const TestOptions& opt) {
  const sir::SirSample sample = sir::load_csv(opt.input, opt.slices);
  const sir::SirMatrices mats =
      sir::build_matrices(sample, parse_slice_mode(opt.slice_mode));
  return {sir::make_test_inputs(mats, parse_weight_law(opt.weight_law)),
          sample.n()};
}

ranktest::RankTestSpec make_spec(const TestOptions& opt, int m) {
  ranktest::RankTestSpec spec;
  spec.kind = parse_stat(opt.stat);
  spec.m = m;
  spec.alpha = opt.alpha;
  if (opt.method == "asymptotic") {
    ranktest::Asymptotic a;
    a.variant = parse_variant(opt.variant);
    a.mc_draws = opt.mc_draws;
    a.mc_seed = derive_seed(opt.seed, {kTagCell});
    spec.method = a;
  } else if (opt.method == "bootstrap") {
    ranktest::CsBootstrap b;
    b.replicates = opt.boot;
    b.seed = opt.seed;
    b.workers = thread_override(opt.workers);
    b.keep_replicates = !opt.dump_replicates.empty();
    spec.method = b;
  } else {
    throw InvalidInput("unknown method '" + opt.method + "'");
  }
  return spec;
}

int run_test_command(const TestOptions& opt) {
  const LoadedInputs loaded = load_inputs(opt);
  const sir::SirBootstrap& boot = loaded.inputs.bootstrap;
  ranktest::WStarSampler sampler = [&boot](RngStream& rng) {
    sir::SirDraw d = boot.draw(rng);
    return ranktest::WStarDraw{std::move(d.w_star), std::move(d.weights)};
  };
  ranktest::GammaStarRule gamma_rule = [&boot](const ranktest::WStarDraw& d) {
    return boot.gamma_star(sir::SirDraw{d.w_star, d.weights});
  };

  const ranktest::RankTestResult r = harness::run_with_tie_policy(
      loaded.inputs.est, make_spec(opt, opt.m), sampler, gamma_rule,
      parse_tie_policy(opt.tie_policy), opt.seed);

  json doc = result_to_json(r);
  doc["input"] = opt.input;
  doc["n"] = loaded.n;
  doc["p"] = loaded.inputs.transposed ? loaded.inputs.est.h()
                                      : loaded.inputs.est.p();
  doc["slices"] = opt.slices;
  doc["seed"] = opt.seed;
  doc["transposed"] = loaded.inputs.transposed;
  write_output(opt.out, doc.dump(2));

  if (!opt.dump_replicates.empty() && r.replicate_values) {
    std::string csv = "replicate,value\n";
    for (std::size_t i = 0; i < r.replicate_values->size(); ++i) {
      csv += std::to_string(i) + ',' +
             harness::format_g17((*r.replicate_values)[i]) + '\n';
    }
    write_output(opt.dump_replicates, csv);
  }
  return 0;
}

int run_estimate_rank_command(const TestOptions& opt) {
  const LoadedInputs loaded = load_inputs(opt);
  const sir::SirBootstrap& boot = loaded.inputs.bootstrap;
  ranktest::WStarSampler sampler = [&boot](RngStream& rng) {
    sir::SirDraw d = boot.draw(rng);
    return ranktest::WStarDraw{std::move(d.w_star), std::move(d.weights)};
  };
  ranktest::GammaStarRule gamma_rule = [&boot](const ranktest::WStarDraw& d) {
    return boot.gamma_star(sir::SirDraw{d.w_star, d.weights});
  };

  // The sweep applies the tie policy at every step.
  ranktest::RankTestSpec spec = make_spec(opt, 0);
  ranktest::RankEstimate estimate;
  const harness::TiePolicy policy = parse_tie_policy(opt.tie_policy);
  for (int m = 0; m < loaded.inputs.est.p(); ++m) {
    spec.m = m;
    estimate.trail.push_back(harness::run_with_tie_policy(
        loaded.inputs.est, spec, sampler, gamma_rule, policy, opt.seed));
    if (!estimate.trail.back().reject) {
      estimate.d_hat = m;
      estimate.full_rank = false;
      break;
    }
    estimate.d_hat = m + 1;
    estimate.full_rank = true;
  }

  json doc;
  doc["d_hat"] = estimate.d_hat;
  doc["full_rank"] = estimate.full_rank;
  doc["input"] = opt.input;
  doc["n"] = loaded.n;
  doc["trail"] = json::array();
  for (const auto& step : estimate.trail) {
    doc["trail"].push_back(result_to_json(step));
  }
  write_output(opt.out, doc.dump(2));
  return 0;
}

struct SimulateOptions {
  std::string model = "I";
  std::vector<long> ns = {100};
  int p = 6;
  int slices = 5;
  long reps = 500;
  long boot = 500;
  double alpha = 0.05;
  std::vector<int> ranks = {0, 1};
  std::vector<std::string> stat_names;
  std::uint64_t seed = 0;
  int parallelism = 1;
  std::string weight_law = "normal";
  std::string slice_mode = "count";
  std::string tie_policy = "error";
  std::string out = "-";
  std::string meta;
  std::string log_details;
};

int run_simulate_command(const SimulateOptions& opt) {
  harness::CampaignConfig cfg;
  cfg.model = sir::parse_model(opt.model);
  cfg.sample_sizes = opt.ns;
  cfg.p = opt.p;
  cfg.h = opt.slices;
  cfg.reps = opt.reps;
  cfg.boot_b = opt.boot;
  cfg.alpha = opt.alpha;
  cfg.ranks = opt.ranks;
  if (!opt.stat_names.empty()) {
    cfg.columns.clear();
    for (const std::string& name : opt.stat_names) {
      cfg.columns.push_back(harness::parse_column(name));
    }
  }
  cfg.master_seed = opt.seed;
  cfg.parallelism = thread_override(opt.parallelism);
  cfg.weight_law = parse_weight_law(opt.weight_law);
  cfg.slice_mode = parse_slice_mode(opt.slice_mode);
  cfg.tie_policy = parse_tie_policy(opt.tie_policy);
  cfg.log_details = !opt.log_details.empty();

  const harness::CampaignTable table = harness::run_campaign(cfg);
  write_output(opt.out, table.to_csv());
  std::string meta_path = opt.meta;
  if (meta_path.empty() && opt.out != "-") meta_path = opt.out + ".meta.json";
  if (!meta_path.empty()) write_output(meta_path, table.metadata_json());
  if (!opt.log_details.empty()) {
    write_output(opt.log_details, table.details_csv());
  }
  return 0;
}

void add_common_test_flags(CLI::App* cmd, TestOptions* opt) {
  cmd->add_option("--input", opt->input, "CSV input (header row; Y first)")
      ->required();
  cmd->add_option("--stat", opt->stat, "lambda1|lambda2|lambda3");
  cmd->add_option("--method", opt->method, "asymptotic|bootstrap");
  cmd->add_option("--variant", opt->variant,
                  "lambda1 asymptotic variant: wood|adjusted|rescaled|mc");
  cmd->add_option("--alpha", opt->alpha, "test size");
  cmd->add_option("--boot", opt->boot, "bootstrap replicates B");
  cmd->add_option("--seed", opt->seed, "random seed");
  cmd->add_option("--slices", opt->slices, "slice count H");
  cmd->add_option("--slice-mode", opt->slice_mode, "count|width");
  cmd->add_option("--weight-law", opt->weight_law, "normal|rademacher");
  cmd->add_option("--tie-policy", opt->tie_policy, "error|perturb");
  cmd->add_option("--workers", opt->workers, "bootstrap worker threads");
  cmd->add_option("--mc-draws", opt->mc_draws,
                  "draws for the Monte Carlo weighted quantile");
  cmd->add_option("--out", opt->out, "output path or - for stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rankforge: matrix rank tests with constrained-bootstrap "
               "quantiles"};
  app.require_subcommand(1);

  TestOptions test_opt;
  CLI::App* test_cmd =
      app.add_subcommand("test", "run one rank test on CSV data");
  add_common_test_flags(test_cmd, &test_opt);
  test_cmd->add_option("--m", test_opt.m, "tested rank")->required();
  test_cmd->add_option("--dump-replicates", test_opt.dump_replicates,
                       "write bootstrap replicate values to a CSV");

  TestOptions rank_opt;
  CLI::App* rank_cmd = app.add_subcommand(
      "estimate-rank", "sequential rank sweep on CSV data");
  add_common_test_flags(rank_cmd, &rank_opt);

  SimulateOptions sim_opt;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Monte Carlo level/power campaign");
  sim_cmd->add_option("--model", sim_opt.model, "I|Ia|Ib|II|III");
  sim_cmd->add_option("--n", sim_opt.ns, "sample sizes (repeatable)");
  sim_cmd->add_option("--p", sim_opt.p, "predictor count");
  sim_cmd->add_option("--slices", sim_opt.slices, "slice count H");
  sim_cmd->add_option("--reps", sim_opt.reps, "Monte Carlo replications");
  sim_cmd->add_option("--boot", sim_opt.boot, "bootstrap replicates B");
  sim_cmd->add_option("--alpha", sim_opt.alpha, "test size");
  sim_cmd->add_option("--ranks", sim_opt.ranks, "ranks m to test");
  sim_cmd->add_option("--stats", sim_opt.stat_names,
                      "method columns (e.g. lambda1_cb lambda2_asym)");
  sim_cmd->add_option("--seed", sim_opt.seed, "master seed");
  sim_cmd->add_option("--parallelism", sim_opt.parallelism, "worker count");
  sim_cmd->add_option("--weight-law", sim_opt.weight_law,
                      "normal|rademacher");
  sim_cmd->add_option("--slice-mode", sim_opt.slice_mode, "count|width");
  sim_cmd->add_option("--tie-policy", sim_opt.tie_policy, "error|perturb");
  sim_cmd->add_option("--out", sim_opt.out, "CSV output path or -");
  sim_cmd->add_option("--meta", sim_opt.meta, "metadata JSON path");
  sim_cmd->add_option("--log-details", sim_opt.log_details,
                      "per-replication log CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*test_cmd) return run_test_command(test_opt);
    if (*rank_cmd) return run_estimate_rank_command(rank_opt);
    if (*sim_cmd) return run_simulate_command(sim_opt);
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DegenerateSlicing& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
}
