#include "rankforge/rank_testing.hpp"

#include <cmath>

#include "rankforge/errors.hpp"

namespace rankforge::ranktest {

using linalg::EstimatedMatrix;
using stats::StatKind;
using stats::StatValue;

const char* to_string(AsymptoticVariant variant) {
  switch (variant) {
    case AsymptoticVariant::Wood: return "wood";
    case AsymptoticVariant::Adjusted: return "adjusted";
    case AsymptoticVariant::Rescaled: return "rescaled";
    case AsymptoticVariant::MonteCarloWeights: return "mc";
  }
  return "?";
}

namespace {

StatValue compute_statistic(const EstimatedMatrix& est,
                            const RankTestSpec& spec, bool with_weights) {
  switch (spec.kind) {
    case StatKind::Lambda1:
      return stats::lambda1(est, spec.m, with_weights);
    case StatKind::Lambda2:
      return stats::lambda2(est, spec.m);
    case StatKind::Lambda3:
      return stats::lambda3(est, spec.m, spec.optimizer);
  }
  throw InvalidInput("unknown statistic kind");
}

void asymptotic_path(const RankTestSpec& spec, const Asymptotic& method,
                     RankTestResult* out) {
  const double level = 1.0 - spec.alpha;
  switch (spec.kind) {
    case StatKind::Lambda1: {
      asym::WeightedChiSqMethod m;
      switch (method.variant) {
        case AsymptoticVariant::Wood:
          m = asym::Wood{};
          break;
        case AsymptoticVariant::Adjusted:
          m = asym::Adjusted{};
          break;
        case AsymptoticVariant::Rescaled:
          m = asym::Rescaled{};
          break;
        case AsymptoticVariant::MonteCarloWeights:
          m = asym::MonteCarlo{method.mc_draws, method.mc_seed};
          break;
      }
      const asym::WeightedChiSq law(*out->statistic.weights, m);
      const asym::WeightedQuantile q = asym::quantile_detail(law, level);
      out->quantile = q.value;
      out->wood_fallback = q.monte_carlo_fallback;
      break;
    }
    case StatKind::Lambda2:
    case StatKind::Lambda3: {
      const int df = *out->statistic.df;
      out->df_used = df;
      out->quantile = df > 0 ? asym::chi2_quantile(df, level) : 0.0;
      break;
    }
  }
  out->reject = out->statistic.value > out->quantile;
}

void bootstrap_path(const EstimatedMatrix& est, const RankTestSpec& spec,
                    const CsBootstrap& method, const WStarSampler& sampler,
                    const GammaStarRule& gamma_rule, RankTestResult* out) {
  if (!sampler) {
    throw InvalidInput("bootstrap method requires a W* sampler");
  }
  const Eigen::MatrixXd constrained = out->statistic.constrained_matrix;
  const double root_n_inv = 1.0 / std::sqrt(static_cast<double>(est.n));
  const long n = est.n;
  const int m = spec.m;

  auto replicate = [&](RngStream& rng) -> double {
    const WStarDraw draw = sampler(rng);
    if (draw.w_star.rows() != est.p() || draw.w_star.cols() != est.h()) {
      throw InvalidInput("W* draw has wrong shape");
    }
    const Eigen::MatrixXd m_star = constrained + root_n_inv * draw.w_star;
    switch (spec.kind) {
      case StatKind::Lambda1:
        return stats::lambda1_value(m_star, m, n);
      case StatKind::Lambda2: {
        const Eigen::MatrixXd gamma_star =
            gamma_rule ? gamma_rule(draw) : est.gamma_hat;
        return stats::lambda2_value(m_star, gamma_star, m, n);
      }
      case StatKind::Lambda3: {
        const Eigen::MatrixXd gamma_star =
            gamma_rule ? gamma_rule(draw) : est.gamma_hat;
        return stats::lambda3_value(m_star, gamma_star, m, n, spec.optimizer);
      }
    }
    throw InvalidInput("unknown statistic kind");
  };

  const lsce::CsBootstrapOutcome outcome =
      lsce::run_replicates(out->statistic.value, method.replicates, spec.alpha,
                           method.workers, method.seed, replicate);
  out->quantile = outcome.quantile;
  out->p_value = outcome.p_value;
  out->reject = outcome.reject;
  out->replicate_summary = outcome.summary;
  if (method.keep_replicates) out->replicate_values = outcome.replicate_values;
}

}  // namespace

RankTestResult run_test(const EstimatedMatrix& est, const RankTestSpec& spec,
                        const WStarSampler& sampler,
                        const GammaStarRule& gamma_rule) {
  if (spec.m < 0 || spec.m >= est.p()) {
    throw InvalidInput("tested rank m must lie in [0, p)");
  }
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) {
    throw InvalidInput("alpha must lie in (0, 1)");
  }

  RankTestResult out;
  out.spec = spec;
  const bool asymptotic = std::holds_alternative<Asymptotic>(spec.method);
  const bool needs_weights = asymptotic && spec.kind == StatKind::Lambda1;
  out.statistic = compute_statistic(est, spec, needs_weights);

  if (asymptotic) {
    asymptotic_path(spec, std::get<Asymptotic>(spec.method), &out);
  } else {
    bootstrap_path(est, spec, std::get<CsBootstrap>(spec.method), sampler,
                   gamma_rule, &out);
  }
  return out;
}

RankEstimate estimate_rank(const EstimatedMatrix& est,
                           RankTestSpec spec_template,
                           const WStarSampler& sampler,
                           const GammaStarRule& gamma_rule) {
  RankEstimate out;
  for (int m = 0; m < est.p(); ++m) {
    spec_template.m = m;
    out.trail.push_back(run_test(est, spec_template, sampler, gamma_rule));
    if (!out.trail.back().reject) {
      out.d_hat = m;
      return out;
    }
  }
  out.d_hat = static_cast<int>(est.p());
  out.full_rank = true;
  return out;
}

}  // namespace rankforge::ranktest
