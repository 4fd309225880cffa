#include "rankforge/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rankforge/errors.hpp"
#include "rankforge/rng.hpp"

namespace rankforge::asym {

WeightedChiSq::WeightedChiSq(const Eigen::VectorXd& weights,
                             WeightedChiSqMethod method)
    : method_(std::move(method)) {
  const double top = weights.size() > 0 ? weights.maxCoeff() : 0.0;
  if (weights.size() > 0 && weights.minCoeff() < -1e-8 * std::max(top, 1.0)) {
    throw InvalidInput("weighted chi-squared weights must be nonnegative");
  }
  std::vector<double> kept;
  kept.reserve(weights.size());
  for (long k = 0; k < weights.size(); ++k) {
    if (weights[k] > 1e-12 * top) kept.push_back(weights[k]);
  }
  weights_ = Eigen::Map<Eigen::VectorXd>(kept.data(), kept.size());
}

namespace {

double monte_carlo_quantile(const Eigen::VectorXd& nu, double level,
                            long draws, std::uint64_t seed) {
  RngStream rng(derive_seed(seed, {0x5eedu}));
  std::vector<double> sample(draws);
  for (long i = 0; i < draws; ++i) {
    double s = 0.0;
    for (long k = 0; k < nu.size(); ++k) {
      const double z = rng.normal();
      s += nu[k] * z * z;
    }
    sample[i] = s;
  }
  std::sort(sample.begin(), sample.end());
  long idx = static_cast<long>(std::ceil(level * draws));
  idx = std::clamp(idx, 1L, draws);
  return sample[idx - 1];
}

// Three-moment quantile of Wood's F-type approximation; returns false
// when every branch of the moment system is infeasible.
bool wood_quantile(const Eigen::VectorXd& nu, double level, double* out) {
  const double k1 = nu.sum();
  const double k2 = 2.0 * nu.squaredNorm();
  const double k3 = 8.0 * nu.array().cube().sum();
  const double t1 = 4.0 * k1 * k2 * k2 + k3 * (k2 - k1 * k1);
  const double t2 = k1 * k3 - 2.0 * k2 * k2;
  if (t2 <= 0.0 && t1 > 0.0) {
    // Two-moment gamma (Satterthwaite-Welch) branch.
    const double a1 = k1 * k1 / k2;
    const double b = k1 / k2;
    *out = inv_gamma_p(a1, level) / b;
    return true;
  }
  if (t1 <= 0.0 && t2 > 0.0) {
    // Inverse-gamma branch: F(x) = 1 - P(a1, b / x).
    const double a1 = 2.0 + (k1 / k2) * (k1 / k2);
    const double b = k1 * (k1 * k1 + k2) / k2;
    *out = b / inv_gamma_p(a1, 1.0 - level);
    return true;
  }
  if (t1 > 0.0 && t2 > 0.0) {
    const double a1 = (2.0 * k1 * (k1 * k3 + k2 * k1 * k1 - k2 * k2)) / t1;
    const double b = t1 / t2;
    const double a2 = 3.0 + 2.0 * k2 * (k2 + k1 * k1) / t2;
    const double u = inv_inc_beta(a1, a2, level);
    if (u >= 1.0) return false;
    *out = b * u / (1.0 - u);
    return true;
  }
  return false;
}

}  // namespace

WeightedQuantile quantile_detail(const WeightedChiSq& law, double level) {
  if (level <= 0.0 || level >= 1.0) {
    throw InvalidInput("quantile level must lie in (0, 1)");
  }
  if (law.is_point_mass()) return {0.0, false};
  const Eigen::VectorXd& nu = law.weights();

  struct Visitor {
    const Eigen::VectorXd& nu;
    double level;
    WeightedQuantile operator()(const MonteCarlo& mc) const {
      return {monte_carlo_quantile(nu, level, mc.draws, mc.seed), false};
    }
    WeightedQuantile operator()(const Wood&) const {
      double q = 0.0;
      if (wood_quantile(nu, level, &q)) return {q, false};
      return {monte_carlo_quantile(nu, level, MonteCarlo{}.draws, 0), true};
    }
    WeightedQuantile operator()(const Adjusted&) const {
      const double a = nu.squaredNorm() / nu.sum();
      const double b = nu.sum() * nu.sum() / nu.squaredNorm();
      return {a * chi2_quantile_real(b, level), false};
    }
    WeightedQuantile operator()(const Rescaled&) const {
      const double c = nu.mean();
      const double s = static_cast<double>(nu.size());
      return {c * chi2_quantile_real(s, level), false};
    }
  };
  return std::visit(Visitor{nu, level}, law.method());
}

double quantile(const WeightedChiSq& law, double level) {
  return quantile_detail(law, level).value;
}

double chi2_quantile(int df, double level) {
  if (df < 1) throw InvalidInput("chi2_quantile: df must be >= 1");
  return chi2_quantile_real(static_cast<double>(df), level);
}

}  // namespace rankforge::asym
