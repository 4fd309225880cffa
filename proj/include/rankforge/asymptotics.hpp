#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>

#include "rankforge/special_functions.hpp"

namespace rankforge::asym {

/// Quantile estimation methods for a weighted chi-squared law.
struct MonteCarlo {
  long draws = 200000;
  std::uint64_t seed = 0;
};
struct Wood {};
struct Adjusted {};
struct Rescaled {};

using WeightedChiSqMethod = std::variant<MonteCarlo, Wood, Adjusted, Rescaled>;

/// The law of sum_k nu_k W_k^2 with W_k i.i.d. standard normal.
/// Weights must be nonnegative up to a small tolerance; zeros (relative
/// to the largest weight) are dropped on construction.
class WeightedChiSq {
 public:
  WeightedChiSq(const Eigen::VectorXd& weights, WeightedChiSqMethod method);

  /// Strictly positive weights retained after cleanup.
  const Eigen::VectorXd& weights() const { return weights_; }
  const WeightedChiSqMethod& method() const { return method_; }
  bool is_point_mass() const { return weights_.size() == 0; }

 private:
  Eigen::VectorXd weights_;
  WeightedChiSqMethod method_;
};

struct WeightedQuantile {
  double value = 0.0;
  /// True when Wood's moment system was infeasible and the value came
  /// from the Monte Carlo fallback instead.
  bool monte_carlo_fallback = false;
};

/// Quantile of the weighted chi-squared law at the given level in (0,1).
/// The all-zero-weights law is the point mass at 0 and returns 0.
WeightedQuantile quantile_detail(const WeightedChiSq& law, double level);
double quantile(const WeightedChiSq& law, double level);

/// Chi-squared quantile with integer degrees of freedom.
double chi2_quantile(int df, double level);

}  // namespace rankforge::asym
