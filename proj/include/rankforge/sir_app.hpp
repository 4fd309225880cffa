#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rankforge/core_linalg.hpp"
#include "rankforge/rng.hpp"

namespace rankforge::sir {

/// Paired predictors/responses with a slicing configuration.
struct SirSample {
  Eigen::MatrixXd x;  // n x p
  Eigen::VectorXd y;  // n
  int h_slices = 0;

  SirSample(Eigen::MatrixXd x_in, Eigen::VectorXd y_in, int h);
  long n() const { return x.rows(); }
  long p() const { return x.cols(); }
};

enum class SliceMode {
  EqualCount,  // contiguous slices of size floor/ceil(n/h) in sorted-y order
  EqualWidth,  // literal equi-partition of the observed range of y
};

struct Slicing {
  Eigen::MatrixXd psi;             // n x H, one-hot slice indicators
  std::vector<int> assignment;     // slice index per observation
  std::vector<int> counts;         // observations per slice
};

/// Slice-membership indicators. Equal-count slices are the default; ties
/// are placed by stable sort order.
Slicing slice_indicators(const Eigen::VectorXd& y, int h,
                         SliceMode mode = SliceMode::EqualCount);

/// The slicing covariance estimator and everything the weighted bootstrap
/// needs: centered per-observation matrices and their empirical
/// covariance.
struct SirMatrices {
  Eigen::MatrixXd c_hat;                  // p x H
  std::vector<Eigen::MatrixXd> k_centered;  // n matrices p x H, mean zero
  Eigen::MatrixXd v_hat;                  // pH x pH, divisor n
  std::vector<int> slice_assignment;
  long n = 0;
};

SirMatrices build_matrices(const SirSample& s,
                           SliceMode mode = SliceMode::EqualCount);

/// Same construction from precomputed indicator rows (psi need not be
/// one-hot; any centered functional of y works).
SirMatrices build_matrices_from_indicators(const Eigen::MatrixXd& x,
                                           const Eigen::MatrixXd& psi);

enum class WeightLaw { Normal, Rademacher };

/// One weighted-bootstrap draw: the perturbation sqrt(n) * mean(K*) and
/// the weight vector that produced it (kept so the covariance can be
/// recomputed for the same draw).
struct SirDraw {
  Eigen::MatrixXd w_star;   // same orientation as the packaged estimate
  Eigen::VectorXd weights;  // the n i.i.d. multipliers
};

/// Weighted-bootstrap sampler built on the centered K matrices. Draws are
/// independent across calls; each call consumes only its stream argument.
class SirBootstrap {
 public:
  SirBootstrap(const SirMatrices& m, WeightLaw law, bool transpose = false);

  /// From centered matrices already in their final coordinates.
  SirBootstrap(const std::vector<Eigen::MatrixXd>& centered, WeightLaw law);

  SirDraw draw(RngStream& rng) const;

  /// V* of the same draw: the empirical covariance of the re-weighted,
  /// re-centered observations (divisor n).
  Eigen::MatrixXd gamma_star(const SirDraw& d) const;

  /// Deterministic variant for tests: uses the provided weights.
  SirDraw draw_with_weights(const Eigen::VectorXd& w) const;

  long n() const { return n_; }
  long rows() const { return rows_; }
  long cols() const { return cols_; }

 private:
  Eigen::MatrixXd xi_;  // (rows*cols) x n, column i = vec(K_i - mean)
  long n_ = 0;
  long rows_ = 0;
  long cols_ = 0;
  WeightLaw law_;
};

/// Sampler in the natural p x H orientation of the SirMatrices.
SirBootstrap w_star_sampler(const SirMatrices& m, WeightLaw law);

enum class Model { I, Ia, Ib, II, III };

Model parse_model(const std::string& name);
const char* to_string(Model model);

struct ModelSpec {
  Model id = Model::I;
  long n = 100;
  int p = 6;
  int h = 5;
  std::uint64_t seed = 0;
};

/// Simulated draws from the benchmark regression models. Deterministic
/// given the seed.
SirSample generate(const ModelSpec& spec);

/// Everything a rank test needs. Two coordinate changes are applied, both
/// of which preserve every statistic's value:
///  - one-hot slicing forces zero row sums on each centered K, leaving
///    the covariance singular; the estimate is restricted to orthonormal
///    slice contrasts (H -> H-1 columns), where the covariance is
///    generically invertible;
///  - if the result has more rows than columns it is transposed to honor
///    the p <= H packaging convention.
struct SirTestInputs {
  linalg::EstimatedMatrix est;
  SirBootstrap bootstrap;
  bool transposed = false;
  bool slice_reduced = false;
};

SirTestInputs make_test_inputs(const SirMatrices& m, WeightLaw law);

/// Orthonormal basis of the orthogonal complement of the ones vector
/// (Helmert contrasts), h x (h-1).
Eigen::MatrixXd slice_contrasts(int h);

/// CSV loader: header row required, response in the first column,
/// predictors in the remaining columns. Missing or malformed cells are
/// rejected with a row/column diagnostic.
SirSample load_csv(const std::string& path, int h_slices);

}  // namespace rankforge::sir
