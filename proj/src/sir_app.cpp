#include "rankforge/sir_app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "rankforge/errors.hpp"

namespace rankforge::sir {

using linalg::vec;

SirSample::SirSample(Eigen::MatrixXd x_in, Eigen::VectorXd y_in, int h)
    : x(std::move(x_in)), y(std::move(y_in)), h_slices(h) {
  if (!x.allFinite() || !y.allFinite()) {
    throw InvalidInput("SirSample entries must be finite");
  }
  if (y.size() != x.rows()) throw InvalidInput("x and y row counts differ");
  if (h_slices < 2) throw InvalidInput("need at least 2 slices");
  if (x.rows() <= h_slices) throw InvalidInput("need n > H observations");
}

Slicing slice_indicators(const Eigen::VectorXd& y, int h, SliceMode mode) {
  const long n = y.size();
  if (h < 2) throw InvalidInput("need at least 2 slices");
  if (n < h) throw InvalidInput("fewer observations than slices");

  std::set<double> distinct(y.data(), y.data() + n);
  if (static_cast<long>(distinct.size()) < h) {
    throw DegenerateSlicing("fewer distinct responses than slices");
  }

  Slicing out;
  out.assignment.assign(n, 0);
  out.counts.assign(h, 0);

  if (mode == SliceMode::EqualCount) {
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0L);
    std::stable_sort(order.begin(), order.end(),
                     [&](long a, long b) { return y[a] < y[b]; });
    const long base = n / h, extra = n % h;
    long pos = 0;
    for (int s = 0; s < h; ++s) {
      const long size = base + (s < extra ? 1 : 0);
      for (long k = 0; k < size; ++k) {
        out.assignment[order[pos++]] = s;
      }
      out.counts[s] = static_cast<int>(size);
    }
  } else {
    const double lo = y.minCoeff(), hi = y.maxCoeff();
    if (!(hi > lo)) throw DegenerateSlicing("response range is empty");
    const double width = (hi - lo) / h;
    for (long i = 0; i < n; ++i) {
      int s = static_cast<int>((y[i] - lo) / width);
      s = std::clamp(s, 0, h - 1);
      out.assignment[i] = s;
      ++out.counts[s];
    }
  }

  out.psi = Eigen::MatrixXd::Zero(n, h);
  for (long i = 0; i < n; ++i) out.psi(i, out.assignment[i]) = 1.0;
  return out;
}

SirMatrices build_matrices_from_indicators(const Eigen::MatrixXd& x,
                                           const Eigen::MatrixXd& psi) {
  const long n = x.rows(), p = x.cols(), h = psi.cols();
  if (psi.rows() != n) throw InvalidInput("x and psi row counts differ");

  const Eigen::RowVectorXd x_bar = x.colwise().mean();
  const Eigen::RowVectorXd psi_bar = psi.colwise().mean();

  SirMatrices out;
  out.n = n;
  out.c_hat = Eigen::MatrixXd::Zero(p, h);
  out.k_centered.reserve(n);
  std::vector<Eigen::MatrixXd> raw;
  raw.reserve(n);
  for (long i = 0; i < n; ++i) {
    Eigen::MatrixXd k = (x.row(i) - x_bar).transpose() * (psi.row(i) - psi_bar);
    out.c_hat += k;
    raw.push_back(std::move(k));
  }
  out.c_hat /= static_cast<double>(n);

  out.v_hat = Eigen::MatrixXd::Zero(p * h, p * h);
  for (long i = 0; i < n; ++i) {
    raw[i] -= out.c_hat;
    const Eigen::VectorXd xi = vec(raw[i]);
    out.v_hat.noalias() += xi * xi.transpose();
    out.k_centered.push_back(std::move(raw[i]));
  }
  out.v_hat /= static_cast<double>(n);
  return out;
}

SirMatrices build_matrices(const SirSample& s, SliceMode mode) {
  Slicing slicing = slice_indicators(s.y, s.h_slices, mode);
  SirMatrices out = build_matrices_from_indicators(s.x, slicing.psi);
  out.slice_assignment = std::move(slicing.assignment);
  return out;
}

SirBootstrap::SirBootstrap(const SirMatrices& m, WeightLaw law, bool transpose)
    : n_(m.n), law_(law) {
  if (m.k_centered.empty()) throw InvalidInput("SirMatrices is empty");
  rows_ = transpose ? m.k_centered[0].cols() : m.k_centered[0].rows();
  cols_ = transpose ? m.k_centered[0].rows() : m.k_centered[0].cols();
  xi_.resize(rows_ * cols_, n_);
  for (long i = 0; i < n_; ++i) {
    xi_.col(i) = transpose ? vec(m.k_centered[i].transpose().eval())
                           : vec(m.k_centered[i]);
  }
}

SirBootstrap::SirBootstrap(const std::vector<Eigen::MatrixXd>& centered,
                           WeightLaw law)
    : n_(static_cast<long>(centered.size())), law_(law) {
  if (centered.empty()) throw InvalidInput("no centered matrices");
  rows_ = centered[0].rows();
  cols_ = centered[0].cols();
  xi_.resize(rows_ * cols_, n_);
  for (long i = 0; i < n_; ++i) xi_.col(i) = vec(centered[i]);
}

SirDraw SirBootstrap::draw_with_weights(const Eigen::VectorXd& w) const {
  if (w.size() != n_) throw InvalidInput("weight vector has wrong length");
  SirDraw d;
  d.weights = w;
  const Eigen::VectorXd sum = xi_ * w;
  d.w_star = linalg::unvec(sum / std::sqrt(static_cast<double>(n_)), rows_,
                           cols_);
  return d;
}

SirDraw SirBootstrap::draw(RngStream& rng) const {
  Eigen::VectorXd w(n_);
  if (law_ == WeightLaw::Normal) {
    for (long i = 0; i < n_; ++i) w[i] = rng.normal();
  } else {
    for (long i = 0; i < n_; ++i) w[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  return draw_with_weights(w);
}

Eigen::MatrixXd SirBootstrap::gamma_star(const SirDraw& d) const {
  if (d.weights.size() != n_) {
    throw InvalidInput("draw does not carry the bootstrap weights");
  }
  Eigen::MatrixXd z = xi_ * d.weights.asDiagonal();   // col i = w_i xi_i
  const Eigen::VectorXd mean = z.rowwise().mean();
  z.colwise() -= mean;
  return (z * z.transpose()) / static_cast<double>(n_);
}

SirBootstrap w_star_sampler(const SirMatrices& m, WeightLaw law) {
  return SirBootstrap(m, law, /*transpose=*/false);
}

Eigen::MatrixXd slice_contrasts(int h) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(h, h - 1);
  for (int j = 1; j < h; ++j) {
    const double norm = std::sqrt(static_cast<double>(j) * (j + 1));
    for (int i = 0; i < j; ++i) t(i, j - 1) = 1.0 / norm;
    t(j, j - 1) = -static_cast<double>(j) / norm;
  }
  return t;
}

SirTestInputs make_test_inputs(const SirMatrices& m, WeightLaw law) {
  const long h = m.c_hat.cols();
  if (m.k_centered.empty()) throw InvalidInput("SirMatrices is empty");

  // One-hot indicators give every K zero row sums, so the covariance has
  // the p row-sum directions in its kernel. Detect that and restrict to
  // slice contrasts; the statistics keep their values and the restricted
  // covariance is generically full rank.
  double scale = 0.0;
  double worst_row_sum = 0.0;
  for (const Eigen::MatrixXd& k : m.k_centered) {
    scale = std::max(scale, k.cwiseAbs().maxCoeff());
    worst_row_sum = std::max(
        worst_row_sum, (k * Eigen::VectorXd::Ones(h)).cwiseAbs().maxCoeff());
  }
  const bool reduce = h >= 3 && worst_row_sum <= 1e-9 * std::max(scale, 1e-30);

  Eigen::MatrixXd c_work = m.c_hat;
  std::vector<Eigen::MatrixXd> k_work = m.k_centered;
  if (reduce) {
    const Eigen::MatrixXd t = slice_contrasts(static_cast<int>(h));
    c_work = c_work * t;
    for (Eigen::MatrixXd& k : k_work) k = k * t;
  }
  const bool transpose = c_work.rows() > c_work.cols();
  if (transpose) {
    c_work = c_work.transpose().eval();
    for (Eigen::MatrixXd& k : k_work) k = k.transpose().eval();
  }

  const long d = c_work.size();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(d, d);
  for (const Eigen::MatrixXd& k : k_work) {
    const Eigen::VectorXd xi = vec(k);
    v.noalias() += xi * xi.transpose();
  }
  v /= static_cast<double>(m.n);

  SirBootstrap boot(k_work, law);
  return SirTestInputs{
      linalg::EstimatedMatrix(std::move(c_work), std::move(v), m.n),
      std::move(boot), transpose, reduce};
}

Model parse_model(const std::string& name) {
  if (name == "I" || name == "1") return Model::I;
  if (name == "Ia" || name == "1a") return Model::Ia;
  if (name == "Ib" || name == "1b") return Model::Ib;
  if (name == "II" || name == "2") return Model::II;
  if (name == "III" || name == "3") return Model::III;
  throw InvalidInput("unknown model '" + name + "'");
}

const char* to_string(Model model) {
  switch (model) {
    case Model::I: return "I";
    case Model::Ia: return "Ia";
    case Model::Ib: return "Ib";
    case Model::II: return "II";
    case Model::III: return "III";
  }
  return "?";
}

SirSample generate(const ModelSpec& spec) {
  if (spec.n <= spec.h) throw InvalidInput("need n > H");
  if (spec.p < 2) throw InvalidInput("models need p >= 2 predictors");
  RngStream rng(derive_seed(spec.seed, {kTagSample}));

  Eigen::MatrixXd x(spec.n, spec.p);
  Eigen::VectorXd y(spec.n);
  for (long i = 0; i < spec.n; ++i) {
    bool mixture_high = false;
    if (spec.id == Model::Ib) mixture_high = rng.bernoulli(0.5);
    for (int j = 0; j < spec.p; ++j) {
      switch (spec.id) {
        case Model::Ia:
          x(i, j) = rng.student_t(5.0);
          break;
        case Model::Ib:
          x(i, j) = mixture_high ? 0.1 * (rng.normal() + (j == 0 ? 6.0 : 0.0))
                                 : rng.normal();
          break;
        default:
          x(i, j) = rng.normal();
          break;
      }
    }
    const double e = rng.normal();
    switch (spec.id) {
      case Model::I:
      case Model::Ia:
      case Model::Ib:
        y[i] = x(i, 0) + 0.1 * e;
        break;
      case Model::II:
        y[i] = std::tanh(x(i, 0)) + 0.1 * e;
        break;
      case Model::III: {
        const double d = x(i, 1) + 2.0;
        y[i] = x(i, 0) / (0.5 + d * d) + e;
        break;
      }
    }
  }
  return SirSample(std::move(x), std::move(y), spec.h);
}

SirSample load_csv(const std::string& path, int h_slices) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty file: " + path);
  const long ncol = 1 + std::count(line.begin(), line.end(), ',');
  if (ncol < 2) {
    throw InvalidInput("need a response column and at least one predictor");
  }

  std::vector<double> values;
  long nrow = 0;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    long col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      // strip surrounding blanks
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cell = (b == std::string::npos) ? "" : cell.substr(b, e - b + 1);
      if (cell.empty()) {
        std::ostringstream msg;
        msg << path << ": missing value at row " << lineno << ", column "
            << col;
        throw InvalidInput(msg.str());
      }
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size() || !std::isfinite(v)) throw std::exception();
        values.push_back(v);
      } catch (...) {
        std::ostringstream msg;
        msg << path << ": malformed value '" << cell << "' at row " << lineno
            << ", column " << col;
        throw InvalidInput(msg.str());
      }
    }
    if (line.back() == ',') {
      std::ostringstream msg;
      msg << path << ": missing value at row " << lineno << ", column "
          << ncol;
      throw InvalidInput(msg.str());
    }
    if (col != ncol) {
      std::ostringstream msg;
      msg << path << ": row " << lineno << " has " << col
          << " columns, expected " << ncol;
      throw InvalidInput(msg.str());
    }
    ++nrow;
  }
  if (nrow == 0) throw InvalidInput(path + ": no data rows");

  Eigen::VectorXd y(nrow);
  Eigen::MatrixXd x(nrow, ncol - 1);
  for (long i = 0; i < nrow; ++i) {
    y[i] = values[i * ncol];
    for (long j = 1; j < ncol; ++j) x(i, j - 1) = values[i * ncol + j];
  }
  return SirSample(std::move(x), std::move(y), h_slices);
}

}  // namespace rankforge::sir
