#include "fatrack/association.hpp"

#include <cmath>
#include <numbers>

#include "fatrack/errors.hpp"

namespace fatrack {
namespace {

struct Pick {
  Eigen::Index track = -1;
  Eigen::Index meas = -1;
  double value = 0.0;
};

// Largest entry over the active rows/columns; strict '>' in row-major scan
// order gives the lexicographic tie-break.
Pick best_entry(const Eigen::MatrixXd& beta, const std::vector<bool>& row_open,
                const std::vector<bool>& col_open) {
  Pick best;
  for (Eigen::Index m = 0; m < beta.rows(); ++m) {
    if (!row_open[m]) continue;
    for (Eigen::Index r = 0; r < beta.cols(); ++r) {
      if (!col_open[r]) continue;
      if (best.track < 0 || beta(m, r) > best.value) {
        best = {m, r, beta(m, r)};
      }
    }
  }
  return best;
}

Assignment empty_assignment(Eigen::Index tracks) {
  Assignment a;
  a.chi.assign(static_cast<std::size_t>(tracks), kUnassigned);
  a.beta_chosen.assign(static_cast<std::size_t>(tracks), 0.0);
  return a;
}

}  // namespace

void AssocConfig::validate() const {
  if (!(B >= 0.0)) throw ConfigError("association constant B must be >= 0");
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("association threshold eta must lie in (0,1)");
}

std::size_t Assignment::assigned_count() const {
  std::size_t n = 0;
  for (int c : chi) n += (c != kUnassigned);
  return n;
}

double kinematic_likelihood(const Eigen::VectorXd& innovation, const Eigen::MatrixXd& S) {
  if (S.rows() != innovation.size() || S.cols() != innovation.size()) {
    throw ConfigError("innovation and covariance dimensions differ");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("innovation covariance is not positive definite");
  }
  const double d = static_cast<double>(innovation.size());
  const double maha = innovation.dot(llt.solve(innovation));
  const auto L = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < S.rows(); ++i) log_det += 2.0 * std::log(L(i, i));
  return std::exp(-0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + maha));
}

double feature_likelihood(std::complex<double> z_f, std::complex<double> x_f, double sigma2) {
  if (!(sigma2 > 0.0)) throw ConfigError("feature variance must be positive");
  const double r2 = std::norm(z_f - x_f);
  return std::exp(-r2 / (2.0 * sigma2)) / std::sqrt(2.0 * std::numbers::pi * sigma2);
}

Eigen::MatrixXd association_probabilities(const LikelihoodTable& C, const AssocConfig& cfg) {
  const Eigen::VectorXd D = C.rowwise().sum();
  const Eigen::RowVectorXd E = C.colwise().sum();
  Eigen::MatrixXd beta(C.rows(), C.cols());
  for (Eigen::Index m = 0; m < C.rows(); ++m) {
    for (Eigen::Index r = 0; r < C.cols(); ++r) {
      const double denom = D(m) + E(r) - C(m, r) + cfg.B;
      beta(m, r) = denom > 0.0 ? C(m, r) / denom : 0.0;
    }
  }
  return beta;
}

Assignment greedy_assign(const Eigen::MatrixXd& beta, double eta) {
  Assignment a = empty_assignment(beta.rows());
  std::vector<bool> row_open(static_cast<std::size_t>(beta.rows()), true);
  std::vector<bool> col_open(static_cast<std::size_t>(beta.cols()), true);
  while (true) {
    const Pick p = best_entry(beta, row_open, col_open);
    if (p.track < 0 || !(p.value >= eta)) break;
    a.chi[static_cast<std::size_t>(p.track)] = static_cast<int>(p.meas);
    a.beta_chosen[static_cast<std::size_t>(p.track)] = p.value;
    row_open[static_cast<std::size_t>(p.track)] = false;
    col_open[static_cast<std::size_t>(p.meas)] = false;
  }
  return a;
}

Assignment nn_jpdaf_assign(const LikelihoodTable& C, const AssocConfig& cfg) {
  if (!cfg.recompute) return greedy_assign(association_probabilities(C, cfg), cfg.eta);

  Assignment a = empty_assignment(C.rows());
  std::vector<bool> row_open(static_cast<std::size_t>(C.rows()), true);
  std::vector<bool> col_open(static_cast<std::size_t>(C.cols()), true);
  Eigen::MatrixXd reduced = C;
  while (true) {
    // Struck rows/columns contribute nothing to the remaining sums.
    const Eigen::MatrixXd beta = association_probabilities(reduced, cfg);
    const Pick p = best_entry(beta, row_open, col_open);
    if (p.track < 0 || !(p.value >= cfg.eta)) break;
    a.chi[static_cast<std::size_t>(p.track)] = static_cast<int>(p.meas);
    a.beta_chosen[static_cast<std::size_t>(p.track)] = p.value;
    row_open[static_cast<std::size_t>(p.track)] = false;
    col_open[static_cast<std::size_t>(p.meas)] = false;
    reduced.row(p.track).setZero();
    reduced.col(p.meas).setZero();
  }
  return a;
}

}  // namespace fatrack
