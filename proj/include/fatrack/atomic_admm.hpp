#pragma once

#include <optional>

#include <Eigen/Dense>

#include "fatrack/feature_signal.hpp"

namespace fatrack {

/// Previous-batch feature estimate over the overlap Xi = {0..A-1}, A = x_bar.size().
struct OverlapPrior {
  Eigen::VectorXcd x_bar;
  double zeta = 1.0;
};

/// min  gamma ||x||_A + lambda ||e||_1 + 1/2 ||z - x(omega) - e||^2
///      [+ zeta/2 ||x(Xi) - x_bar||^2]
struct DenoiseProblem {
  Eigen::VectorXcd z_tilde;  // length alpha
  ObservationPattern pattern;
  double gamma = 1.0;
  double lambda = 1.0;
  std::optional<OverlapPrior> prior;

  int n() const { return pattern.n; }
  void validate() const;
};

struct AdmmState {
  Eigen::VectorXcd x;        // N
  Eigen::VectorXcd e;        // alpha
  Eigen::VectorXcd u;        // N, u(0) real
  double theta = 0.0;
  Eigen::MatrixXcd Psi;      // (N+1)x(N+1)
  Eigen::MatrixXcd Upsilon;  // (N+1)x(N+1)
  double rho = 0.1;
  int iter = 0;

  static AdmmState zeros(int n, int alpha, double rho);
};

struct AdmmOptions {
  double rho = 0.1;
  int max_iter = 500;
  double tol = 1e-6;               // residuals compared against tol * (N+1)
  double outlier_threshold = 0.1;  // |e_j| > outlier_threshold * lambda counts as a mis-association

  void validate() const;
};

struct DenoiseSolution {
  Eigen::VectorXcd x_hat;
  Eigen::VectorXcd e_hat;
  Eigen::VectorXcd q_hat;                 // N, zero off omega
  std::optional<Eigen::VectorXcd> g_hat;  // N, zero off Xi (prior problems only)
  Eigen::VectorXcd u;
  double theta = 0.0;
  double objective = 0.0;
  int misassoc_count = 0;
  int iters = 0;
  bool converged = false;
  double primal_residual = 0.0;

  /// q_hat + g_hat: the vector whose dual polynomial localizes frequencies.
  Eigen::VectorXcd certificate() const;

  /// (u(0) + theta) / 2, the SDP value of ||x_hat||_A at convergence.
  double atomic_norm() const { return 0.5 * (u(0).real() + theta); }
};

/// T(j,k) = u(j-k) for j >= k, conj(u(k-j)) otherwise; Im u(0) is ignored.
Eigen::MatrixXcd toeplitz_from(const Eigen::VectorXcd& u);

/// Sum of M(k+j, k) over k.
std::complex<double> subdiag_trace(const Eigen::MatrixXcd& M, int j);

/// Complex soft threshold: (|v|-lam) v/|v| where |v| > lam, else 0.
Eigen::VectorXcd prox_l1(const Eigen::VectorXcd& v, double lam);

/// Nearest Hermitian PSD matrix in Frobenius norm. The input is
/// symmetrized first.
Eigen::MatrixXcd psd_project(const Eigen::MatrixXcd& M);

/// [[Toep(u), x], [x^H, theta]]
Eigen::MatrixXcd sdp_block(const Eigen::VectorXcd& u, const Eigen::VectorXcd& x, double theta);

/// One ADMM sweep: x, theta, u, e, Psi, Upsilon in that order.
AdmmState admm_step(const AdmmState& state, const DenoiseProblem& prob);

/// Objective value of prob at (u, theta, x, e).
double denoise_objective(const DenoiseProblem& prob, const Eigen::VectorXcd& u, double theta,
                         const Eigen::VectorXcd& x, const Eigen::VectorXcd& e);

/// ADMM from a zero start. Stops when both the primal residual
/// ||Psi - W||_F and the dual residual rho ||Psi - Psi_prev||_F fall below
/// tol * (N+1), or after max_iter sweeps (converged = false, last iterate
/// returned).
DenoiseSolution solve(const DenoiseProblem& prob, const AdmmOptions& opts = {});

}  // namespace fatrack
