#include "fatrack/atomic_admm.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "fatrack/errors.hpp"

namespace fatrack {
namespace {

// Which x-update formula applies to each time index.
enum class Region { kObservedPrior, kMissedPrior, kObserved, kMissed };

struct Layout {
  std::vector<Region> region;
  std::vector<int> slot;  // position within omega, or -1
};

Layout make_layout(const DenoiseProblem& prob) {
  const int n = prob.n();
  const int a = prob.prior ? static_cast<int>(prob.prior->x_bar.size()) : 0;
  Layout l;
  l.region.resize(static_cast<std::size_t>(n));
  l.slot.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t j = 0; j < prob.pattern.alpha(); ++j) {
    l.slot[static_cast<std::size_t>(prob.pattern.omega[j])] = static_cast<int>(j);
  }
  for (int t = 0; t < n; ++t) {
    const bool observed = l.slot[static_cast<std::size_t>(t)] >= 0;
    const bool in_xi = t < a;
    l.region[static_cast<std::size_t>(t)] =
        in_xi ? (observed ? Region::kObservedPrior : Region::kMissedPrior)
              : (observed ? Region::kObserved : Region::kMissed);
  }
  return l;
}

AdmmState step_with(const AdmmState& s, const DenoiseProblem& prob, const Layout& layout,
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>& eig) {
  const int n = prob.n();
  const double rho = s.rho;
  const double zeta = prob.prior ? prob.prior->zeta : 0.0;
  AdmmState out;
  out.rho = rho;
  out.iter = s.iter + 1;

  const auto psi1 = s.Psi.col(n).head(n);
  const auto ups1 = s.Upsilon.col(n).head(n);

  out.x.resize(n);
  for (int t = 0; t < n; ++t) {
    const int j = layout.slot[static_cast<std::size_t>(t)];
    const cplx pull = 2.0 * rho * psi1(t) + 2.0 * ups1(t);
    switch (layout.region[static_cast<std::size_t>(t)]) {
      case Region::kObservedPrior:
        out.x(t) = (prob.z_tilde(j) - s.e(j) + zeta * prob.prior->x_bar(t) + pull) /
                   (2.0 * rho + zeta + 1.0);
        break;
      case Region::kMissedPrior:
        out.x(t) = (zeta * prob.prior->x_bar(t) + pull) / (2.0 * rho + zeta);
        break;
      case Region::kObserved:
        out.x(t) = (prob.z_tilde(j) - s.e(j) + pull) / (2.0 * rho + 1.0);
        break;
      case Region::kMissed:
        out.x(t) = psi1(t) + ups1(t) / rho;
        break;
    }
  }

  out.theta = s.Psi(n, n).real() + (s.Upsilon(n, n).real() - 0.5 * prob.gamma) / rho;

  const Eigen::MatrixXcd M = s.Psi.topLeftCorner(n, n) + s.Upsilon.topLeftCorner(n, n) / rho;
  out.u.resize(n);
  for (int j = 0; j < n; ++j) out.u(j) = subdiag_trace(M, j) / static_cast<double>(n - j);
  out.u(0) = out.u(0).real() - prob.gamma / (2.0 * n * rho);

  Eigen::VectorXcd resid(static_cast<Eigen::Index>(prob.pattern.alpha()));
  for (std::size_t j = 0; j < prob.pattern.alpha(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    resid(jj) = prob.z_tilde(jj) - s.x(prob.pattern.omega[j]);
  }
  out.e = prox_l1(resid, prob.lambda);

  const Eigen::MatrixXcd W = sdp_block(out.u, out.x, out.theta);
  Eigen::MatrixXcd V = W - s.Upsilon / rho;
  V = (0.5 * (V + V.adjoint())).eval();
  eig.compute(V);
  if (eig.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  const Eigen::VectorXd w = eig.eigenvalues().cwiseMax(0.0);
  out.Psi = eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().adjoint();
  out.Upsilon = s.Upsilon + rho * (out.Psi - W);
  return out;
}

}  // namespace

void DenoiseProblem::validate() const {
  pattern.validate();
  if (pattern.n < 2) throw ConfigError("denoising needs a batch length >= 2");
  if (pattern.alpha() == 0) throw ConfigError("denoising needs at least one observed sample");
  if (static_cast<std::size_t>(z_tilde.size()) != pattern.alpha()) {
    throw ConfigError("z_tilde length " + std::to_string(z_tilde.size()) + " differs from |omega| " +
                      std::to_string(pattern.alpha()));
  }
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (prior) {
    if (prior->x_bar.size() < 1 || prior->x_bar.size() > pattern.n) {
      throw ConfigError("overlap prior length must lie in [1, N]");
    }
    if (!(prior->zeta > 0.0)) throw ConfigError("zeta must be positive");
  }
}

AdmmState AdmmState::zeros(int n, int alpha, double rho) {
  AdmmState s;
  s.x = Eigen::VectorXcd::Zero(n);
  s.e = Eigen::VectorXcd::Zero(alpha);
  s.u = Eigen::VectorXcd::Zero(n);
  s.Psi = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  s.Upsilon = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  s.rho = rho;
  return s;
}

void AdmmOptions::validate() const {
  if (!(rho > 0.0)) throw ConfigError("ADMM rho must be positive");
  if (max_iter < 1) throw ConfigError("ADMM max_iter must be >= 1");
  if (!(tol >= 0.0)) throw ConfigError("ADMM tol must be >= 0");
  if (!(outlier_threshold > 0.0)) throw ConfigError("outlier threshold must be positive");
}

Eigen::VectorXcd DenoiseSolution::certificate() const {
  return g_hat ? Eigen::VectorXcd(q_hat + *g_hat) : q_hat;
}

Eigen::MatrixXcd toeplitz_from(const Eigen::VectorXcd& u) {
  const Eigen::Index n = u.size();
  Eigen::MatrixXcd T(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    T(j, j) = u(0).real();
    for (Eigen::Index k = 0; k < j; ++k) {
      T(j, k) = u(j - k);
      T(k, j) = std::conj(u(j - k));
    }
  }
  return T;
}

std::complex<double> subdiag_trace(const Eigen::MatrixXcd& M, int j) {
  if (M.rows() != M.cols()) throw ConfigError("subdiag_trace needs a square matrix");
  if (j < 0 || j >= M.rows()) throw ConfigError("subdiagonal index out of range");
  cplx s = 0.0;
  for (Eigen::Index k = 0; k + j < M.rows(); ++k) s += M(k + j, k);
  return s;
}

Eigen::VectorXcd prox_l1(const Eigen::VectorXcd& v, double lam) {
  if (!(lam >= 0.0)) throw ConfigError("prox_l1 threshold must be >= 0");
  Eigen::VectorXcd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    out(i) = a > lam ? (a - lam) / a * v(i) : cplx(0.0);
  }
  return out;
}

Eigen::MatrixXcd psd_project(const Eigen::MatrixXcd& M) {
  if (M.rows() != M.cols()) throw ConfigError("psd_project needs a square matrix");
  const Eigen::MatrixXcd H = 0.5 * (M + M.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(H);
  if (eig.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  const Eigen::VectorXd w = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().adjoint();
}

Eigen::MatrixXcd sdp_block(const Eigen::VectorXcd& u, const Eigen::VectorXcd& x, double theta) {
  if (u.size() != x.size()) throw ConfigError("u and x lengths differ");
  const Eigen::Index n = u.size();
  Eigen::MatrixXcd W(n + 1, n + 1);
  W.topLeftCorner(n, n) = toeplitz_from(u);
  W.col(n).head(n) = x;
  W.row(n).head(n) = x.adjoint();
  W(n, n) = theta;
  return W;
}

AdmmState admm_step(const AdmmState& state, const DenoiseProblem& prob) {
  prob.validate();
  const int n = prob.n();
  if (state.x.size() != n || state.u.size() != n ||
      static_cast<std::size_t>(state.e.size()) != prob.pattern.alpha() ||
      state.Psi.rows() != n + 1 || state.Upsilon.rows() != n + 1) {
    throw ConfigError("ADMM state dimensions do not match the problem");
  }
  if (!(state.rho > 0.0)) throw ConfigError("ADMM rho must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(n + 1);
  return step_with(state, prob, make_layout(prob), eig);
}

double denoise_objective(const DenoiseProblem& prob, const Eigen::VectorXcd& u, double theta,
                         const Eigen::VectorXcd& x, const Eigen::VectorXcd& e) {
  const Eigen::VectorXcd r = prob.z_tilde - restrict(x, prob.pattern) - e;
  double obj = 0.5 * prob.gamma * (u(0).real() + theta) + prob.lambda * e.cwiseAbs().sum() +
               0.5 * r.squaredNorm();
  if (prob.prior) {
    const auto a = prob.prior->x_bar.size();
    obj += 0.5 * prob.prior->zeta * (x.head(a) - prob.prior->x_bar).squaredNorm();
  }
  return obj;
}

DenoiseSolution solve(const DenoiseProblem& prob, const AdmmOptions& opts) {
  prob.validate();
  opts.validate();
  const int n = prob.n();
  const Layout layout = make_layout(prob);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(n + 1);
  AdmmState s = AdmmState::zeros(n, static_cast<int>(prob.pattern.alpha()), opts.rho);

  const double bound = opts.tol * (n + 1);
  DenoiseSolution sol;
  while (s.iter < opts.max_iter) {
    AdmmState next = step_with(s, prob, layout, eig);
    const double primal = (next.Psi - sdp_block(next.u, next.x, next.theta)).norm();
    const double dual = opts.rho * (next.Psi - s.Psi).norm();
    s = std::move(next);
    sol.primal_residual = primal;
    if (primal <= bound && dual <= bound) {
      sol.converged = true;
      break;
    }
  }

  sol.x_hat = s.x;
  sol.e_hat = s.e;
  sol.u = s.u;
  sol.theta = s.theta;
  sol.iters = s.iter;
  sol.objective = denoise_objective(prob, s.u, s.theta, s.x, s.e);

  const Eigen::VectorXcd cert = -2.0 * s.Upsilon.col(n).head(n);
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(n);
  if (prob.prior) {
    const auto a = prob.prior->x_bar.size();
    g.head(a) = prob.prior->zeta * (prob.prior->x_bar - s.x.head(a));
    sol.g_hat = g;
  }
  sol.q_hat = Eigen::VectorXcd::Zero(n);
  for (int t : prob.pattern.omega) sol.q_hat(t) = cert(t) - g(t);

  for (Eigen::Index j = 0; j < s.e.size(); ++j) {
    sol.misassoc_count += std::abs(s.e(j)) > opts.outlier_threshold * prob.lambda;
  }
  return sol;
}

}  // namespace fatrack
