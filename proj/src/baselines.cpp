#include "cusal/baselines.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace cusal {

namespace {

struct PixelAdmmSetup {
  Matrix inv;        // (2 M^T M + mu I)^{-1}
  Vector inv_ones;   // inv * 1
  double ones_inv_ones = 0.0;
  Matrix twoMt;      // 2 M^T
  double mu = 1.0;
};

PixelAdmmSetup make_setup(const Matrix& M, const QuadraticAdmmOptions& opt) {
  const Index R = M.cols();
  const Matrix gram = M.transpose() * M;
  PixelAdmmSetup s;
  if (opt.mu) {
    s.mu = *opt.mu;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lmax = std::max(eig.eigenvalues().maxCoeff(), 1e-300);
    const double lmin = std::max(eig.eigenvalues().minCoeff(), lmax * 1e-12);
    s.mu = 2.0 * std::sqrt(lmin * lmax);
  }
  if (!(s.mu > 0.0))
    throw Error(ErrorCode::InvalidInput, "ADMM weight mu must be positive");
  const Matrix system = 2.0 * gram + s.mu * Matrix::Identity(R, R);
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularNormalEquations,
                "baseline ADMM system is not positive definite");
  s.inv = llt.solve(Matrix::Identity(R, R));
  s.inv_ones = s.inv * Vector::Ones(R);
  s.ones_inv_ones = s.inv_ones.sum();
  s.twoMt = 2.0 * M.transpose();
  return s;
}

enum class ZStep { Nonnegative, NonnegativeShrink };

// One pixel of SUnSAL-style ADMM: x-update in closed form (optionally with the
// sum-to-one constraint), z = max(0, S_{lambda/mu}(x - d)), d -= x - z.
int solve_pixel(const PixelAdmmSetup& s, const Vector& y, bool sum_to_one,
                double lambda, const QuadraticAdmmOptions& opt, Vector& x,
                Vector& z) {
  const Index R = x.size();
  const Vector rhs0 = s.twoMt * y;
  const double thresh = lambda / s.mu;
  const double tol_p = opt.tol * std::sqrt(static_cast<double>(R));
  const double tol_d = tol_p * std::max(1.0, rhs0.norm());
  Vector d = Vector::Zero(R);
  Vector z_new(R);
  int it = 0;
  for (; it < opt.max_iters; ++it) {
    x.noalias() = s.inv * (rhs0 + s.mu * (z + d));
    if (sum_to_one) x -= s.inv_ones * ((x.sum() - 1.0) / s.ones_inv_ones);
    for (Index r = 0; r < R; ++r) {
      const double v = x[r] - d[r];
      z_new[r] = v > thresh ? v - thresh : 0.0;
    }
    d -= x - z_new;
    const double primal = (x - z_new).norm();
    const double dual = s.mu * (z_new - z).norm();
    z = z_new;
    if (primal <= tol_p && dual <= tol_d) {
      ++it;
      break;
    }
  }
  return it;
}

AbundanceMatrix run_pixelwise(const ProblemHandle& handle, bool sum_to_one,
                              double lambda, const QuadraticAdmmOptions& opt,
                              BaselineDiagnostics* diagnostics) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::InvalidInput, "lambda must be >= 0");
  if (opt.max_iters < 1 || !(opt.tol > 0.0))
    throw Error(ErrorCode::InvalidInput, "invalid baseline ADMM options");
  const Matrix& M = handle.M();
  const Matrix& Y = handle.Y();
  const Index R = M.cols();
  const Index T = Y.cols();
  const PixelAdmmSetup setup = make_setup(M, opt);

  const Matrix X_ls = solve_ls(handle).data();
  Matrix X0 = sum_to_one ? project_columns_to_simplex(X_ls)
                         : Matrix(X_ls.cwiseMax(0.0));
  Matrix out(R, T);
  Index at_cap = 0;
  int most = 0;

#pragma omp parallel for schedule(dynamic, 16) reduction(+ : at_cap) reduction(max : most)
  for (Index t = 0; t < T; ++t) {
    Vector x = X0.col(t);
    Vector z = x;
    const int used = solve_pixel(setup, Y.col(t), sum_to_one, lambda, opt, x, z);
    if (used >= opt.max_iters) ++at_cap;
    most = std::max(most, used);
    if (sum_to_one) {
      const double sum = z.sum();
      if (sum > 0.0)
        z /= sum;
      else
        z = project_columns_to_simplex(x);
    }
    out.col(t) = z;
  }
  if (diagnostics) {
    diagnostics->pixels_at_max_iters = at_cap;
    diagnostics->max_iterations_used = most;
  }
  return AbundanceMatrix(std::move(out), sum_to_one
                                             ? AbundanceTag::FullyConstrained
                                             : AbundanceTag::Nonnegative);
}

}  // namespace

AbundanceMatrix solve_ls(const ProblemHandle& handle) {
  const Matrix& M = handle.M();
  const Matrix& Y = handle.Y();
  Eigen::ColPivHouseholderQR<Matrix> qr(M);
  if (qr.rank() < M.cols())
    throw Error(ErrorCode::SingularNormalEquations,
                "M^T M is singular (rank " + std::to_string(qr.rank()) + " < " +
                    std::to_string(M.cols()) + ")");
  Matrix X(M.cols(), Y.cols());
  // Column-at-a-time so that the result does not depend on how many pixels
  // are solved together.
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < Y.cols(); ++t) {
    Vector y = Y.col(t);
    X.col(t) = qr.solve(y);
  }
  return AbundanceMatrix(std::move(X));
}

AbundanceMatrix solve_fcls(const ProblemHandle& handle,
                           const QuadraticAdmmOptions& options,
                           BaselineDiagnostics* diagnostics) {
  return run_pixelwise(handle, true, 0.0, options, diagnostics);
}

AbundanceMatrix solve_nnls(const ProblemHandle& handle,
                           const QuadraticAdmmOptions& options,
                           BaselineDiagnostics* diagnostics) {
  return run_pixelwise(handle, false, 0.0, options, diagnostics);
}

AbundanceMatrix solve_sunsal_sparse(const ProblemHandle& handle, double lambda,
                                    const QuadraticAdmmOptions& options,
                                    BaselineDiagnostics* diagnostics) {
  return run_pixelwise(handle, false, lambda, options, diagnostics);
}

AbundanceMatrix solve(const QuadraticUnmixProblem& problem,
                      const QuadraticAdmmOptions& options,
                      BaselineDiagnostics* diagnostics) {
  switch (problem.constraints) {
    case QuadraticConstraints::None:
      return solve_ls(problem.handle);
    case QuadraticConstraints::Nonnegative:
      return solve_nnls(problem.handle, options, diagnostics);
    case QuadraticConstraints::FullyConstrained:
      return solve_fcls(problem.handle, options, diagnostics);
    case QuadraticConstraints::NonnegativeL1:
      return solve_sunsal_sparse(problem.handle, problem.lambda, options,
                                 diagnostics);
  }
  throw Error(ErrorCode::InvalidInput, "unknown constraint set");
}

double quadratic_objective(const Matrix& M, const Vector& y, const Vector& x,
                           double lambda) {
  return (y - M * x).squaredNorm() + lambda * x.cwiseAbs().sum();
}

}  // namespace cusal
