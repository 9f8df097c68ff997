#ifndef CUSAL_BASELINES_HPP
#define CUSAL_BASELINES_HPP

#include "cusal/core.hpp"

#include <optional>

namespace cusal {

enum class QuadraticConstraints { None, Nonnegative, FullyConstrained, NonnegativeL1 };

/// min ||Y - M X||_F^2 (+ lambda * sum_t ||x_t||_1) under one constraint set.
struct QuadraticUnmixProblem {
  ProblemHandle handle;
  QuadraticConstraints constraints = QuadraticConstraints::None;
  double lambda = 0.0;
};

/// Per-pixel ADMM settings for the quadratic baselines.
struct QuadraticAdmmOptions {
  /// Augmented-Lagrangian weight; unset picks 2*sqrt(lmin*lmax) of M^T M.
  std::optional<double> mu;
  /// Relative tolerance on both per-pixel ADMM residuals.
  double tol = 1e-10;
  int max_iters = 20000;
};

struct BaselineDiagnostics {
  Index pixels_at_max_iters = 0;
  int max_iterations_used = 0;
};

/// X_LS = (M^T M)^{-1} M^T Y through a column-pivoted QR of M, one pixel at a
/// time.
AbundanceMatrix solve_ls(const ProblemHandle& handle);

/// Per pixel: min ||y_t - M x_t||^2 s.t. x_t >= 0, 1^T x_t = 1.
AbundanceMatrix solve_fcls(const ProblemHandle& handle,
                           const QuadraticAdmmOptions& options = {},
                           BaselineDiagnostics* diagnostics = nullptr);

/// Per pixel: min ||y_t - M x_t||^2 s.t. x_t >= 0 (no sum-to-one).
AbundanceMatrix solve_nnls(const ProblemHandle& handle,
                           const QuadraticAdmmOptions& options = {},
                           BaselineDiagnostics* diagnostics = nullptr);

/// Per pixel: min ||y_t - M x_t||^2 + lambda ||x_t||_1 s.t. x_t >= 0.
AbundanceMatrix solve_sunsal_sparse(const ProblemHandle& handle, double lambda,
                                    const QuadraticAdmmOptions& options = {},
                                    BaselineDiagnostics* diagnostics = nullptr);

AbundanceMatrix solve(const QuadraticUnmixProblem& problem,
                      const QuadraticAdmmOptions& options = {},
                      BaselineDiagnostics* diagnostics = nullptr);

/// Value of the quadratic objective (with the l1 term when lambda > 0) for
/// one pixel.
double quadratic_objective(const Matrix& M, const Vector& y, const Vector& x,
                           double lambda = 0.0);

}  // namespace cusal

#endif  // CUSAL_BASELINES_HPP
