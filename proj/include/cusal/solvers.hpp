#ifndef CUSAL_SOLVERS_HPP
#define CUSAL_SOLVERS_HPP

#include "cusal/core.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace cusal {

/// Scaled-form ADMM iterate for the splitting x = z (A = -I, B = I, c = 0).
/// Vectors stack the pixel columns: x = [x_1; ...; x_T].
struct AdmmState {
  Vector x;
  Vector z;
  Vector u;
  int k = 0;
};

enum class TerminationDecision { Continue, ResidualsSmall, PrimalIncreased, MaxIters };

struct StopThresholds {
  double primal;
  double dual;
};

/// sqrt(n) * 1e-5 for an n-dimensional iterate, unless overridden in config.
StopThresholds stop_thresholds(const SolverConfig& config, Index n);

/// Three-fold stopping rule, precedence ResidualsSmall > PrimalIncreased >
/// MaxIters. The primal-increase test is skipped when the previous primal
/// residual is exactly zero (e.g. the initial state, where x == z).
TerminationDecision stop_check(const AdmmState& prev, const AdmmState& next,
                               const SolverConfig& config);

/// Solves argmin_x f(x) + rho/2 ||x - target||^2 in place (x holds the warm
/// start on entry) and returns f at the new x.
using XMinimizer =
    std::function<double(const Vector& target, double rho, Vector& x)>;

/// Writes argmin_z g(z) + rho/2 ||z - v||^2 into z.
using ZProx = std::function<void(const Vector& v, double rho, Vector& z)>;

/// Called once per outer iteration with the states before and after it.
using AdmmObserver =
    std::function<void(const AdmmState& prev, const AdmmState& next)>;

struct AdmmResult {
  AdmmState state;
  SolverReport report;
};

AdmmResult admm_generic(const XMinimizer& f_solver, const ZProx& g_prox,
                        const SolverConfig& config, AdmmState init,
                        const AdmmObserver& observer = {});

/// Value and gradient of a smooth objective; returns the value.
using ValueAndGradient = std::function<double(const Vector& x, Vector& grad)>;

struct InnerResult {
  Vector x;
  double value = 0.0;
  double grad_norm = 0.0;
  double eta = 0.0;      ///< step in use when the loop stopped
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  ///< value after each accepted step, starting at x_init
};

/// Gradient descent x <- x - eta grad(x) with Armijo backtracking: a step
/// that does not decrease the objective by at least 1e-4 * eta * ||grad||^2 is
/// retried with eta halved. Stops when ||grad|| <= inner_tol * (1 + ||x||) or
/// after max_inner_iters accepted steps.
InnerResult inner_gradient_descent(const ValueAndGradient& fn, Vector x_init,
                                   double eta, int max_inner_iters,
                                   double inner_tol,
                                   InnerStepRule rule = InnerStepRule::Fixed);

struct UnmixResult {
  AbundanceMatrix X;
  SolverReport report;
  AdmmState state;
};

/// Default inner step when config.eta is unset.
double default_eta(const Matrix& M, double sigma, double rho, Index coupling);

/// Correntropy unmixing with nonnegativity and sum-to-one. When
/// config.sigma_auto is set the bandwidth is chosen by tune_sigma first.
/// X0 defaults to the FCLS solution.
UnmixResult cusal_fc(const ProblemHandle& handle, const SolverConfig& config,
                     const std::optional<Matrix>& X0 = std::nullopt,
                     const AdmmObserver& observer = {});

/// Correntropy unmixing with nonnegativity and an l1 penalty config.lambda.
/// X0 defaults to the nonnegative least-squares solution.
UnmixResult cusal_sp(const ProblemHandle& handle, const SolverConfig& config,
                     const std::optional<Matrix>& X0 = std::nullopt,
                     const AdmmObserver& observer = {});

enum class CusalVariant { FullyConstrained, Sparse };

enum class AttemptOutcome { Converged, Diverged, RatioTooLarge };
const char* to_string(AttemptOutcome outcome);

struct TuningAttempt {
  double sigma;
  AttemptOutcome outcome;
  double ratio;  ///< ||Y - M X||_F / ||Y - M X_LS||_F (NaN when diverged)
  TerminationReason termination;
};

struct TuningTrace {
  double sigma0 = 0.0;  ///< value from the LS residual, before flooring
  std::vector<TuningAttempt> attempts;
  int p = 1;
  double sigma_final = 0.0;
};

struct TuningResult {
  double sigma;
  TuningTrace trace;
  UnmixResult solution;
};

inline constexpr int kMaxTuningAttempts = 60;
inline constexpr double kSigmaGrowth = 1.2;
inline constexpr double kAcceptRatio = 2.0;
inline constexpr double kOverestimateFactor = 1000.0;

/// ||Y - M X||_F / ||Y - M X_LS||_F, the tuner's acceptance statistic. The
/// denominator is floored at 1e-10 * max(1, ||Y||_F) for consistent systems.
double residual_ratio(const ProblemHandle& handle, const Matrix& X);

/// sigma0^2 = R / (8 L) * ||Y - M X_LS||_F^2.
double initial_sigma(const ProblemHandle& handle);

/// 1e-6 * max(1, ||Y||_F / sqrt(L T)).
double sigma_floor(const ProblemHandle& handle);

/// Bandwidth search: start at sigma0; grow by 1.2 while the converged
/// solution fits much worse than LS; on divergence grow by 1.2, or restart
/// at sigma0 / p once sigma exceeds 1000 sigma0. Throws TuningFailed after
/// kMaxTuningAttempts runs. Every attempt starts from X0 (same default as
/// the solver).
TuningResult tune_sigma(const ProblemHandle& handle, CusalVariant variant,
                        const SolverConfig& config,
                        const AdmmObserver& observer = {},
                        const std::optional<Matrix>& X0 = std::nullopt);

}  // namespace cusal

#endif  // CUSAL_SOLVERS_HPP
