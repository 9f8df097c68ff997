#include "cusal/solvers.hpp"

#include "cusal/baselines.hpp"

#include <cmath>
#include <limits>

namespace cusal {

const char* to_string(AttemptOutcome outcome) {
  switch (outcome) {
    case AttemptOutcome::Converged: return "Converged";
    case AttemptOutcome::Diverged: return "Diverged";
    case AttemptOutcome::RatioTooLarge: return "RatioTooLarge";
  }
  return "Unknown";
}

namespace {

double ls_residual_norm(const ProblemHandle& handle) {
  const Matrix X_ls = solve_ls(handle).data();
  return (handle.Y() - handle.M() * X_ls).norm();
}

}  // namespace

namespace {

double ratio_denominator(const ProblemHandle& handle) {
  // A consistent system has no LS residual to compare against; measure the
  // fit against a roundoff-level floor instead.
  return std::max(ls_residual_norm(handle), 1e-10 * std::max(1.0, handle.Y().norm()));
}

double ratio_with(const ProblemHandle& handle, const Matrix& X, double denominator) {
  return (handle.Y() - handle.M() * X).norm() / denominator;
}

}  // namespace

double residual_ratio(const ProblemHandle& handle, const Matrix& X) {
  return ratio_with(handle, X, ratio_denominator(handle));
}

double sigma_floor(const ProblemHandle& handle) {
  const double rms = handle.Y().norm() /
                     std::sqrt(static_cast<double>(handle.bands() * handle.pixels()));
  return 1e-6 * std::max(1.0, rms);
}

double initial_sigma(const ProblemHandle& handle) {
  const double res = ls_residual_norm(handle);
  const double R = static_cast<double>(handle.endmembers());
  const double L = static_cast<double>(handle.bands());
  return std::sqrt(R / (8.0 * L)) * res;
}

TuningResult tune_sigma(const ProblemHandle& handle, CusalVariant variant,
                        const SolverConfig& config,
                        const AdmmObserver& observer,
                        const std::optional<Matrix>& X0) {
  SolverConfig run_config = config;
  const Matrix start = X0 ? *X0
                          : (variant == CusalVariant::FullyConstrained
                                 ? solve_fcls(handle).data()
                                 : solve_nnls(handle).data());
  run_config.sigma_auto = false;

  const double denominator = ratio_denominator(handle);

  TuningTrace trace;
  trace.sigma0 = initial_sigma(handle);
  const double sigma0 = std::max(trace.sigma0, sigma_floor(handle));
  double sigma = sigma0;
  int p = 1;

  for (int attempt = 0; attempt < kMaxTuningAttempts; ++attempt) {
    run_config.sigma = sigma;
    UnmixResult res = variant == CusalVariant::FullyConstrained
                          ? cusal_fc(handle, run_config, start, observer)
                          : cusal_sp(handle, run_config, start, observer);
    const TerminationReason term = res.report.termination_reason;
    if (term == TerminationReason::PrimalIncreased) {
      trace.attempts.push_back({sigma, AttemptOutcome::Diverged,
                                std::numeric_limits<double>::quiet_NaN(), term});
      if (sigma > kOverestimateFactor * sigma0) {
        ++p;
        sigma = sigma0 / p;
      } else {
        sigma *= kSigmaGrowth;
      }
      continue;
    }
    const double ratio = ratio_with(handle, res.X.data(), denominator);
    if (ratio < kAcceptRatio) {
      trace.attempts.push_back({sigma, AttemptOutcome::Converged, ratio, term});
      trace.p = p;
      trace.sigma_final = sigma;
      res.report.sigma_used = sigma;
      return TuningResult{sigma, std::move(trace), std::move(res)};
    }
    trace.attempts.push_back({sigma, AttemptOutcome::RatioTooLarge, ratio, term});
    sigma *= kSigmaGrowth;
  }
  throw Error(ErrorCode::TuningFailed,
              "bandwidth tuning did not settle within " +
                  std::to_string(kMaxTuningAttempts) + " attempts (last sigma " +
                  std::to_string(sigma) + ")");
}

}  // namespace cusal
