#include "cusal/solvers.hpp"

#include <cmath>

namespace cusal {

StopThresholds stop_thresholds(const SolverConfig& config, Index n) {
  const double fallback = std::sqrt(static_cast<double>(n)) * 1e-5;
  return {config.eps_primal.value_or(fallback),
          config.eps_dual.value_or(fallback)};
}

TerminationDecision stop_check(const AdmmState& prev, const AdmmState& next,
                               const SolverConfig& config) {
  const StopThresholds eps = stop_thresholds(config, next.x.size());
  const double primal = (next.x - next.z).norm();
  const double dual = config.rho * (next.z - prev.z).norm();
  if (primal <= eps.primal && dual <= eps.dual)
    return TerminationDecision::ResidualsSmall;
  // A zero previous residual (x == z, e.g. the initial state) is no baseline
  // to increase from.
  const double prev_primal = (prev.x - prev.z).norm();
  if (prev_primal > 0.0 && primal > prev_primal)
    return TerminationDecision::PrimalIncreased;
  if (next.k >= config.max_outer_iters) return TerminationDecision::MaxIters;
  return TerminationDecision::Continue;
}

AdmmResult admm_generic(const XMinimizer& f_solver, const ZProx& g_prox,
                        const SolverConfig& config, AdmmState init,
                        const AdmmObserver& observer) {
  config.validate();
  const Index n = init.x.size();
  if (init.z.size() != n || init.u.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "ADMM state vectors differ in length");
  if (!init.x.allFinite() || !init.z.allFinite() || !init.u.allFinite())
    throw Error(ErrorCode::NonFiniteData, "ADMM initial state is not finite");

  AdmmResult result;
  SolverReport& report = result.report;
  report.sigma_used = config.sigma;
  const double rho = config.rho;

  AdmmState prev = std::move(init);
  AdmmState next;
  int increases = 0;
  Vector target(n);
  Vector v(n);
  for (;;) {
    next.x = prev.x;
    target = prev.z + prev.u;
    const double f = f_solver(target, rho, next.x);
    if (!next.x.allFinite() || !std::isfinite(f))
      throw Error(ErrorCode::InnerSolverFailure,
                  "x-update produced non-finite values at iteration " +
                      std::to_string(prev.k + 1));
    v = next.x - prev.u;
    next.z.resize(n);
    g_prox(v, rho, next.z);
    if (!next.z.allFinite())
      throw Error(ErrorCode::NonFiniteIterate, "z-update produced non-finite values");
    next.u = prev.u - (next.x - next.z);
    next.k = prev.k + 1;

    report.primal_residuals.push_back((next.x - next.z).norm());
    report.dual_residuals.push_back(rho * (next.z - prev.z).norm());
    report.objective_trace.push_back(f);
    report.iterations_run = next.k;
    if (observer) observer(prev, next);

    TerminationDecision decision = stop_check(prev, next, config);
    if (decision == TerminationDecision::PrimalIncreased) {
      if (++increases < config.divergence_patience)
        decision = next.k >= config.max_outer_iters ? TerminationDecision::MaxIters
                                                    : TerminationDecision::Continue;
    } else {
      increases = 0;
    }
    std::swap(prev, next);
    if (decision == TerminationDecision::Continue) continue;
    switch (decision) {
      case TerminationDecision::ResidualsSmall:
        report.termination_reason = TerminationReason::ResidualsSmall;
        break;
      case TerminationDecision::PrimalIncreased:
        report.termination_reason = TerminationReason::PrimalIncreased;
        break;
      default:
        report.termination_reason = TerminationReason::MaxIters;
        break;
    }
    break;
  }
  result.state = std::move(prev);
  return result;
}

InnerResult inner_gradient_descent(const ValueAndGradient& fn, Vector x_init,
                                   double eta, int max_inner_iters,
                                   double inner_tol, InnerStepRule rule) {
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw Error(ErrorCode::InvalidInput, "inner step eta must be > 0");
  if (!x_init.allFinite())
    throw Error(ErrorCode::NonFiniteIterate, "inner start point is not finite");
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 60;

  InnerResult res;
  res.x = std::move(x_init);
  Vector grad(res.x.size());
  Vector trial(res.x.size());
  Vector trial_grad(res.x.size());
  res.value = fn(res.x, grad);
  if (!std::isfinite(res.value) || !grad.allFinite())
    throw Error(ErrorCode::NonFiniteIterate, "inner objective is not finite at start");
  res.trace.push_back(res.value);

  for (;;) {
    const double gnorm2 = grad.squaredNorm();
    res.grad_norm = std::sqrt(gnorm2);
    if (res.grad_norm <= inner_tol * (1.0 + res.x.norm())) {
      res.converged = true;
      break;
    }
    if (res.iterations >= max_inner_iters) break;

    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      trial = res.x - eta * grad;
      if (!trial.allFinite())
        throw Error(ErrorCode::NonFiniteIterate, "inner iterate left the finite range");
      const double f = fn(trial, trial_grad);
      if (std::isfinite(f) && f <= res.value - kArmijo * eta * gnorm2) {
        if (rule == InnerStepRule::BarzilaiBorwein) {
          const double sy = -eta * grad.dot(trial_grad - grad);
          if (sy > 0.0) {
            const double bb = eta * eta * gnorm2 / sy;
            if (std::isfinite(bb)) eta = bb;
          }
        }
        res.x.swap(trial);
        grad.swap(trial_grad);
        res.value = f;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    // No decrease is representable at this point: treat as stationary.
    if (!accepted) break;
    ++res.iterations;
    res.trace.push_back(res.value);
  }
  res.eta = eta;
  return res;
}

}  // namespace cusal
