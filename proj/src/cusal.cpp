#include "cusal/solvers.hpp"

#include "cusal/baselines.hpp"
#include "cusal/correntropy.hpp"

#include <cmath>

namespace cusal {

namespace {

void check_start(const ProblemHandle& handle, const Matrix& X0) {
  if (X0.rows() != handle.endmembers() || X0.cols() != handle.pixels())
    throw Error(ErrorCode::DimensionMismatch, "initial abundances have the wrong shape");
  if (!X0.allFinite())
    throw Error(ErrorCode::NonFiniteData, "initial abundances are not finite");
}

AdmmState initial_state(const Matrix& X0) {
  AdmmState s;
  s.x = Eigen::Map<const Vector>(X0.data(), X0.size());
  s.z = s.x;
  s.u = Vector::Zero(s.x.size());
  return s;
}

// Sum-to-one-eliminated x-update: gradient descent on f1(xbar) + phi(xbar),
// where phi(xbar) = rho/2 ||x(xbar) - target||^2 and x(xbar) appends
// 1 - sum(xbar) as the last abundance of each pixel.
class ReducedXUpdate {
 public:
  ReducedXUpdate(const ProblemHandle& handle, const SolverConfig& config)
      : model_(CorrentropyModel::reduced(handle)),
        R_(handle.endmembers()),
        T_(handle.pixels()),
        sigma_(config.sigma),
        eta_(config.eta.value_or(
            default_eta(model_.M(), config.sigma, config.rho, R_))),
        max_inner_(config.max_inner_iters),
        inner_tol_(config.inner_tol),
        step_rule_(config.inner_step),
        xbar_(R_ - 1, T_),
        grad_f1_(R_ - 1, T_) {}

  double operator()(const Vector& target, double rho, Vector& x) {
    const Eigen::Map<const Matrix> tgt(target.data(), R_, T_);
    const Eigen::Map<const Matrix> X(x.data(), R_, T_);
    const Matrix start = X.topRows(R_ - 1);

    auto fn = [&](const Vector& v, Vector& grad) {
      xbar_ = Eigen::Map<const Matrix>(v.data(), R_ - 1, T_);
      const double f1 = model_.evaluate_with_gradient(xbar_, sigma_, cache_, grad_f1_);
      grad.resize(v.size());
      Eigen::Map<Matrix> g(grad.data(), R_ - 1, T_);
      double phi = 0.0;
      for (Index t = 0; t < T_; ++t) {
        const double a = 1.0 - xbar_.col(t).sum() - tgt(R_ - 1, t);
        double sq = a * a;
        for (Index p = 0; p < R_ - 1; ++p) {
          const double dp = xbar_(p, t) - tgt(p, t);
          sq += dp * dp;
          g(p, t) = grad_f1_(p, t) + rho * (dp - a);
        }
        phi += sq;
      }
      return f1 + 0.5 * rho * phi;
    };

    InnerResult inner = inner_gradient_descent(
        fn, Eigen::Map<const Vector>(start.data(), start.size()), eta_,
        max_inner_, inner_tol_, step_rule_);
    const Eigen::Map<const Matrix> xbar(inner.x.data(), R_ - 1, T_);
    const Matrix full = reconstruct_full(xbar);
    x = Eigen::Map<const Vector>(full.data(), full.size());
    // fn's last call may have been a rejected trial; re-evaluate C at x.
    xbar_ = xbar;
    return model_.evaluate(xbar_, sigma_, cache_);
  }

 private:
  CorrentropyModel model_;
  Index R_;
  Index T_;
  double sigma_;
  double eta_;
  int max_inner_;
  double inner_tol_;
  InnerStepRule step_rule_;
  Matrix xbar_;
  Matrix grad_f1_;
  ResidualCache cache_;
};

class FullXUpdate {
 public:
  FullXUpdate(const ProblemHandle& handle, const SolverConfig& config)
      : model_(CorrentropyModel::full(handle)),
        R_(handle.endmembers()),
        T_(handle.pixels()),
        sigma_(config.sigma),
        eta_(config.eta.value_or(default_eta(model_.M(), config.sigma, config.rho, 1))),
        max_inner_(config.max_inner_iters),
        inner_tol_(config.inner_tol),
        step_rule_(config.inner_step),
        X_(R_, T_),
        grad_c_(R_, T_) {}

  double operator()(const Vector& target, double rho, Vector& x) {
    auto fn = [&](const Vector& v, Vector& grad) {
      X_ = Eigen::Map<const Matrix>(v.data(), R_, T_);
      const double c = model_.evaluate_with_gradient(X_, sigma_, cache_, grad_c_);
      const Eigen::Map<const Vector> gc(grad_c_.data(), grad_c_.size());
      grad = gc + rho * (v - target);
      return c + 0.5 * rho * (v - target).squaredNorm();
    };
    InnerResult inner =
        inner_gradient_descent(fn, x, eta_, max_inner_, inner_tol_, step_rule_);
    x = std::move(inner.x);
    X_ = Eigen::Map<const Matrix>(x.data(), R_, T_);
    return model_.evaluate(X_, sigma_, cache_);
  }

 private:
  CorrentropyModel model_;
  Index R_;
  Index T_;
  double sigma_;
  double eta_;
  int max_inner_;
  double inner_tol_;
  InnerStepRule step_rule_;
  Matrix X_;
  Matrix grad_c_;
  ResidualCache cache_;
};

}  // namespace

double default_eta(const Matrix& M, double sigma, double rho, Index coupling) {
  const double curvature = M.squaredNorm() / (sigma * sigma) +
                           rho * static_cast<double>(coupling);
  return 1.0 / curvature;
}

UnmixResult cusal_fc(const ProblemHandle& handle, const SolverConfig& config,
                     const std::optional<Matrix>& X0,
                     const AdmmObserver& observer) {
  config.validate();
  if (config.sigma_auto) {
    SolverConfig fixed = config;
    fixed.sigma_auto = false;
    return tune_sigma(handle, CusalVariant::FullyConstrained, fixed, observer, X0)
        .solution;
  }
  const Index R = handle.endmembers();
  const Index T = handle.pixels();
  if (R < 2)
    throw Error(ErrorCode::InvalidInput,
                "fully constrained unmixing needs at least two endmembers");
  Matrix start = X0 ? *X0 : solve_fcls(handle).data();
  check_start(handle, start);

  ReducedXUpdate x_update(handle, config);
  ZProx z_prox = [](const Vector& v, double, Vector& z) { z = project_nonnegative(v); };
  AdmmResult run = admm_generic(std::ref(x_update), z_prox, config,
                                initial_state(start), observer);

  // z carries nonnegativity; renormalize each column for exact sum-to-one.
  const Eigen::Map<const Matrix> Z(run.state.z.data(), R, T);
  const Eigen::Map<const Matrix> Xf(run.state.x.data(), R, T);
  Matrix out(R, T);
  for (Index t = 0; t < T; ++t) {
    const double sum = Z.col(t).sum();
    if (sum > 0.0)
      out.col(t) = Z.col(t) / sum;
    else
      out.col(t) = project_columns_to_simplex(Xf.col(t));
  }
  return UnmixResult{AbundanceMatrix(std::move(out), AbundanceTag::FullyConstrained),
                     std::move(run.report), std::move(run.state)};
}

UnmixResult cusal_sp(const ProblemHandle& handle, const SolverConfig& config,
                     const std::optional<Matrix>& X0,
                     const AdmmObserver& observer) {
  config.validate();
  if (config.sigma_auto) {
    SolverConfig fixed = config;
    fixed.sigma_auto = false;
    return tune_sigma(handle, CusalVariant::Sparse, fixed, observer, X0).solution;
  }
  const Index R = handle.endmembers();
  const Index T = handle.pixels();
  Matrix start = X0 ? *X0 : solve_nnls(handle).data();
  check_start(handle, start);

  FullXUpdate x_update(handle, config);
  const double lambda = config.lambda;
  ZProx z_prox = [lambda](const Vector& v, double rho, Vector& z) {
    z = project_nonnegative(soft_threshold(v, lambda / rho));
  };
  AdmmResult run = admm_generic(std::ref(x_update), z_prox, config,
                                initial_state(start), observer);
  Matrix out = Eigen::Map<const Matrix>(run.state.z.data(), R, T);
  return UnmixResult{AbundanceMatrix(std::move(out), AbundanceTag::Nonnegative),
                     std::move(run.report), std::move(run.state)};
}

}  // namespace cusal
