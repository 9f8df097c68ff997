#include "cusal/baselines.hpp"
#include "cusal/correntropy.hpp"
#include "cusal/metrics.hpp"
#include "cusal/solvers.hpp"
#include "cusal/synth.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>

using namespace cusal;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

AdmmState zero_state(Index n) {
  return AdmmState{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), 0};
}

// f = 1/2 ||x - a||^2; the x-update has the closed form (a + rho t)/(1 + rho).
XMinimizer quadratic_to(const Vector& a) {
  return [a](const Vector& target, double rho, Vector& x) {
    x = (a + rho * target) / (1.0 + rho);
    return 0.5 * (x - a).squaredNorm();
  };
}

ZProx orthant_prox() {
  return [](const Vector& v, double, Vector& z) { z = v.cwiseMax(0.0); };
}

AdmmState state_with_primal(double norm, int k) {
  AdmmState s{vec({norm, 0.0}), vec({0.0, 0.0}), vec({0.0, 0.0}), k};
  return s;
}

struct Scene {
  EndmemberMatrix M;
  SyntheticCube cube;
};

Scene small_scene(Index R, Index L, Index T, double snr, Index n_corrupt,
                  std::uint64_t seed, std::optional<Index> K = std::nullopt) {
  SyntheticSpec spec;
  spec.R = R;
  spec.L = L;
  spec.T = T;
  spec.snr_db = snr;
  spec.n_corrupt = n_corrupt;
  spec.seed = seed;
  spec.sparsity_K = K;
  EndmemberMatrix M = gen_endmembers(R, L, seed, 10.0);
  SyntheticCube cube = gen_cube(M, spec);
  return Scene{std::move(M), std::move(cube)};
}

}  // namespace

TEST(StopCheck, ExactConsensusIsSmall) {
  SolverConfig cfg;
  AdmmState prev = state_with_primal(0.0, 3);
  AdmmState next = prev;
  next.k = 4;
  EXPECT_EQ(stop_check(prev, next, cfg), TerminationDecision::ResidualsSmall);
}

TEST(StopCheck, ThresholdsScaleWithSqrtOfSize) {
  SolverConfig cfg;
  const StopThresholds eps = stop_thresholds(cfg, 10000);
  EXPECT_DOUBLE_EQ(eps.primal, 1e-3);
  EXPECT_DOUBLE_EQ(eps.dual, 1e-3);
  for (Index n : {1, 2, 7, 300, 62 * 225}) {
    const StopThresholds e = stop_thresholds(cfg, n);
    EXPECT_DOUBLE_EQ(e.primal, std::sqrt(static_cast<double>(n)) * 1e-5);
    EXPECT_DOUBLE_EQ(e.dual, e.primal);
  }
  cfg.eps_primal = 0.5;
  EXPECT_EQ(stop_thresholds(cfg, 4).primal, 0.5);
}

TEST(StopCheck, IncreasingPrimalResidual) {
  SolverConfig cfg;
  cfg.eps_primal = 1e-3;
  cfg.eps_dual = 1e-3;
  EXPECT_EQ(stop_check(state_with_primal(0.5, 4), state_with_primal(0.6, 5), cfg),
            TerminationDecision::PrimalIncreased);
  EXPECT_EQ(stop_check(state_with_primal(0.6, 4), state_with_primal(0.5, 5), cfg),
            TerminationDecision::Continue);
}

TEST(StopCheck, ZeroPreviousResidualIsNoBaseline) {
  SolverConfig cfg;
  EXPECT_EQ(stop_check(state_with_primal(0.0, 0), state_with_primal(0.6, 1), cfg),
            TerminationDecision::Continue);
}

TEST(StopCheck, Precedence) {
  SolverConfig cfg;
  cfg.max_outer_iters = 5;
  cfg.eps_primal = 1.0;
  cfg.eps_dual = 1.0;
  // Small residuals win over an increase and over the cap.
  EXPECT_EQ(stop_check(state_with_primal(0.5, 4), state_with_primal(0.6, 5), cfg),
            TerminationDecision::ResidualsSmall);
  cfg.eps_primal = 0.1;
  EXPECT_EQ(stop_check(state_with_primal(0.5, 4), state_with_primal(0.6, 5), cfg),
            TerminationDecision::PrimalIncreased);
  EXPECT_EQ(stop_check(state_with_primal(0.7, 4), state_with_primal(0.6, 5), cfg),
            TerminationDecision::MaxIters);
  EXPECT_EQ(stop_check(state_with_primal(0.7, 3), state_with_primal(0.6, 4), cfg),
            TerminationDecision::Continue);
}

TEST(AdmmGeneric, QuadraticOverOrthant) {
  const Vector a = vec({-1.0, 2.0});
  SolverConfig cfg;
  cfg.rho = 1.0;
  cfg.max_outer_iters = 200;
  cfg.eps_primal = 1e-9;
  cfg.eps_dual = 1e-9;
  const AdmmResult res = admm_generic(quadratic_to(a), orthant_prox(), cfg, zero_state(2));
  EXPECT_LE(res.report.iterations_run, 200);
  EXPECT_LT((res.state.z - vec({0.0, 2.0})).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(res.report.termination_reason, TerminationReason::ResidualsSmall);

  // Default thresholds stop earlier, with an error of the threshold's order.
  SolverConfig loose;
  loose.rho = 1.0;
  const AdmmResult early =
      admm_generic(quadratic_to(a), orthant_prox(), loose, zero_state(2));
  EXPECT_EQ(early.report.termination_reason, TerminationReason::ResidualsSmall);
  EXPECT_LT((early.state.z - vec({0.0, 2.0})).cwiseAbs().maxCoeff(),
            10 * stop_thresholds(loose, 2).primal);
}

TEST(AdmmGeneric, SolutionIndependentOfRho) {
  const Vector a = vec({-1.0, 2.0});
  for (double rho : {0.1, 1.0, 10.0}) {
    SolverConfig cfg;
    cfg.rho = rho;
    cfg.max_outer_iters = 1000;
    cfg.eps_primal = 1e-9;
    cfg.eps_dual = 1e-9;
    cfg.divergence_patience = 1000;
    const AdmmResult res =
        admm_generic(quadratic_to(a), orthant_prox(), cfg, zero_state(2));
    EXPECT_LT((res.state.z - vec({0.0, 2.0})).cwiseAbs().maxCoeff(), 1e-6)
        << "rho=" << rho;
  }
}

TEST(AdmmGeneric, IdentityProxReachesConsensus) {
  const Vector a = vec({0.3, -4.0, 7.5});
  SolverConfig cfg;
  cfg.max_outer_iters = 500;
  const ZProx identity = [](const Vector& v, double, Vector& z) { z = v; };
  const AdmmResult res = admm_generic(quadratic_to(a), identity, cfg, zero_state(3));
  EXPECT_EQ(res.report.termination_reason, TerminationReason::ResidualsSmall);
  EXPECT_LT((res.state.x - res.state.z).norm(), 1e-4);
  EXPECT_LT((res.state.x - a).norm(), 1e-3);
}

TEST(AdmmGeneric, ReportLengthsAndTermination) {
  SolverConfig cfg;
  cfg.max_outer_iters = 3;
  cfg.eps_primal = 1e-30;
  cfg.eps_dual = 1e-30;
  const AdmmResult res =
      admm_generic(quadratic_to(vec({1.0, 2.0})), orthant_prox(), cfg, zero_state(2));
  EXPECT_EQ(res.report.iterations_run, 3);
  EXPECT_EQ(res.report.primal_residuals.size(), 3u);
  EXPECT_EQ(res.report.dual_residuals.size(), 3u);
  EXPECT_EQ(res.report.objective_trace.size(), 3u);
  EXPECT_EQ(res.report.termination_reason, TerminationReason::MaxIters);
}

TEST(AdmmGeneric, NonFiniteMinimizerFails) {
  const XMinimizer bad = [](const Vector&, double, Vector& x) {
    x.setConstant(std::nan(""));
    return 0.0;
  };
  try {
    admm_generic(bad, orthant_prox(), SolverConfig{}, zero_state(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InnerSolverFailure);
  }
}

TEST(AdmmGeneric, PatienceDelaysDivergenceStop) {
  // A minimizer that pushes x away from z by a growing amount.
  int calls = 0;
  const XMinimizer drift = [&calls](const Vector&, double, Vector& x) {
    x.setConstant(-1.0 - ++calls);
    return 0.0;
  };
  SolverConfig cfg;
  cfg.divergence_patience = 3;
  const AdmmResult res = admm_generic(drift, orthant_prox(), cfg, zero_state(1));
  EXPECT_EQ(res.report.termination_reason, TerminationReason::PrimalIncreased);
  // The first step has no baseline; the next three each increase.
  EXPECT_EQ(res.report.iterations_run, 4);
}

TEST(InnerGradientDescent, ExactStep) {
  const Vector a = vec({1.0, 2.0});
  const ValueAndGradient fn = [&](const Vector& x, Vector& g) {
    g = x - a;
    return 0.5 * g.squaredNorm();
  };
  const InnerResult r = inner_gradient_descent(fn, Vector::Zero(2), 1.0, 50, 1e-12);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.x, a);
}

TEST(InnerGradientDescent, GeometricContraction) {
  const Vector a = vec({1.0, 2.0});
  const ValueAndGradient fn = [&](const Vector& x, Vector& g) {
    g = x - a;
    return 0.5 * g.squaredNorm();
  };
  const InnerResult r = inner_gradient_descent(fn, Vector::Zero(2), 0.1, 30, 1e-300,
                                               InnerStepRule::Fixed);
  ASSERT_EQ(r.trace.size(), 31u);
  const double d0 = a.norm();
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    const double dist = std::sqrt(2.0 * r.trace[k]);
    EXPECT_NEAR(dist, std::pow(0.9, static_cast<double>(k)) * d0, 1e-12);
  }
}

TEST(InnerGradientDescent, BacktracksFromHugeStep) {
  const ValueAndGradient fn = [](const Vector& x, Vector& g) {
    g = 4.0 * x;
    return 2.0 * x.squaredNorm();
  };
  const InnerResult r =
      inner_gradient_descent(fn, vec({1.0, -1.0}), 1e6, 1000, 1e-10, InnerStepRule::Fixed);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.x.norm(), 1e-9);
}

TEST(InnerGradientDescent, MonotoneOnReducedCorrentropy) {
  std::mt19937_64 rng(41);
  const Matrix M = test::uniform_matrix(30, 4, rng);
  const Matrix Y = M * test::simplex_columns(4, 20, rng) +
                   test::uniform_matrix(30, 20, rng, -0.05, 0.05);
  const ProblemHandle h = test::make_handle(Y, M);
  const CorrentropyModel model = CorrentropyModel::reduced(h);
  const double sigma = 0.2, rho = 0.1;
  const Vector target = test::uniform_matrix(3 * 20, 1, rng).col(0) * 0.3;
  for (InnerStepRule rule : {InnerStepRule::Fixed, InnerStepRule::BarzilaiBorwein}) {
    ResidualCache cache;
    Matrix gm;
    const ValueAndGradient fn = [&](const Vector& v, Vector& g) {
      const Eigen::Map<const Matrix> xb(v.data(), 3, 20);
      const double f = model.evaluate_with_gradient(xb, sigma, cache, gm);
      g = Eigen::Map<const Vector>(gm.data(), gm.size()) + rho * (v - target);
      return f + 0.5 * rho * (v - target).squaredNorm();
    };
    const InnerResult r = inner_gradient_descent(fn, Vector::Zero(60), 1.0, 50, 1e-8, rule);
    ASSERT_GE(r.trace.size(), 2u);
    for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k], r.trace[k - 1]);
  }
}

TEST(InnerGradientDescent, RejectsBadInput) {
  const ValueAndGradient fn = [](const Vector& x, Vector& g) {
    g = x;
    return 0.5 * x.squaredNorm();
  };
  EXPECT_THROW(inner_gradient_descent(fn, Vector::Zero(2), 0.0, 5, 1e-6), Error);
  try {
    inner_gradient_descent(fn, vec({std::nan(""), 0.0}), 1.0, 5, 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteIterate);
  }
}

class AdmmInvariants : public ::testing::TestWithParam<CusalVariant> {};

TEST_P(AdmmInvariants, HoldAtEveryOuterIteration) {
  const Scene s = small_scene(4, 40, 30, 30, 4, 9);
  const ProblemHandle h = validate_problem(s.cube.Y, s.M);
  const Index n = 4 * 30;
  SolverConfig cfg;
  cfg.sigma = 0.5;
  cfg.lambda = 1e-3;
  cfg.max_outer_iters = 60;
  cfg.divergence_patience = 1000;
  const StopThresholds eps = stop_thresholds(cfg, n);
  EXPECT_DOUBLE_EQ(eps.primal, std::sqrt(static_cast<double>(n)) * 1e-5);
  int iterations = 0;
  const AdmmObserver check = [&](const AdmmState& prev, const AdmmState& next) {
    ++iterations;
    EXPECT_EQ(next.k, prev.k + 1);
    EXPECT_GE(next.z.minCoeff(), 0.0);
    const Vector identity = next.u - prev.u + next.x - next.z;
    EXPECT_LE(identity.cwiseAbs().maxCoeff(), 1e-15);
    if (GetParam() == CusalVariant::FullyConstrained) {
      const Eigen::Map<const Matrix> X(next.x.data(), 4, 30);
      EXPECT_LE((X.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    }
  };
  const UnmixResult r = GetParam() == CusalVariant::FullyConstrained
                            ? cusal_fc(h, cfg, std::nullopt, check)
                            : cusal_sp(h, cfg, std::nullopt, check);
  EXPECT_EQ(iterations, r.report.iterations_run);
  EXPECT_EQ(static_cast<int>(r.report.primal_residuals.size()), iterations);
}

INSTANTIATE_TEST_SUITE_P(BothSolvers, AdmmInvariants,
                         ::testing::Values(CusalVariant::FullyConstrained,
                                           CusalVariant::Sparse));

TEST(CusalFC, CleanDataRecoveredWithTunedSigma) {
  SyntheticSpec spec;
  spec.R = 3;
  spec.L = 50;
  spec.T = 100;
  spec.snr_db = std::numeric_limits<double>::infinity();
  spec.seed = 12;
  const EndmemberMatrix M = gen_endmembers(3, 50, 12, 10.0);
  const SyntheticCube cube = gen_cube(M, spec);
  SolverConfig cfg;
  cfg.sigma_auto = true;
  const UnmixResult r = cusal_fc(validate_problem(cube.Y, M), cfg);
  EXPECT_EQ(r.X.tag(), AbundanceTag::FullyConstrained);
  EXPECT_LT(rmse(cube.truth.X_true.data(), r.X.data()).value, 1e-3);
}

TEST(CusalFC, OutputFeasible) {
  const Scene s = small_scene(3, 40, 25, 25, 5, 13);
  SolverConfig cfg;
  cfg.sigma = 0.3;
  const UnmixResult r = cusal_fc(validate_problem(s.cube.Y, s.M), cfg);
  const Matrix& X = r.X.data();
  EXPECT_GE(X.minCoeff(), -kFeasibilityTol);
  EXPECT_LE((X.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(CusalSP, HugeLambdaGivesZero) {
  const Scene s = small_scene(3, 40, 20, 30, 0, 14);
  SolverConfig cfg;
  cfg.sigma = 0.5;
  cfg.lambda = 1e3;
  const UnmixResult r = cusal_sp(validate_problem(s.cube.Y, s.M), cfg);
  EXPECT_EQ(r.X.tag(), AbundanceTag::Nonnegative);
  EXPECT_EQ(test::max_abs(r.X.data()), 0.0);
}

TEST(CusalSP, Deterministic) {
  const Scene s = small_scene(5, 40, 30, 30, 3, 15, 2);
  SolverConfig cfg;
  cfg.sigma = 0.4;
  cfg.lambda = 1e-3;
  const ProblemHandle h = validate_problem(s.cube.Y, s.M);
  const UnmixResult a = cusal_sp(h, cfg);
  const UnmixResult b = cusal_sp(h, cfg);
  EXPECT_EQ(a.X.data(), b.X.data());
  EXPECT_EQ(a.report.primal_residuals, b.report.primal_residuals);
  EXPECT_EQ(a.report.dual_residuals, b.report.dual_residuals);
  EXPECT_EQ(a.report.objective_trace, b.report.objective_trace);
}

TEST(Tuner, ZeroResidualFloorsSigma0) {
  SyntheticSpec spec;
  spec.R = 3;
  spec.L = 30;
  spec.T = 20;
  spec.snr_db = std::numeric_limits<double>::infinity();
  spec.seed = 16;
  const EndmemberMatrix M = gen_endmembers(3, 30, 16, 10.0);
  const SyntheticCube cube = gen_cube(M, spec);
  const ProblemHandle h = validate_problem(cube.Y, M);
  EXPECT_LT(initial_sigma(h), 1e-12);
  const TuningResult t = tune_sigma(h, CusalVariant::FullyConstrained, SolverConfig{});
  EXPECT_GE(t.trace.attempts.front().sigma, sigma_floor(h));
  EXPECT_EQ(t.trace.attempts.back().outcome, AttemptOutcome::Converged);
  EXPECT_LT(t.trace.attempts.back().ratio, kAcceptRatio);
}

TEST(Tuner, InitialSigmaFormula) {
  std::mt19937_64 rng(17);
  const Matrix M = test::uniform_matrix(25, 4, rng);
  const Matrix Y = test::uniform_matrix(25, 9, rng);
  const ProblemHandle h = test::make_handle(Y, M);
  const Matrix X_ls = M.colPivHouseholderQr().solve(Y);
  const double expected = std::sqrt(4.0 / (8.0 * 25.0) * (Y - M * X_ls).squaredNorm());
  EXPECT_NEAR(initial_sigma(h), expected, 1e-12 * expected);
}

TEST(Tuner, GrowthIsExactlyTwentyPercent) {
  const Scene s = small_scene(3, 60, 50, 30, 10, 1);
  const ProblemHandle h = validate_problem(s.cube.Y, s.M);
  // Stopping on the first uptick makes this instance grow sigma a few times.
  SolverConfig cfg;
  cfg.divergence_patience = 1;
  const TuningResult t = tune_sigma(h, CusalVariant::FullyConstrained, cfg);
  const auto& at = t.trace.attempts;
  ASSERT_GE(at.size(), 3u);
  const double sigma0 = std::max(t.trace.sigma0, sigma_floor(h));
  EXPECT_EQ(at.front().sigma, sigma0);
  int grows = 0;
  for (std::size_t j = 0; j + 1 < at.size(); ++j) {
    if (at[j].outcome == AttemptOutcome::Converged) ADD_FAILURE() << "accepted early";
    if (at[j].sigma > kOverestimateFactor * sigma0) continue;
    EXPECT_EQ(at[j + 1].sigma, at[j].sigma * kSigmaGrowth);
    EXPECT_DOUBLE_EQ(at[j + 1].sigma / at[j].sigma, 1.2);
    ++grows;
  }
  EXPECT_GE(grows, 2);
  EXPECT_EQ(at.back().outcome, AttemptOutcome::Converged);
  EXPECT_LT(at.back().ratio, 2.0);
  EXPECT_EQ(t.sigma, at.back().sigma);
  EXPECT_EQ(t.trace.sigma_final, t.sigma);
  EXPECT_EQ(t.solution.report.sigma_used, t.sigma);
  EXPECT_NEAR(residual_ratio(h, t.solution.X.data()), at.back().ratio, 1e-12);
}
