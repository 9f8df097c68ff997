#include "cusal/baselines.hpp"
#include "cusal/correntropy.hpp"
#include "cusal/solvers.hpp"
#include "cusal/synth.hpp"
#include "fd_oracle.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace cusal;

namespace {

// Data whose band residuals at X are of order sigma, so that the kernel is
// neither saturated nor flat.
struct Instance {
  Matrix Y, M, X;
  double sigma;
};

Instance make_instance(Index R, Index T, Index L, double sigma, std::mt19937_64& rng) {
  Instance in;
  in.sigma = sigma;
  in.M = test::uniform_matrix(L, R, rng);
  in.X = test::simplex_columns(R, T, rng);
  const double spread = 1.5 * sigma / std::sqrt(static_cast<double>(T));
  in.Y = in.M * in.X + test::uniform_matrix(L, T, rng, -spread, spread);
  return in;
}

}  // namespace

TEST(ObjectiveC, SingleZeroResidualBand) {
  const Matrix one = Matrix::Ones(1, 1);
  EXPECT_EQ(objective_C(test::make_handle(one, one), one, 1.0), -1.0);
}

TEST(ObjectiveC, HalfWeightBand) {
  // Band 2 residual squared is 2 ln 2, so its kernel value is 1/2.
  Matrix Y(2, 1), M(2, 1);
  Y << 0.0, std::sqrt(2.0 * std::log(2.0));
  M << 1.0, 1.0;
  const double C = objective_C(test::make_handle(Y, M), Matrix::Zero(1, 1), 1.0);
  EXPECT_NEAR(C, -1.5, 1e-15);
}

TEST(ObjectiveC, MatchesLongDoubleOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = make_instance(4, 6, 12, 0.5, rng);
    const ProblemHandle h = test::make_handle(in.Y, in.M);
    const double C = objective_C(h, in.X, in.sigma);
    const double ref = static_cast<double>(
        test::oracle_C(in.Y, in.M, in.X.cast<long double>(), in.sigma));
    EXPECT_NEAR(C, ref, 1e-13 * in.Y.rows());
  }
}

TEST(ObjectiveC, RangeIsMinusLToZero) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> us(0.05, 20);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix M = test::uniform_matrix(9, 3, rng);
    const Matrix Y = test::uniform_matrix(9, 4, rng, -2, 2);
    const Matrix X = test::uniform_matrix(3, 4, rng, -3, 3);
    const double C = objective_C(test::make_handle(Y, M), X, us(rng));
    EXPECT_GE(C, -9.0);
    EXPECT_LT(C, 0.0);
  }
}

TEST(ObjectiveC, PermutationInvariance) {
  std::mt19937_64 rng(23);
  const Instance in = make_instance(3, 11, 15, 0.8, rng);
  const double C = objective_C(test::make_handle(in.Y, in.M), in.X, in.sigma);

  std::vector<Index> pix(11), band(15);
  std::iota(pix.begin(), pix.end(), 0);
  std::iota(band.begin(), band.end(), 0);
  std::shuffle(pix.begin(), pix.end(), rng);
  std::shuffle(band.begin(), band.end(), rng);

  Matrix Yp(in.Y.rows(), in.Y.cols()), Xp(in.X.rows(), in.X.cols());
  for (Index t = 0; t < 11; ++t) {
    Yp.col(t) = in.Y.col(pix[t]);
    Xp.col(t) = in.X.col(pix[t]);
  }
  EXPECT_NEAR(objective_C(test::make_handle(Yp, in.M), Xp, in.sigma), C, 1e-13);

  Matrix Yb(in.Y.rows(), in.Y.cols()), Mb(in.M.rows(), in.M.cols());
  for (Index l = 0; l < 15; ++l) {
    Yb.row(l) = in.Y.row(band[l]);
    Mb.row(l) = in.M.row(band[l]);
  }
  EXPECT_NEAR(objective_C(test::make_handle(Yb, Mb), in.X, in.sigma), C, 1e-13);
}

TEST(ObjectiveC, LargeSigmaOrdersLikeSquaredError) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix M = test::uniform_matrix(10, 3, rng);
    const Matrix X0 = test::simplex_columns(3, 5, rng);
    const Matrix D = test::uniform_matrix(3, 5, rng, -0.1, 0.1);
    const Matrix Y = M * X0;
    const ProblemHandle h = test::make_handle(Y, M);
    const double c = 1.0 + 0.5 * (trial + 1);
    const double max_res = (c * M * D).cwiseAbs().rowwise().sum().maxCoeff();
    const double sigma = 1e3 * max_res;
    const double C1 = objective_C(h, Matrix(X0 - D), sigma);
    const double C2 = objective_C(h, Matrix(X0 - c * D), sigma);
    EXPECT_LT(C1, C2);
  }
}

TEST(GradientFull, ZeroAtExactFit) {
  std::mt19937_64 rng(25);
  const Matrix M = test::uniform_matrix(10, 3, rng);
  const Matrix X = test::simplex_columns(3, 5, rng);
  const Matrix Y = M * X;
  const Matrix G = gradient_full(test::make_handle(Y, M), X, 0.7);
  EXPECT_LT(test::max_abs(G), 1e-15);
}

TEST(GradientFull, MatchesFiniteDifferences) {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> us(0.1, 5.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Instance in = make_instance(3, 5, 10, us(rng), rng);
    const Matrix G = gradient_full(test::make_handle(in.Y, in.M), in.X, in.sigma);
    const Matrix fd = test::central_differences(
        [&](const test::LMatrix& X) { return test::oracle_C(in.Y, in.M, X, in.sigma); },
        in.X, 1e-3 * in.sigma);
    EXPECT_LT(test::max_relative_error(G, fd), 1e-6) << "trial " << trial;
  }
}

TEST(GradientFull, LargeSigmaApproachesScaledLeastSquares) {
  std::mt19937_64 rng(27);
  const Matrix M = test::uniform_matrix(10, 3, rng);
  const Matrix X = test::uniform_matrix(3, 5, rng);
  const Matrix Y = test::uniform_matrix(10, 5, rng);
  const double sigma = 1e6;
  const Matrix G = gradient_full(test::make_handle(Y, M), X, sigma);
  const Matrix G_ls = M.transpose() * (M * X - Y) / (sigma * sigma);
  for (Index i = 0; i < G.size(); ++i)
    EXPECT_NEAR(G(i), G_ls(i), 1e-3 * std::abs(G_ls(i)));
}

TEST(ReducedObjective, EqualsFullAtReconstruction) {
  std::mt19937_64 rng(28);
  for (Index R : {2, 3, 5}) {
    const Instance in = make_instance(R, 6, 12, 0.6, rng);
    const ProblemHandle h = test::make_handle(in.Y, in.M);
    const ReducedAbundance Xr = ReducedAbundance::from_full(in.X);
    const Matrix full = Xr.reconstruct();
    for (Index t = 0; t < full.cols(); ++t)
      EXPECT_NEAR(full.col(t).sum(), 1.0, 1e-15);
    EXPECT_NEAR(objective_reduced_f1(h, Xr, in.sigma), objective_C(h, full, in.sigma),
                1e-12);
  }
}

TEST(ReducedObjective, ZeroFreeVariablesMeanPureLastEndmember) {
  std::mt19937_64 rng(29);
  const Instance in = make_instance(3, 4, 8, 1.0, rng);
  const ProblemHandle h = test::make_handle(in.Y, in.M);
  Matrix pure = Matrix::Zero(3, 4);
  pure.row(2).setOnes();
  const ReducedAbundance zero(Matrix::Zero(2, 4));
  EXPECT_EQ(zero.reconstruct(), pure);
  EXPECT_NEAR(objective_reduced_f1(h, zero, 1.0), objective_C(h, pure, 1.0), 1e-14);
}

TEST(ReducedObjective, ExactFitGivesMinusL) {
  std::mt19937_64 rng(30);
  const Matrix M = test::uniform_matrix(8, 3, rng);
  const Matrix X = test::simplex_columns(3, 4, rng);
  const ProblemHandle h = test::make_handle(M * X, M);
  const ReducedAbundance Xr = ReducedAbundance::from_full(X);
  EXPECT_NEAR(objective_reduced_f1(h, Xr, 0.3), -8.0, 1e-12);
  EXPECT_LT(test::max_abs(gradient_reduced_f1(h, Xr, 0.3)), 1e-14);
}

TEST(ReducedGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> us(0.1, 5.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Instance in = make_instance(3, 4, 8, us(rng), rng);
    const ProblemHandle h = test::make_handle(in.Y, in.M);
    const Matrix xbar = in.X.topRows(2);
    const Matrix G = gradient_reduced_f1(h, ReducedAbundance(xbar), in.sigma);
    const Matrix fd = test::central_differences(
        [&](const test::LMatrix& Xr) {
          return test::oracle_C(in.Y, in.M, test::oracle_reconstruct(Xr), in.sigma);
        },
        xbar, 1e-3 * in.sigma);
    EXPECT_LT(test::max_relative_error(G, fd), 1e-6) << "trial " << trial;
  }
}

TEST(ReducedGradient, ChainRuleThroughElimination) {
  std::mt19937_64 rng(32);
  const Instance in = make_instance(4, 6, 14, 0.9, rng);
  const ProblemHandle h = test::make_handle(in.Y, in.M);
  const Matrix Gf = gradient_full(h, in.X, in.sigma);
  const Matrix Gr =
      gradient_reduced_f1(h, ReducedAbundance::from_full(in.X), in.sigma);
  // dx/dxbar = [I; -1^T].
  const Matrix expected = Gf.topRows(3).rowwise() - Gf.row(3);
  EXPECT_LT(test::max_abs(Gr - expected), 1e-10);
}

TEST(BandWeights, ExactValues) {
  Matrix Y(3, 2), M(3, 1);
  const double sigma = 0.4;
  const double target = 2 * sigma * sigma * std::log(10.0);
  Y << 0, 0, std::sqrt(target / 2), std::sqrt(target / 2), 5, 5;
  M << 0, 0, 0;
  const Vector w = band_weights(test::make_handle(Y, M), Matrix::Zero(1, 2), sigma);
  EXPECT_EQ(w[0], 1.0);
  EXPECT_NEAR(w[1], 0.1, 1e-15);
  EXPECT_GE(w[2], 0.0);
  EXPECT_LT(w[2], 1e-60);
}

TEST(ResidualCache, ConsistentWithRecomputation) {
  std::mt19937_64 rng(33);
  const Instance in = make_instance(3, 7, 12, 0.5, rng);
  const CorrentropyModel model = CorrentropyModel::full(test::make_handle(in.Y, in.M));
  ResidualCache cache;
  Matrix grad;
  const double C = model.evaluate_with_gradient(in.X, in.sigma, cache, grad);
  const Matrix eps = in.Y - in.M * in.X;
  EXPECT_LE(test::max_abs(cache.eps - eps), 1e-12 * (1 + test::max_abs(eps)));
  EXPECT_GE(cache.band_weights.minCoeff(), 0.0);
  EXPECT_LE(cache.band_weights.maxCoeff(), 1.0);
  EXPECT_NEAR(C, -cache.band_weights.sum(), 1e-14);
}

TEST(BandWeights, CorruptedBandsDownWeightedAtSolution) {
  SyntheticSpec spec;
  spec.R = 3;
  spec.L = 60;
  spec.T = 100;
  spec.snr_db = 35;
  spec.n_corrupt = 6;
  spec.seed = 4;
  const EndmemberMatrix M = gen_endmembers(3, 60, 4, 10.0);
  const SyntheticCube cube = gen_cube(M, spec);
  const ProblemHandle h = validate_problem(cube.Y, M);
  SolverConfig cfg;
  cfg.sigma_auto = true;
  const UnmixResult res = cusal_fc(h, cfg);
  const Vector w = band_weights(h, res.X.data(), res.report.sigma_used);
  const auto& bad = cube.truth.corrupted_bands;
  double min_clean = 1.0, max_bad = 0.0;
  for (Index l = 0; l < spec.L; ++l) {
    if (std::find(bad.begin(), bad.end(), l) != bad.end())
      max_bad = std::max(max_bad, w[l]);
    else
      min_clean = std::min(min_clean, w[l]);
  }
  EXPECT_LT(max_bad, min_clean);
}
