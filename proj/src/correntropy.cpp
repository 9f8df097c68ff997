#include "cusal/correntropy.hpp"

#include "cusal/kernels.hpp"

#include <cmath>

namespace cusal {

namespace {

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(ErrorCode::InvalidInput, "sigma must be positive and finite");
}

void check_shape(const CorrentropyModel& model, const Matrix& X) {
  if (X.rows() != model.variables() || X.cols() != model.Y().cols())
    throw Error(ErrorCode::DimensionMismatch,
                "abundance matrix is " + std::to_string(X.rows()) + "x" +
                    std::to_string(X.cols()) + ", expected " +
                    std::to_string(model.variables()) + "x" +
                    std::to_string(model.Y().cols()));
}

}  // namespace

CorrentropyModel::CorrentropyModel(Matrix Y, Matrix M)
    : Y_(std::move(Y)), M_(std::move(M)) {
  if (Y_.rows() != M_.rows())
    throw Error(ErrorCode::DimensionMismatch, "Y and M band counts differ");
}

CorrentropyModel CorrentropyModel::full(const ProblemHandle& handle) {
  return CorrentropyModel(handle.Y(), handle.M());
}

CorrentropyModel CorrentropyModel::reduced(const ProblemHandle& handle) {
  const Matrix& M = handle.M();
  const Index R = M.cols();
  if (R < 2)
    throw Error(ErrorCode::InvalidInput,
                "sum-to-one elimination needs at least two endmembers");
  const auto last = M.col(R - 1);
  Matrix Y = handle.Y().colwise() - last;
  Matrix D = M.leftCols(R - 1).colwise() - last;
  return CorrentropyModel(std::move(Y), std::move(D));
}

double CorrentropyModel::evaluate(const Matrix& X, double sigma,
                                  ResidualCache& cache) const {
  check_sigma(sigma);
  check_shape(*this, X);
  kernels::residuals(Y_, M_, X, cache.eps);
  kernels::band_square_sums(cache.eps, cache.band_sq_sums);
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  cache.band_weights.resize(cache.band_sq_sums.size());
  kernels::CompensatedSum total;
  for (Index l = 0; l < cache.band_sq_sums.size(); ++l) {
    cache.band_weights[l] = std::exp(-cache.band_sq_sums[l] * inv_two_sigma2);
    total.add(cache.band_weights[l]);
  }
  return -total.value();
}

double CorrentropyModel::evaluate_with_gradient(const Matrix& X, double sigma,
                                                ResidualCache& cache,
                                                Matrix& grad) const {
  const double value = evaluate(X, sigma, cache);
  kernels::weighted_gradient(M_, cache.eps, cache.band_weights,
                             -1.0 / (sigma * sigma), grad);
  return value;
}

double objective_C(const ProblemHandle& handle, const Matrix& X, double sigma) {
  ResidualCache cache;
  return CorrentropyModel::full(handle).evaluate(X, sigma, cache);
}

double objective_C(const ProblemHandle& handle, const AbundanceMatrix& X,
                   double sigma) {
  return objective_C(handle, X.data(), sigma);
}

Matrix gradient_full(const ProblemHandle& handle, const Matrix& X,
                     double sigma) {
  ResidualCache cache;
  Matrix grad;
  CorrentropyModel::full(handle).evaluate_with_gradient(X, sigma, cache, grad);
  return grad;
}

Vector band_weights(const ProblemHandle& handle, const Matrix& X,
                    double sigma) {
  ResidualCache cache;
  CorrentropyModel::full(handle).evaluate(X, sigma, cache);
  return cache.band_weights;
}

ReducedAbundance::ReducedAbundance(Matrix data) : data_(std::move(data)) {
  if (!data_.allFinite())
    throw Error(ErrorCode::NonFiniteData, "reduced abundances have NaN/Inf");
}

ReducedAbundance ReducedAbundance::from_full(const Matrix& X) {
  if (X.rows() < 2)
    throw Error(ErrorCode::InvalidInput, "need at least two endmembers");
  return ReducedAbundance(X.topRows(X.rows() - 1));
}

Matrix ReducedAbundance::reconstruct() const { return reconstruct_full(data_); }

Matrix reconstruct_full(const Matrix& reduced) {
  Matrix X(reduced.rows() + 1, reduced.cols());
  X.topRows(reduced.rows()) = reduced;
  for (Index t = 0; t < reduced.cols(); ++t)
    X(reduced.rows(), t) = 1.0 - reduced.col(t).sum();
  return X;
}

double objective_reduced_f1(const ProblemHandle& handle,
                            const ReducedAbundance& Xr, double sigma) {
  ResidualCache cache;
  return CorrentropyModel::reduced(handle).evaluate(Xr.data(), sigma, cache);
}

Matrix gradient_reduced_f1(const ProblemHandle& handle,
                           const ReducedAbundance& Xr, double sigma) {
  ResidualCache cache;
  Matrix grad;
  CorrentropyModel::reduced(handle).evaluate_with_gradient(Xr.data(), sigma,
                                                           cache, grad);
  return grad;
}

}  // namespace cusal
