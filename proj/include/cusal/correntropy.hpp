#ifndef CUSAL_CORRENTROPY_HPP
#define CUSAL_CORRENTROPY_HPP

#include "cusal/core.hpp"

namespace cusal {

/// Residuals and per-band kernel factors at one point.
struct ResidualCache {
  Matrix eps;             ///< L x T, y_lt - (M x_t)_l
  Vector band_sq_sums;    ///< L, sum_t eps_lt^2
  Vector band_weights;    ///< L, exp(-band_sq_sums / (2 sigma^2)), in [0, 1]
};

/// Negative correntropy C(X) = -sum_l exp(-||y_l* - (MX)_l*||^2 / (2 sigma^2))
/// for an arbitrary linear model (Y, M). Used directly for the full
/// parameterization and, on shifted data, for the sum-to-one-eliminated one.
class CorrentropyModel {
 public:
  CorrentropyModel(Matrix Y, Matrix M);

  /// Full parameterization over R abundances per pixel.
  static CorrentropyModel full(const ProblemHandle& handle);

  /// Reduced parameterization over the first R-1 abundances, with
  /// x_R = 1 - sum_{p<R} x_p substituted:
  ///   eps_l(xbar_t) = (y_lt - m_lR) - sum_p (m_lp - m_lR) xbar_pt.
  static CorrentropyModel reduced(const ProblemHandle& handle);

  const Matrix& Y() const noexcept { return Y_; }
  const Matrix& M() const noexcept { return M_; }
  Index variables() const noexcept { return M_.cols(); }

  /// Fills cache and returns C.
  double evaluate(const Matrix& X, double sigma, ResidualCache& cache) const;

  /// Fills cache, writes dC/dX into grad and returns C.
  double evaluate_with_gradient(const Matrix& X, double sigma,
                                ResidualCache& cache, Matrix& grad) const;

 private:
  Matrix Y_;
  Matrix M_;
};

double objective_C(const ProblemHandle& handle, const Matrix& X, double sigma);
double objective_C(const ProblemHandle& handle, const AbundanceMatrix& X,
                   double sigma);

/// dC/dX, R x T.
Matrix gradient_full(const ProblemHandle& handle, const Matrix& X, double sigma);

/// Per-band factors w_l = exp(-sum_t eps_lt^2 / (2 sigma^2)).
Vector band_weights(const ProblemHandle& handle, const Matrix& X, double sigma);

/// Free variables after eliminating the sum-to-one constraint: the first R-1
/// rows of X.
class ReducedAbundance {
 public:
  explicit ReducedAbundance(Matrix data);
  /// Drops the last row of a full abundance matrix.
  static ReducedAbundance from_full(const Matrix& X);

  const Matrix& data() const noexcept { return data_; }
  /// Full R x T matrix whose last row is 1 - (column sums of data).
  Matrix reconstruct() const;

 private:
  Matrix data_;
};

/// Appends x_R = 1 - sum_{p<R} x_p to each column.
Matrix reconstruct_full(const Matrix& reduced);

double objective_reduced_f1(const ProblemHandle& handle,
                            const ReducedAbundance& Xr, double sigma);

/// df1/dxbar, (R-1) x T.
Matrix gradient_reduced_f1(const ProblemHandle& handle,
                           const ReducedAbundance& Xr, double sigma);

}  // namespace cusal

#endif  // CUSAL_CORRENTROPY_HPP
