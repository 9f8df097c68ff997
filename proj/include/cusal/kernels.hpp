#ifndef CUSAL_KERNELS_HPP
#define CUSAL_KERNELS_HPP

// Data-parallel inner loops shared by the correntropy objective, its
// gradients and the pixel-separable baselines.
//
// Reduction tree (identical in the OpenMP and serial paths, so results are
// bit-identical for any thread count):
//   residuals          one pixel per work item; e_lt = y_lt - sum_r m_lr x_rt
//                      accumulated over r = 0..R-1 in order.
//   band_square_sums   one band per accumulator; sum_t e_lt^2 over t = 0..T-1
//                      in order, Neumaier-compensated.
//   weighted_gradient  one pixel per work item; sum over l = 0..L-1 in order.
// Threads only partition the outer index; no partial sums are ever combined
// across threads.

#include "cusal/core.hpp"

namespace cusal::kernels {

/// E = Y - M X.
void residuals(const Matrix& Y, const Matrix& M, const Matrix& X, Matrix& E);

/// s_l = sum_t E(l, t)^2.
void band_square_sums(const Matrix& E, Vector& s);

/// G = scale * M^T diag(w) E.
void weighted_gradient(const Matrix& M, const Matrix& E, const Vector& w,
                       double scale, Matrix& G);

/// Thread count used by the kernels (OpenMP default unless overridden).
int max_threads();
void set_threads(int n);

/// Neumaier-compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) noexcept {
    const double t = sum + v;
    if ((sum >= 0 ? sum : -sum) >= (v >= 0 ? v : -v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const noexcept { return sum + comp; }
};

}  // namespace cusal::kernels

namespace cusal::kernels::serial {

// Straight-line reference versions kept for testing and benchmarking.
void residuals(const Matrix& Y, const Matrix& M, const Matrix& X, Matrix& E);
void band_square_sums(const Matrix& E, Vector& s);
void weighted_gradient(const Matrix& M, const Matrix& E, const Vector& w,
                       double scale, Matrix& G);

}  // namespace cusal::kernels::serial

#endif  // CUSAL_KERNELS_HPP
