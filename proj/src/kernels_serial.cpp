#include "cusal/kernels.hpp"

namespace cusal::kernels::serial {

void residuals(const Matrix& Y, const Matrix& M, const Matrix& X, Matrix& E) {
  E.resize(Y.rows(), Y.cols());
  for (Index l = 0; l < Y.rows(); ++l) {
    for (Index t = 0; t < Y.cols(); ++t) {
      double e = Y(l, t);
      for (Index r = 0; r < M.cols(); ++r) e -= M(l, r) * X(r, t);
      E(l, t) = e;
    }
  }
}

void band_square_sums(const Matrix& E, Vector& s) {
  s.resize(E.rows());
  for (Index l = 0; l < E.rows(); ++l) {
    CompensatedSum acc;
    for (Index t = 0; t < E.cols(); ++t) acc.add(E(l, t) * E(l, t));
    s[l] = acc.value();
  }
}

void weighted_gradient(const Matrix& M, const Matrix& E, const Vector& w,
                       double scale, Matrix& G) {
  G.resize(M.cols(), E.cols());
  for (Index t = 0; t < E.cols(); ++t) {
    for (Index r = 0; r < M.cols(); ++r) {
      double acc = 0.0;
      for (Index l = 0; l < E.rows(); ++l) acc += M(l, r) * (w[l] * E(l, t));
      G(r, t) = scale * acc;
    }
  }
}

}  // namespace cusal::kernels::serial
