#include "cusal/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <array>

namespace cusal::kernels {

namespace {
constexpr Index kBandBlock = 64;
}

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) { omp_set_num_threads(std::max(1, n)); }

void residuals(const Matrix& Y, const Matrix& M, const Matrix& X, Matrix& E) {
  const Index L = Y.rows();
  const Index T = Y.cols();
  const Index R = M.cols();
  E.resize(L, T);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < T; ++t) {
    double* e = E.col(t).data();
    const double* y = Y.col(t).data();
    for (Index l = 0; l < L; ++l) e[l] = y[l];
    Index r = 0;
    // Four endmembers per sweep; each entry still subtracts them in order.
    for (; r + 4 <= R; r += 4) {
      const double x0 = X(r, t), x1 = X(r + 1, t), x2 = X(r + 2, t), x3 = X(r + 3, t);
      const double* m0 = M.col(r).data();
      const double* m1 = M.col(r + 1).data();
      const double* m2 = M.col(r + 2).data();
      const double* m3 = M.col(r + 3).data();
      for (Index l = 0; l < L; ++l)
        e[l] = (((e[l] - m0[l] * x0) - m1[l] * x1) - m2[l] * x2) - m3[l] * x3;
    }
    for (; r < R; ++r) {
      const double x = X(r, t);
      const double* m = M.col(r).data();
      for (Index l = 0; l < L; ++l) e[l] -= m[l] * x;
    }
  }
}

void band_square_sums(const Matrix& E, Vector& s) {
  const Index L = E.rows();
  const Index T = E.cols();
  s.resize(L);
  const Index blocks = (L + kBandBlock - 1) / kBandBlock;
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < blocks; ++b) {
    const Index l0 = b * kBandBlock;
    const Index l1 = std::min(L, l0 + kBandBlock);
    std::array<CompensatedSum, kBandBlock> acc{};
    for (Index t = 0; t < T; ++t) {
      const double* e = E.col(t).data();
      for (Index l = l0; l < l1; ++l) acc[l - l0].add(e[l] * e[l]);
    }
    for (Index l = l0; l < l1; ++l) s[l] = acc[l - l0].value();
  }
}

void weighted_gradient(const Matrix& M, const Matrix& E, const Vector& w,
                       double scale, Matrix& G) {
  const Index L = E.rows();
  const Index T = E.cols();
  const Index R = M.cols();
  G.resize(R, T);
  // Column l of Mt is row l of M, so the band loop below runs over
  // contiguous memory and vectorizes across r.
  const Matrix Mt = M.transpose();
  // Pixels are handled in pairs to reuse each loaded row of M; every entry
  // still accumulates over l = 0..L-1 in order.
  const Index pairs = (T + 1) / 2;
#pragma omp parallel
  {
    Vector acc(2 * R);
#pragma omp for schedule(static)
    for (Index p = 0; p < pairs; ++p) {
      const Index t0 = 2 * p;
      const bool two = t0 + 1 < T;
      const double* e0 = E.col(t0).data();
      const double* e1 = two ? E.col(t0 + 1).data() : e0;
      double* a0 = acc.data();
      double* a1 = a0 + R;
      for (Index r = 0; r < 2 * R; ++r) a0[r] = 0.0;
      for (Index l = 0; l < L; ++l) {
        const double we0 = w[l] * e0[l];
        const double we1 = w[l] * e1[l];
        const double* m = Mt.col(l).data();
        for (Index r = 0; r < R; ++r) {
          a0[r] += m[r] * we0;
          a1[r] += m[r] * we1;
        }
      }
      double* g0 = G.col(t0).data();
      for (Index r = 0; r < R; ++r) g0[r] = scale * a0[r];
      if (two) {
        double* g1 = G.col(t0 + 1).data();
        for (Index r = 0; r < R; ++r) g1[r] = scale * a1[r];
      }
    }
  }
}

}  // namespace cusal::kernels
