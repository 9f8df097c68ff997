#include "cusal/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cusal {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteData: return "NonFiniteData";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::InnerSolverFailure: return "InnerSolverFailure";
    case ErrorCode::NonFiniteIterate: return "NonFiniteIterate";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::TuningFailed: return "TuningFailed";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UndefinedMetric: return "UndefinedMetric";
    case ErrorCode::ZeroNormSpectrum: return "ZeroNormSpectrum";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::ResidualsSmall: return "ResidualsSmall";
    case TerminationReason::PrimalIncreased: return "PrimalIncreased";
    case TerminationReason::MaxIters: return "MaxIters";
  }
  return "Unknown";
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

ObservationMatrix::ObservationMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1)
    throw Error(ErrorCode::InvalidInput, "observation matrix must be non-empty");
  if (!data_.allFinite())
    throw Error(ErrorCode::NonFiniteData, "observation matrix has NaN/Inf");
}

EndmemberMatrix::EndmemberMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1)
    throw Error(ErrorCode::InvalidInput, "endmember matrix must be non-empty");
  if (data_.cols() > data_.rows())
    throw Error(ErrorCode::DimensionMismatch,
                "endmember matrix must be tall (R <= L)");
  if (!data_.allFinite())
    throw Error(ErrorCode::NonFiniteData, "endmember matrix has NaN/Inf");
}

bool AbundanceMatrix::satisfies(const Matrix& data, AbundanceTag tag,
                                double tol) {
  if (!data.allFinite()) return false;
  if (tag == AbundanceTag::Unconstrained) return true;
  if (data.size() > 0 && data.minCoeff() < -tol) return false;
  if (tag == AbundanceTag::FullyConstrained) {
    for (Index t = 0; t < data.cols(); ++t)
      if (std::abs(data.col(t).sum() - 1.0) > tol) return false;
  }
  return true;
}

AbundanceMatrix::AbundanceMatrix(Matrix data, AbundanceTag tag)
    : data_(std::move(data)), tag_(tag) {
  if (!data_.allFinite())
    throw Error(ErrorCode::NonFiniteData, "abundance matrix has NaN/Inf");
  if (!satisfies(data_, tag_))
    throw Error(ErrorCode::InvalidInput,
                "abundance matrix violates its constraint tag");
}

ProblemHandle validate_problem(const ObservationMatrix& Y,
                               const EndmemberMatrix& M) {
  if (Y.bands() != M.bands())
    throw Error(ErrorCode::DimensionMismatch,
                "Y has " + std::to_string(Y.bands()) + " bands but M has " +
                    std::to_string(M.bands()));
  if (M.endmembers() > M.bands())
    throw Error(ErrorCode::DimensionMismatch, "more endmembers than bands");

  auto d = std::make_shared<ProblemHandle::Data>();
  d->Y = Y.data();
  d->M = M.data();

  const Matrix gram = d->M.transpose() * d->M;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (lmax <= 0.0)
    d->gram_condition = std::numeric_limits<double>::infinity();
  else if (lmin <= lmax * std::numeric_limits<double>::epsilon())
    d->gram_condition = std::numeric_limits<double>::infinity();
  else
    d->gram_condition = lmax / lmin;
  if (d->gram_condition > kRankWarningCondition)
    d->warnings.push_back(ProblemWarning::RankDeficiency);

  return ProblemHandle(std::move(d));
}

Vector project_nonnegative(const Vector& v) {
  if (!v.allFinite())
    throw Error(ErrorCode::InvalidInput, "project_nonnegative: non-finite input");
  return v.cwiseMax(0.0);
}

Vector soft_threshold(const Vector& v, double b) {
  if (!(b >= 0.0) || !std::isfinite(b))
    throw Error(ErrorCode::InvalidInput, "soft_threshold: threshold must be >= 0");
  if (!v.allFinite())
    throw Error(ErrorCode::InvalidInput, "soft_threshold: non-finite input");
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double z = v[i];
    if (z > b)
      out[i] = z - b;
    else if (z < -b)
      out[i] = z + b;
    else
      out[i] = 0.0;
  }
  return out;
}

Matrix project_columns_to_simplex(const Matrix& X) {
  Matrix out(X.rows(), X.cols());
  std::vector<double> sorted(static_cast<std::size_t>(X.rows()));
  for (Index t = 0; t < X.cols(); ++t) {
    for (Index r = 0; r < X.rows(); ++r) sorted[r] = X(r, t);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      cumsum += sorted[j];
      const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
      if (sorted[j] - candidate > 0.0) theta = candidate;
    }
    double sum = 0.0;
    for (Index r = 0; r < X.rows(); ++r) {
      out(r, t) = std::max(X(r, t) - theta, 0.0);
      sum += out(r, t);
    }
    // Rounding leaves the sum within a few ulps of 1; make it exact-ish.
    if (sum > 0.0) out.col(t) /= sum;
  }
  return out;
}

void SolverConfig::validate() const {
  auto bad = [](const char* what) {
    throw Error(ErrorCode::InvalidInput, std::string("SolverConfig: ") + what);
  };
  if (!(sigma > 0.0) || !std::isfinite(sigma)) bad("sigma must be > 0");
  if (!(rho > 0.0) || !std::isfinite(rho)) bad("rho must be > 0");
  if (eta && !(*eta > 0.0)) bad("eta must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) bad("lambda must be >= 0");
  if (eps_primal && !(*eps_primal > 0.0)) bad("eps_primal must be > 0");
  if (eps_dual && !(*eps_dual > 0.0)) bad("eps_dual must be > 0");
  if (max_outer_iters < 1 || max_inner_iters < 1) bad("iteration caps must be >= 1");
  if (!(inner_tol > 0.0)) bad("inner_tol must be > 0");
  if (divergence_patience < 1) bad("divergence_patience must be >= 1");
}

}  // namespace cusal
