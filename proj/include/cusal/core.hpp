#ifndef CUSAL_CORE_HPP
#define CUSAL_CORE_HPP

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cusal {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Feasibility slack used when tagging abundances as nonnegative or fully
/// constrained.
inline constexpr double kFeasibilityTol = 1e-9;

enum class ErrorCode {
  InvalidInput,
  DimensionMismatch,
  NonFiniteData,
  SingularNormalEquations,
  InnerSolverFailure,
  NonFiniteIterate,
  Diverged,
  TuningFailed,
  GenerationFailed,
  BadMagic,
  ShapeMismatch,
  ParseError,
  UndefinedMetric,
  ZeroNormSpectrum,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Y, bands x pixels. Column t is the spectrum of pixel t.
class ObservationMatrix {
 public:
  explicit ObservationMatrix(Matrix data);
  const Matrix& data() const noexcept { return data_; }
  Index bands() const noexcept { return data_.rows(); }
  Index pixels() const noexcept { return data_.cols(); }

 private:
  Matrix data_;
};

/// M, bands x endmembers. Column r is the spectrum of material r.
class EndmemberMatrix {
 public:
  explicit EndmemberMatrix(Matrix data);
  const Matrix& data() const noexcept { return data_; }
  Index bands() const noexcept { return data_.rows(); }
  Index endmembers() const noexcept { return data_.cols(); }

 private:
  Matrix data_;
};

enum class AbundanceTag { Unconstrained, Nonnegative, FullyConstrained };

/// X, endmembers x pixels. A tag other than Unconstrained is checked on
/// construction against kFeasibilityTol.
class AbundanceMatrix {
 public:
  explicit AbundanceMatrix(Matrix data,
                           AbundanceTag tag = AbundanceTag::Unconstrained);
  const Matrix& data() const noexcept { return data_; }
  AbundanceTag tag() const noexcept { return tag_; }
  Index endmembers() const noexcept { return data_.rows(); }
  Index pixels() const noexcept { return data_.cols(); }

  static bool satisfies(const Matrix& data, AbundanceTag tag,
                        double tol = kFeasibilityTol);

 private:
  Matrix data_;
  AbundanceTag tag_;
};

enum class ProblemWarning { RankDeficiency };

/// Immutable, cheaply copyable bundle of (Y, M) with validated shapes.
class ProblemHandle {
 public:
  const Matrix& Y() const noexcept { return data_->Y; }
  const Matrix& M() const noexcept { return data_->M; }
  Index bands() const noexcept { return data_->Y.rows(); }
  Index pixels() const noexcept { return data_->Y.cols(); }
  Index endmembers() const noexcept { return data_->M.cols(); }
  /// Ratio of extreme eigenvalues of M^T M.
  double gram_condition() const noexcept { return data_->gram_condition; }
  const std::vector<ProblemWarning>& warnings() const noexcept {
    return data_->warnings;
  }

  friend ProblemHandle validate_problem(const ObservationMatrix& Y,
                                        const EndmemberMatrix& M);

 private:
  struct Data {
    Matrix Y;
    Matrix M;
    double gram_condition = 1.0;
    std::vector<ProblemWarning> warnings;
  };
  explicit ProblemHandle(std::shared_ptr<const Data> d) : data_(std::move(d)) {}
  std::shared_ptr<const Data> data_;
};

/// Condition estimate of M^T M above which a RankDeficiency warning is raised.
inline constexpr double kRankWarningCondition = 1e12;

ProblemHandle validate_problem(const ObservationMatrix& Y,
                               const EndmemberMatrix& M);

/// Elementwise max(0, v).
Vector project_nonnegative(const Vector& v);

/// Elementwise shrinkage; |v_i| <= b maps to 0.
Vector soft_threshold(const Vector& v, double b);

/// Euclidean projection of each column onto the probability simplex.
Matrix project_columns_to_simplex(const Matrix& X);

bool all_finite(const Matrix& m);

enum class TerminationReason { ResidualsSmall, PrimalIncreased, MaxIters };
const char* to_string(TerminationReason reason);

/// Step length rule of the inner gradient loops. Both rules backtrack by
/// halving whenever the Armijo condition fails.
enum class InnerStepRule {
  Fixed,            ///< every step starts from eta
  BarzilaiBorwein,  ///< after an accepted step, try s's / s'y next
};

struct SolverConfig {
  double sigma = 1.0;
  double rho = 0.1;
  /// Inner gradient step. Unset means derived from sigma and M.
  std::optional<double> eta;
  double lambda = 0.0;
  /// Unset means sqrt(R*T) * 1e-5.
  std::optional<double> eps_primal;
  std::optional<double> eps_dual;
  int max_outer_iters = 1000;
  int max_inner_iters = 50;
  double inner_tol = 1e-6;
  InnerStepRule inner_step = InnerStepRule::BarzilaiBorwein;
  /// Consecutive primal-residual increases needed to stop with
  /// PrimalIncreased. 1 stops on the first increase.
  int divergence_patience = 3;
  bool sigma_auto = false;

  void validate() const;
};

struct SolverReport {
  int iterations_run = 0;
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
  std::vector<double> objective_trace;
  TerminationReason termination_reason = TerminationReason::MaxIters;
  double sigma_used = 0.0;
};

}  // namespace cusal

#endif  // CUSAL_CORE_HPP
