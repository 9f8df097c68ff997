#ifndef CUSAL_EXPERIMENT_HPP
#define CUSAL_EXPERIMENT_HPP

#include "cusal/baselines.hpp"
#include "cusal/io.hpp"
#include "cusal/metrics.hpp"
#include "cusal/solvers.hpp"
#include "cusal/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cusal {

enum class Algorithm { LS, FCLS, SunsalSparse, CusalFC, CusalSP };

const char* to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& text);
bool uses_lambda(Algorithm algorithm);

struct GeneratedScene {
  EndmemberMatrix M;
  SyntheticCube cube;
};

/// Endmembers from gen_endmembers(R, L, seed, min_angle_deg) unless given,
/// then gen_cube. Experiment cells are built the same way.
GeneratedScene generate_scene(const SyntheticSpec& spec, double min_angle_deg,
                              const std::optional<Matrix>& endmembers = std::nullopt);

/// Seed, model, sizes, noise level, 1-based corrupted bands and PPNMM
/// coefficients as key-value pairs.
io::KeyValues truth_metadata(const SyntheticSpec& spec, const GroundTruth& truth);

/// Settings for one unmixing run. An unset sigma means automatic tuning.
struct UnmixOptions {
  std::optional<double> sigma;
  double rho = SolverConfig{}.rho;
  double lambda = 0.0;
  int max_outer_iters = SolverConfig{}.max_outer_iters;
  int max_inner_iters = SolverConfig{}.max_inner_iters;
  int divergence_patience = SolverConfig{}.divergence_patience;
};

struct UnmixOutcome {
  Algorithm algorithm;
  AbundanceMatrix X;
  double lambda = 0.0;
  /// ||Y - M X||_F / ||Y - M X_LS||_F.
  double ratio = 0.0;
  std::optional<SolverReport> report;    ///< correntropy solvers only
  std::optional<TuningTrace> tuning;     ///< when sigma was tuned
  std::optional<BaselineDiagnostics> diagnostics;  ///< ADMM baselines only
};

UnmixOutcome run_unmix(Algorithm algorithm, const ProblemHandle& handle,
                       const UnmixOptions& options);

/// Summary as `key<TAB>value` lines, then the tuning attempts and the
/// per-iteration residual trace as TSV blocks separated by blank lines.
void write_unmix_report(std::ostream& out, const UnmixOutcome& outcome);

/// Regularization weights tried for the sparse methods unless configured.
inline const std::vector<double> kDefaultLambdaGrid{1e-5, 5e-5, 1e-4, 5e-4,
                                                    1e-3, 1e-2, 1e-1};

struct ExperimentConfig {
  MixingModel model = MixingModel::LMM;
  Index R = 3;
  Index L = 244;
  Index T = 400;
  double snr_db = 35.0;
  std::vector<Index> corrupt_list{0};
  std::vector<Algorithm> algorithms;
  std::vector<double> lambda_grid = kDefaultLambdaGrid;
  std::vector<std::uint64_t> seeds{1};
  std::vector<MetricName> metrics{MetricName::RMSE};
  std::optional<Index> K;
  std::pair<double, double> b_range{-3.0, 3.0};
  double min_angle_deg = 10.0;
  double rho = 0.1;
  int max_outer_iters = 1000;
  int max_inner_iters = 50;
  int divergence_patience = SolverConfig{}.divergence_patience;
  /// Matrix file used for every cell instead of generated endmembers.
  std::optional<std::filesystem::path> endmembers;
};

/// Keys: model R L T snr_db corrupt_list algorithms lambda_grid seeds metric
/// K b_range min_angle_deg rho max_outer_iters max_inner_iters
/// divergence_patience endmembers. Only `algorithms`
/// is required. Unknown keys and empty lists are ParseErrors.
ExperimentConfig parse_experiment_config(const io::KeyValues& kv);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ExperimentRow {
  Algorithm algorithm;
  MixingModel model;
  double snr_db;
  Index n_corrupt;
  std::optional<Index> K;
  std::uint64_t seed;
  MetricName metric;
  double value;
  std::string status;             ///< "ok" or the error code name
  std::optional<double> lambda;   ///< selected weight for sparse methods
};

/// Worker count from UNMIX_THREADS, falling back to `fallback`.
int threads_from_env(int fallback = 1);

/// One solver run inside an experiment (sparse methods run once per lambda).
struct UnmixRecord {
  Algorithm algorithm;
  Index n_corrupt;
  std::uint64_t seed;
  double lambda;
  std::string status;                 ///< "ok" or the error code name
  double ratio;                       ///< NaN on error
  std::optional<TuningTrace> tuning;
};

/// Called once per solver run, serialized across workers, in no fixed order.
using UnmixRecorder = std::function<void(const UnmixRecord&)>;

/// Runs every (seed, n_corrupt, algorithm) cell. Sparse methods keep the
/// lambda with the smallest abundance error. Rows come back in canonical
/// order, so the thread count never changes the result.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config,
                                          int threads = 1,
                                          const UnmixRecorder& record = {});

inline constexpr const char* kExperimentHeader =
    "algorithm\tmodel\tsnr\tn_corrupt\tK\tseed\tmetric\tvalue\tstatus\tlambda";

void write_experiment_tsv(std::ostream& out, const std::vector<ExperimentRow>& rows);

}  // namespace cusal

#endif  // CUSAL_EXPERIMENT_HPP
