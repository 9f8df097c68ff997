#include "cusal/experiment.hpp"

#include "cusal/baselines.hpp"
#include "cusal/solvers.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace cusal {

namespace {

[[noreturn]] void config_fail(const std::string& what) {
  throw Error(ErrorCode::ParseError, "experiment config: " + what);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <class F>
auto with_key(const std::string& key, F&& parse) -> decltype(parse()) {
  try {
    return parse();
  } catch (const Error& e) {
    config_fail("bad value for '" + key + "': " + e.what());
  } catch (const std::exception& e) {
    config_fail("bad value for '" + key + "': " + e.what());
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  return with_key(key, [&] {
    const auto v = io::parse_index_list(value);
    if (v.size() != 1) throw Error(ErrorCode::ParseError, "expected one integer");
    return v.front();
  });
}

double parse_real(const std::string& key, const std::string& value) {
  return with_key(key, [&] {
    if (value == "inf" || value == "+inf") return std::numeric_limits<double>::infinity();
    const auto v = io::parse_double_list(value);
    if (v.size() != 1) throw Error(ErrorCode::ParseError, "expected one number");
    return v.front();
  });
}

struct Cell {
  std::uint64_t seed;
  Index n_corrupt;
  EndmemberMatrix M;
  SyntheticCube cube;
};

struct Estimate {
  Matrix X;
  std::optional<double> lambda;
};

Matrix unmix_once(Algorithm algorithm, const Cell& cell, const ProblemHandle& handle,
                  double lambda, const ExperimentConfig& config,
                  const UnmixRecorder& record) {
  UnmixOptions options;
  options.rho = config.rho;
  options.lambda = lambda;
  options.max_outer_iters = config.max_outer_iters;
  options.max_inner_iters = config.max_inner_iters;
  options.divergence_patience = config.divergence_patience;
  UnmixRecord rec{algorithm, cell.n_corrupt, cell.seed, lambda, "ok",
                  std::numeric_limits<double>::quiet_NaN(), std::nullopt};
  try {
    UnmixOutcome outcome = run_unmix(algorithm, handle, options);
    if (record) {
      rec.ratio = outcome.ratio;
      rec.tuning = std::move(outcome.tuning);
#pragma omp critical(cusal_unmix_record)
      record(rec);
    }
    return outcome.X.data();
  } catch (const Error& e) {
    if (record) {
      rec.status = to_string(e.code());
#pragma omp critical(cusal_unmix_record)
      record(rec);
    }
    throw;
  }
}

Estimate estimate(Algorithm algorithm, const Cell& cell, const ExperimentConfig& config,
                  const UnmixRecorder& record) {
  const ProblemHandle handle = validate_problem(cell.cube.Y, cell.M);
  if (!uses_lambda(algorithm))
    return {unmix_once(algorithm, cell, handle, 0.0, config, record), {}};
  const Matrix& X_true = cell.cube.truth.X_true.data();
  std::optional<Estimate> best;
  double best_err = std::numeric_limits<double>::infinity();
  std::optional<Error> last_error;
  for (double lambda : config.lambda_grid) {
    try {
      Matrix X = unmix_once(algorithm, cell, handle, lambda, config, record);
      const double err = (X - X_true).squaredNorm();
      if (!best || err < best_err) {
        best_err = err;
        best = Estimate{std::move(X), lambda};
      }
    } catch (const Error& e) {
      last_error = e;
    }
  }
  if (!best) throw *last_error;
  return std::move(*best);
}

}  // namespace

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::LS: return "ls";
    case Algorithm::FCLS: return "fcls";
    case Algorithm::SunsalSparse: return "sunsal-sparse";
    case Algorithm::CusalFC: return "cusal-fc";
    case Algorithm::CusalSP: return "cusal-sp";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Algorithm a : {Algorithm::LS, Algorithm::FCLS, Algorithm::SunsalSparse,
                      Algorithm::CusalFC, Algorithm::CusalSP})
    if (lower == to_string(a)) return a;
  throw Error(ErrorCode::InvalidInput, "unknown algorithm '" + text + "'");
}

GeneratedScene generate_scene(const SyntheticSpec& spec, double min_angle_deg,
                              const std::optional<Matrix>& endmembers) {
  EndmemberMatrix M = endmembers ? EndmemberMatrix(*endmembers)
                                 : gen_endmembers(spec.R, spec.L, spec.seed, min_angle_deg);
  SyntheticCube cube = gen_cube(M, spec);
  return GeneratedScene{std::move(M), std::move(cube)};
}

io::KeyValues truth_metadata(const SyntheticSpec& spec, const GroundTruth& truth) {
  auto join = [](const auto& values, auto&& fmt) {
    std::string out;
    for (const auto& v : values) {
      if (!out.empty()) out += ',';
      out += fmt(v);
    }
    return out;
  };
  io::KeyValues kv;
  kv.emplace_back("seed", std::to_string(truth.seed));
  kv.emplace_back("model", to_string(spec.model));
  kv.emplace_back("R", std::to_string(spec.R));
  kv.emplace_back("L", std::to_string(spec.L));
  kv.emplace_back("T", std::to_string(spec.T));
  kv.emplace_back("snr_db", io::format_double(spec.snr_db));
  kv.emplace_back("K", spec.sparsity_K ? std::to_string(*spec.sparsity_K) : "none");
  kv.emplace_back("noise_sigma", io::format_double(truth.noise_sigma));
  kv.emplace_back("n_corrupt", std::to_string(truth.corrupted_bands.size()));
  kv.emplace_back("corrupted_bands", join(truth.corrupted_bands,
                                          [](Index l) { return std::to_string(l + 1); }));
  if (truth.b) {
    kv.emplace_back("b_range", io::format_double(spec.b_range.first) + "," +
                                   io::format_double(spec.b_range.second));
    std::vector<double> b(truth.b->data(), truth.b->data() + truth.b->size());
    kv.emplace_back("b", join(b, [](double v) { return io::format_double(v); }));
  }
  return kv;
}

UnmixOutcome run_unmix(Algorithm algorithm, const ProblemHandle& handle,
                       const UnmixOptions& options) {
  SolverConfig sc;
  sc.rho = options.rho;
  sc.lambda = options.lambda;
  sc.max_outer_iters = options.max_outer_iters;
  sc.max_inner_iters = options.max_inner_iters;
  sc.divergence_patience = options.divergence_patience;
  if (options.sigma) sc.sigma = *options.sigma;
  sc.validate();

  auto correntropy = [&](CusalVariant variant) {
    if (options.sigma) {
      UnmixResult r = variant == CusalVariant::FullyConstrained ? cusal_fc(handle, sc)
                                                                : cusal_sp(handle, sc);
      return std::make_pair(std::move(r), std::optional<TuningTrace>());
    }
    TuningResult t = tune_sigma(handle, variant, sc);
    return std::make_pair(std::move(t.solution), std::optional<TuningTrace>(t.trace));
  };

  std::optional<AbundanceMatrix> X;
  std::optional<SolverReport> report;
  std::optional<TuningTrace> tuning;
  std::optional<BaselineDiagnostics> diagnostics;
  switch (algorithm) {
    case Algorithm::LS:
      X = solve_ls(handle);
      break;
    case Algorithm::FCLS:
      diagnostics.emplace();
      X = solve_fcls(handle, {}, &*diagnostics);
      break;
    case Algorithm::SunsalSparse:
      diagnostics.emplace();
      X = solve_sunsal_sparse(handle, options.lambda, {}, &*diagnostics);
      break;
    case Algorithm::CusalFC:
    case Algorithm::CusalSP: {
      auto [r, trace] = correntropy(algorithm == Algorithm::CusalFC
                                        ? CusalVariant::FullyConstrained
                                        : CusalVariant::Sparse);
      X = std::move(r.X);
      report = std::move(r.report);
      tuning = std::move(trace);
      break;
    }
  }
  const double ratio = residual_ratio(handle, X->data());
  return UnmixOutcome{algorithm, std::move(*X), uses_lambda(algorithm) ? options.lambda : 0.0,
                      ratio, std::move(report), std::move(tuning), diagnostics};
}

void write_unmix_report(std::ostream& out, const UnmixOutcome& o) {
  out << "algorithm\t" << to_string(o.algorithm) << '\n';
  if (uses_lambda(o.algorithm)) out << "lambda\t" << io::format_double(o.lambda) << '\n';
  out << "ratio\t" << io::format_double(o.ratio) << '\n';
  if (o.diagnostics) {
    out << "pixels_at_max_iters\t" << o.diagnostics->pixels_at_max_iters << '\n';
    out << "max_iterations_used\t" << o.diagnostics->max_iterations_used << '\n';
  }
  if (o.report) {
    out << "termination\t" << to_string(o.report->termination_reason) << '\n';
    out << "iterations\t" << o.report->iterations_run << '\n';
    out << "sigma\t" << io::format_double(o.report->sigma_used) << '\n';
  }
  if (o.tuning) {
    out << "sigma0\t" << io::format_double(o.tuning->sigma0) << '\n';
    out << "tuning_attempts\t" << o.tuning->attempts.size() << '\n';
    out << "\nattempt\tsigma\toutcome\tratio\ttermination\n";
    for (std::size_t i = 0; i < o.tuning->attempts.size(); ++i) {
      const TuningAttempt& a = o.tuning->attempts[i];
      out << i + 1 << '\t' << io::format_double(a.sigma) << '\t' << to_string(a.outcome)
          << '\t' << io::format_double(a.ratio) << '\t' << to_string(a.termination) << '\n';
    }
  }
  if (o.report) {
    out << "\niteration\tprimal_residual\tdual_residual\tobjective\n";
    for (int k = 0; k < o.report->iterations_run; ++k) {
      const auto i = static_cast<std::size_t>(k);
      out << k + 1 << '\t' << io::format_double(o.report->primal_residuals[i]) << '\t'
          << io::format_double(o.report->dual_residuals[i]) << '\t'
          << io::format_double(o.report->objective_trace[i]) << '\n';
    }
  }
}

bool uses_lambda(Algorithm algorithm) {
  return algorithm == Algorithm::SunsalSparse || algorithm == Algorithm::CusalSP;
}

ExperimentConfig parse_experiment_config(const io::KeyValues& kv) {
  ExperimentConfig c;
  bool have_algorithms = false;
  for (const auto& [key, value] : kv) {
    if (key == "model") {
      c.model = with_key(key, [&] { return parse_mixing_model(value); });
    } else if (key == "R") {
      c.R = parse_int(key, value);
    } else if (key == "L") {
      c.L = parse_int(key, value);
    } else if (key == "T") {
      c.T = parse_int(key, value);
    } else if (key == "snr_db") {
      c.snr_db = parse_real(key, value);
    } else if (key == "corrupt_list") {
      const auto v = with_key(key, [&] { return io::parse_index_list(value); });
      c.corrupt_list.assign(v.begin(), v.end());
    } else if (key == "algorithms") {
      have_algorithms = true;
      c.algorithms.clear();
      for (const auto& item : split_list(value))
        c.algorithms.push_back(with_key(key, [&] { return parse_algorithm(item); }));
    } else if (key == "lambda_grid") {
      c.lambda_grid = with_key(key, [&] { return io::parse_double_list(value); });
    } else if (key == "seeds") {
      c.seeds.clear();
      for (long long s : with_key(key, [&] { return io::parse_index_list(value); })) {
        if (s < 0) config_fail("seeds must be nonnegative");
        c.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    } else if (key == "metric") {
      c.metrics.clear();
      for (const auto& item : split_list(value))
        c.metrics.push_back(with_key(key, [&] { return parse_metric_name(item); }));
    } else if (key == "K") {
      if (value == "none" || value.empty())
        c.K.reset();
      else
        c.K = parse_int(key, value);
    } else if (key == "b_range") {
      const auto v = with_key(key, [&] { return io::parse_double_list(value); });
      if (v.size() != 2) config_fail("b_range needs two values");
      c.b_range = {v[0], v[1]};
    } else if (key == "min_angle_deg") {
      c.min_angle_deg = parse_real(key, value);
    } else if (key == "rho") {
      c.rho = parse_real(key, value);
    } else if (key == "max_outer_iters") {
      c.max_outer_iters = static_cast<int>(parse_int(key, value));
    } else if (key == "max_inner_iters") {
      c.max_inner_iters = static_cast<int>(parse_int(key, value));
    } else if (key == "divergence_patience") {
      c.divergence_patience = static_cast<int>(parse_int(key, value));
    } else if (key == "endmembers") {
      c.endmembers = value;
    } else {
      config_fail("unknown key '" + key + "'");
    }
  }
  if (!have_algorithms) config_fail("'algorithms' is required");
  if (c.algorithms.empty()) config_fail("'algorithms' is empty");
  if (c.corrupt_list.empty()) config_fail("'corrupt_list' is empty");
  if (c.seeds.empty()) config_fail("'seeds' is empty");
  if (c.metrics.empty()) config_fail("'metric' is empty");
  const bool sparse = std::any_of(c.algorithms.begin(), c.algorithms.end(), uses_lambda);
  if (sparse && c.lambda_grid.empty()) config_fail("'lambda_grid' is empty");
  for (double l : c.lambda_grid)
    if (l < 0) config_fail("lambda_grid values must be >= 0");
  if (!(c.rho > 0)) config_fail("rho must be > 0");
  if (c.max_outer_iters < 1) config_fail("max_outer_iters must be >= 1");
  if (c.max_inner_iters < 1) config_fail("max_inner_iters must be >= 1");
  if (c.divergence_patience < 1) config_fail("divergence_patience must be >= 1");
  if (c.R < 1 || c.L < 1 || c.T < 1) config_fail("R, L and T must be positive");
  for (Index n : c.corrupt_list)
    if (n < 0 || n > c.L) config_fail("corrupt_list entries must lie in [0, L]");
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(io::read_key_values(path));
}

int threads_from_env(int fallback) {
  const char* env = std::getenv("UNMIX_THREADS");
  if (!env || !*env) return std::max(1, fallback);
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1)
    throw Error(ErrorCode::InvalidInput, "UNMIX_THREADS must be a positive integer");
  return static_cast<int>(v);
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config, int threads,
                                          const UnmixRecorder& record) {
  std::optional<EndmemberMatrix> shared_M;
  if (config.endmembers) {
    shared_M.emplace(io::read_matrix(*config.endmembers));
    if (shared_M->endmembers() != config.R || shared_M->bands() != config.L)
      throw Error(ErrorCode::DimensionMismatch,
                  "endmember file does not match R and L of the config");
  }

  std::vector<Cell> cells;
  for (std::uint64_t seed : config.seeds) {
    for (Index n_corrupt : config.corrupt_list) {
      SyntheticSpec spec;
      spec.model = config.model;
      spec.R = config.R;
      spec.L = config.L;
      spec.T = config.T;
      spec.snr_db = config.snr_db;
      spec.n_corrupt = n_corrupt;
      spec.sparsity_K = config.K;
      spec.seed = seed;
      spec.b_range = config.b_range;
      GeneratedScene scene = generate_scene(
          spec, config.min_angle_deg,
          shared_M ? std::optional<Matrix>(shared_M->data()) : std::nullopt);
      cells.push_back(Cell{seed, n_corrupt, std::move(scene.M), std::move(scene.cube)});
    }
  }

  const Index n_alg = static_cast<Index>(config.algorithms.size());
  const Index n_jobs = static_cast<Index>(cells.size()) * n_alg;
  const Index n_metrics = static_cast<Index>(config.metrics.size());
  std::vector<ExperimentRow> rows(static_cast<std::size_t>(n_jobs * n_metrics));

#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, threads))
  for (Index job = 0; job < n_jobs; ++job) {
    const Cell& cell = cells[static_cast<std::size_t>(job / n_alg)];
    const Algorithm algorithm = config.algorithms[static_cast<std::size_t>(job % n_alg)];
    std::optional<Estimate> est;
    std::string status = "ok";
    try {
      est = estimate(algorithm, cell, config, record);
    } catch (const Error& e) {
      status = to_string(e.code());
    } catch (const std::exception&) {
      status = "InternalError";
    }
    for (Index m = 0; m < n_metrics; ++m) {
      ExperimentRow& row = rows[static_cast<std::size_t>(job * n_metrics + m)];
      row.algorithm = algorithm;
      row.model = config.model;
      row.snr_db = config.snr_db;
      row.n_corrupt = cell.n_corrupt;
      row.K = config.K;
      row.seed = cell.seed;
      row.metric = config.metrics[static_cast<std::size_t>(m)];
      row.value = std::numeric_limits<double>::quiet_NaN();
      row.status = status;
      if (!est) continue;
      row.lambda = est->lambda;
      try {
        const Matrix& X_true = cell.cube.truth.X_true.data();
        switch (row.metric) {
          case MetricName::RMSE: row.value = rmse(X_true, est->X).value; break;
          case MetricName::SRE_dB: row.value = sre_db(X_true, est->X).value; break;
          case MetricName::SAD_rad:
            row.value = sad(cell.cube.Y.data(), cell.M.data() * est->X,
                            cell.cube.truth.corrupted_bands)
                            .value;
            break;
        }
      } catch (const Error& e) {
        row.status = to_string(e.code());
      }
    }
  }

  std::stable_sort(rows.begin(), rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
    if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
    if (a.n_corrupt != b.n_corrupt) return a.n_corrupt < b.n_corrupt;
    if (a.seed != b.seed) return a.seed < b.seed;
    return a.metric < b.metric;
  });
  return rows;
}

void write_experiment_tsv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << kExperimentHeader << '\n';
  for (const ExperimentRow& r : rows) {
    out << to_string(r.algorithm) << '\t' << to_string(r.model) << '\t'
        << io::format_double(r.snr_db) << '\t' << r.n_corrupt << '\t'
        << (r.K ? std::to_string(*r.K) : std::string("-")) << '\t' << r.seed << '\t'
        << to_string(r.metric) << '\t' << io::format_double(r.value) << '\t' << r.status
        << '\t' << (r.lambda ? io::format_double(*r.lambda) : std::string("-")) << '\n';
  }
}

}  // namespace cusal
