#include "cli.hpp"

#include "cusal/experiment.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace unmix_cli {

namespace fs = std::filesystem;
using namespace cusal;

namespace {

constexpr const char* kDefaultsFooter = R"(Defaults:
  rho 0.1, max outer iterations 1000, max inner iterations 50,
  inner tolerance 1e-6 (relative gradient norm), inner step: Barzilai-Borwein
  with Armijo halving from eta = 1 / (||M||_F^2 / sigma^2 + rho * coupling),
  stopping thresholds eps_primal = eps_dual = sqrt(R*T) * 1e-5,
  divergence patience 3 (stop after three consecutive primal-residual
  increases).
  Bandwidth tuning: sigma0^2 = R/(8L) ||Y - M X_LS||_F^2 floored at
  1e-6 * max(1, ||Y||_F / sqrt(L*T)); accept when the fit ratio is < 2;
  grow by 1.2; restart at sigma0/p beyond 1000 sigma0; at most 60 attempts.
  Starts: FCLS (cusal-fc), nonnegative LS (cusal-sp). Baseline ADMM:
  tolerance 1e-10, at most 20000 iterations per pixel.
  Synthetic data: Dirichlet(1) abundances, SNR on the clean signal,
  b ~ U(-3, 3), endmember angles >= 10 degrees. SAD is in radians.
Exit codes: 0 ok, 1 internal error, 2 bad input, 3 diverged, 4 bandwidth tuning failed.)";

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Diverged:
    case ErrorCode::NonFiniteIterate:
    case ErrorCode::InnerSolverFailure:
      return kExitDiverged;
    case ErrorCode::TuningFailed:
      return kExitTuningFailed;
    default:
      return kExitInput;
  }
}

double parse_snr(const std::string& text) {
  if (text == "inf" || text == "+inf" || text == "Inf") return std::numeric_limits<double>::infinity();
  const auto v = io::parse_double_list(text);
  if (v.size() != 1) throw Error(ErrorCode::ParseError, "bad SNR '" + text + "'");
  return v.front();
}

std::vector<Index> parse_exclude(const std::string& text) {
  std::vector<Index> out;
  for (long long b : io::parse_index_list(text)) {
    if (b < 1) throw Error(ErrorCode::InvalidInput, "band numbers in --exclude start at 1");
    out.push_back(static_cast<Index>(b - 1));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

struct GenerateArgs {
  std::string model = "lmm";
  Index R = 3, L = 244, T = 2500;
  std::string snr = "35";
  Index corrupt = 0;
  std::uint64_t seed = 0;
  std::string b_range = "-3,3";
  std::optional<Index> K;
  double min_angle = 10.0;
  std::string endmembers;
  std::string out_dir = ".";
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  spec.model = parse_mixing_model(a.model);
  spec.R = a.R;
  spec.L = a.L;
  spec.T = a.T;
  spec.snr_db = parse_snr(a.snr);
  spec.n_corrupt = a.corrupt;
  spec.sparsity_K = a.K;
  spec.seed = a.seed;
  const auto b = io::parse_double_list(a.b_range);
  if (b.size() != 2) throw Error(ErrorCode::ParseError, "--b-range needs two values");
  spec.b_range = {b[0], b[1]};
  std::optional<Matrix> M_given;
  if (!a.endmembers.empty()) M_given = io::read_matrix(a.endmembers);

  const GeneratedScene scene = generate_scene(spec, a.min_angle, M_given);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  io::write_matrix(dir / "Y.txt", scene.cube.Y.data());
  io::write_matrix(dir / "M.txt", scene.M.data());
  io::write_matrix(dir / "X_true.txt", scene.cube.truth.X_true.data());
  io::write_key_values(dir / "truth-meta.txt", truth_metadata(spec, scene.cube.truth));
  out << "wrote Y.txt M.txt X_true.txt truth-meta.txt to " << dir.string() << '\n';
  return kExitOk;
}

struct UnmixArgs {
  std::string algorithm;
  std::string Y, M;
  std::string out = "X_hat.txt";
  std::optional<double> sigma;
  bool sigma_auto = false;
  double rho = SolverConfig{}.rho;
  double lambda = 0.0;
  int max_iters = SolverConfig{}.max_outer_iters;
  int max_inner_iters = SolverConfig{}.max_inner_iters;
  int patience = SolverConfig{}.divergence_patience;
  std::string report_path;
};

int cmd_unmix(const UnmixArgs& a, std::ostream& out, std::ostream& err) {
  const Algorithm algorithm = parse_algorithm(a.algorithm);
  const ProblemHandle handle =
      validate_problem(ObservationMatrix(io::read_matrix(a.Y)),
                       EndmemberMatrix(io::read_matrix(a.M)));
  for (ProblemWarning w : handle.warnings())
    if (w == ProblemWarning::RankDeficiency)
      err << "warning: M^T M is badly conditioned (" << handle.gram_condition() << ")\n";

  UnmixOptions options;
  options.sigma = a.sigma_auto ? std::nullopt : a.sigma;
  options.rho = a.rho;
  options.lambda = a.lambda;
  options.max_outer_iters = a.max_iters;
  options.max_inner_iters = a.max_inner_iters;
  options.divergence_patience = a.patience;
  const UnmixOutcome outcome = run_unmix(algorithm, handle, options);

  io::write_matrix(a.out, outcome.X.data());
  if (!a.report_path.empty()) {
    std::ostringstream report;
    write_unmix_report(report, outcome);
    write_text(a.report_path, report.str());
  }
  out << "ratio\t" << io::format_double(outcome.ratio) << '\n';
  if (outcome.report && !outcome.tuning &&
      outcome.report->termination_reason == TerminationReason::PrimalIncreased) {
    err << "primal residual increased at iteration " << outcome.report->iterations_run
        << "; try another --sigma or --sigma-auto\n";
    return kExitDiverged;
  }
  return kExitOk;
}

struct EvalArgs {
  std::string metric;
  std::string truth, estimate;
  std::string M;
  std::string exclude;
  bool degrees = false;
  std::string append;
  std::string algorithm = "-";
  std::string n_corrupt = "-";
  std::string seed = "-";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const MetricName metric = parse_metric_name(a.metric);
  const Matrix truth = io::read_matrix(a.truth);
  const Matrix estimate = io::read_matrix(a.estimate);
  MetricResult r{metric, 0.0, 0};
  std::string label = to_string(metric);
  switch (metric) {
    case MetricName::RMSE: r = rmse(truth, estimate); break;
    case MetricName::SRE_dB: r = sre_db(truth, estimate); break;
    case MetricName::SAD_rad: {
      const auto exclude = parse_exclude(a.exclude);
      r = a.M.empty() ? sad(truth, estimate, exclude)
                      : sad_reconstruction(truth, io::read_matrix(a.M), estimate, exclude);
      if (a.degrees) {
        r.value *= 180.0 / std::numbers::pi;
        label = "SAD_deg";
      }
      break;
    }
  }
  const std::string value = io::format_double(r.value);
  out << label << '\t' << value << '\n';
  if (!a.append.empty()) {
    const bool fresh = !fs::exists(a.append) || fs::file_size(a.append) == 0;
    std::ofstream f(a.append, std::ios::app | std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot append to " + a.append);
    if (fresh) f << "algorithm\tn_corrupt\tseed\tmetric\tvalue\n";
    f << a.algorithm << '\t' << a.n_corrupt << '\t' << a.seed << '\t' << label << '\t'
      << value << '\n';
  }
  return kExitOk;
}

int cmd_experiment(const std::string& config_path, const std::string& out_path,
                   std::ostream& out) {
  const ExperimentConfig config = load_experiment_config(config_path);
  const std::vector<ExperimentRow> rows = run_experiment(config, threads_from_env(1));
  std::ostringstream table;
  write_experiment_tsv(table, rows);
  if (out_path.empty() || out_path == "-")
    out << table.str();
  else
    write_text(out_path, table.str());
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust hyperspectral unmixing by correntropy maximization", "unmix"};
  app.footer(kDefaultsFooter);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  GenerateArgs g;
  CLI::App* gen = app.add_subcommand("generate", "Write a synthetic scene (Y, M, X_true, truth-meta)");
  gen->add_option("--model", g.model, "Mixing model: lmm or ppnmm");
  gen->add_option("--R", g.R, "Number of endmembers");
  gen->add_option("--L", g.L, "Number of bands");
  gen->add_option("--T", g.T, "Number of pixels");
  gen->add_option("--snr", g.snr, "SNR in dB on the clean signal; inf disables noise");
  gen->add_option("--corrupt", g.corrupt, "Number of bands replaced by U[0,1] values");
  gen->add_option("--seed", g.seed, "Random seed");
  gen->add_option("--b-range", g.b_range, "PPNMM coefficient interval lo,hi");
  gen->add_option("--K", g.K, "Nonzero abundances per pixel (default: all R)");
  gen->add_option("--min-angle", g.min_angle, "Minimum endmember angle in degrees");
  gen->add_option("--endmembers", g.endmembers, "Use this endmember matrix file instead of generating one");
  gen->add_option("--out-dir", g.out_dir, "Output directory");

  UnmixArgs u;
  CLI::App* unm = app.add_subcommand("unmix", "Estimate abundances");
  unm->add_option("algorithm", u.algorithm, "ls, fcls, sunsal-sparse, cusal-fc or cusal-sp")->required();
  unm->add_option("Y", u.Y, "Observation matrix file")->required()->check(CLI::ExistingFile);
  unm->add_option("M", u.M, "Endmember matrix file")->required()->check(CLI::ExistingFile);
  unm->add_option("--out", u.out, "Abundance output file");
  auto* sigma_opt = unm->add_option("--sigma", u.sigma, "Fixed kernel bandwidth (default: tuned)");
  unm->add_flag("--sigma-auto", u.sigma_auto, "Tune the bandwidth (the default)")->excludes(sigma_opt);
  unm->add_option("--rho", u.rho, "ADMM penalty");
  unm->add_option("--lambda", u.lambda, "l1 weight for the sparse methods");
  unm->add_option("--max-iters", u.max_iters, "Outer iteration cap");
  unm->add_option("--max-inner-iters", u.max_inner_iters, "Inner gradient steps per outer iteration");
  unm->add_option("--divergence-patience", u.patience, "Consecutive primal increases that stop a run");
  unm->add_option("--report-path", u.report_path, "Write a report (summary and residual traces as TSV)");

  EvalArgs e;
  CLI::App* ev = app.add_subcommand("eval", "Score an estimate; prints <metric><TAB><value>");
  ev->add_option("metric", e.metric, "rmse, sre or sad")->required();
  ev->add_option("truth", e.truth, "Reference matrix (X_true, or Y for sad)")->required()->check(CLI::ExistingFile);
  ev->add_option("estimate", e.estimate, "Estimate (X_hat, or Y_hat for sad)")->required()->check(CLI::ExistingFile);
  ev->add_option("--M", e.M, "For sad: treat the estimate as abundances and compare Y with M*X_hat");
  ev->add_option("--exclude", e.exclude, "For sad: 1-based bands to skip, e.g. 1-3,105-115");
  ev->add_flag("--degrees", e.degrees, "Report SAD in degrees");
  ev->add_option("--append", e.append, "Append a row to this TSV table");
  ev->add_option("--algorithm", e.algorithm, "Algorithm column for --append");
  ev->add_option("--n-corrupt", e.n_corrupt, "n_corrupt column for --append");
  ev->add_option("--seed", e.seed, "seed column for --append");

  std::string config_path, table_path;
  CLI::App* exp = app.add_subcommand("experiment", "Run a config grid; TSV to stdout or --out (UNMIX_THREADS sets workers)");
  exp->add_option("config", config_path, "Key-value config file")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", table_path, "Output TSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return kExitInput;
  }

  try {
    if (*gen) return cmd_generate(g, out);
    if (*unm) return cmd_unmix(u, out, err);
    if (*ev) return cmd_eval(e, out);
    if (*exp) return cmd_experiment(config_path, table_path, out);
  } catch (const Error& ex) {
    err << "error (" << to_string(ex.code()) << "): " << ex.what() << '\n';
    return exit_code(ex.code());
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace unmix_cli
