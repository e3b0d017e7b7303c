#include "mbi/baselines.hpp"
#include "mbi/csv.hpp"
#include "mbi/error.hpp"
#include "mbi/fit.hpp"
#include "mbi/imputation.hpp"
#include "mbi/patterns.hpp"
#include "mbi/simulation.hpp"
#include "mbi/tuning.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace mbi;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitPattern = 3;
constexpr int kExitFit = 4;

struct RunConfig {
  std::string data;
  std::string response = "y";
  std::string sources;
  std::string lambda = "auto";
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
  bool dump_imputations = false;
  bool warm_start = false;
  int verbose = 0;
  // simulate
  std::string setting = "1";
  std::vector<double> rho;
  int reps = 10;
  std::vector<std::string> methods{"proposed", "cc", "si"};
  std::string out;
};

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidRho:
      return kExitParse;
    case ErrorCode::NonBlockRow:
    case ErrorCode::UnobservedCovariate:
    case ErrorCode::EmptyDonor:
    case ErrorCode::NoDonorRows:
      return kExitPattern;
    default:
      return kExitFit;
  }
}

std::vector<double> parse_lambdas(const std::string& text) {
  std::vector<double> out;
  if (text == "auto") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !(v >= 0.0)) {
      throw Error(ErrorCode::ParseError, "bad --lambda entry '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::ParseError, "--lambda is empty");
  return out;
}

FitOptions fit_options(const RunConfig& cfg) {
  FitOptions o;
  o.initializer.seed = cfg.seed;
  o.imputation.lasso.seed = cfg.seed;
  return o;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  return f;
}

std::string join(const IndexList& v, int base = 1) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i] + base);
  }
  return s;
}

std::string signature_text(const std::vector<bool>& sig) {
  std::string s;
  for (bool b : sig) s += b ? '1' : '0';
  return s;
}

void write_imputations(const fs::path& path, const DataSet& data, const PatternIndex& idx,
                       const ImputationSet& set) {
  auto out = open_out(path);
  out << "group,donor,row";
  for (const auto& name : data.column_names()) out << ',' << name;
  out << '\n';
  for (int r = 0; r < set.num_groups(); ++r) {
    const auto& g = idx.groups[r];
    for (int d = 0; d < g.donor_count(); ++d) {
      const ImputedView& v = set.view(r, d);
      for (Index i = 0; i < v.values.rows(); ++i) {
        out << r + 1 << ',' << v.donor + 1 << ',' << v.rows[i] + 1;
        for (Index j = 0; j < v.values.cols(); ++j) out << ',' << format_double(v.values(i, j));
        out << '\n';
      }
    }
  }
}

void write_summary(std::ostream& out, const DataSet& data, const FitProblem& problem, const PathResult* path) {
  const PatternIndex& idx = problem.index;
  out << "rows " << data.rows() << "  covariates " << data.cols() << "  sources " << data.num_sources() << '\n';
  out << "groups " << idx.num_groups();
  if (idx.complete_group) {
    out << "  complete-case group " << *idx.complete_group + 1 << '\n';
  } else {
    out << "  no complete-case group\n";
  }
  for (int r = 0; r < idx.num_groups(); ++r) {
    const auto& g = idx.groups[r];
    out << "group " << r + 1 << "  sources " << signature_text(g.signature) << "  n " << g.size()
        << "  observed " << g.observed.size() << "  G(" << r + 1 << ")={" << join(g.donors) << "}\n";
  }
  const FitReadiness ready = validate_for_fit(idx, problem.options.min_group_size);
  for (const auto& gr : ready.groups) {
    if (gr.below_floor) out << "warning: group " << gr.group + 1 << " has only " << gr.size << " rows\n";
  }
  out << "imputation routes (group, donor, target, pooled rows, predictors, route)\n";
  for (const auto& rt : ready.routes) {
    out << "  " << rt.group + 1 << ' ' << rt.donor + 1 << ' ' << data.column_names()[rt.target] << ' '
        << rt.pooled_rows << ' ' << rt.predictors << ' ' << (rt.l1 ? "l1" : "glm") << '\n';
  }
  if (!path) return;
  const FitResult& best = path->best();
  out << std::fixed << std::setprecision(3);
  out << "selected lambda " << best.lambda << "  df " << best.active_set.size() << "  bic "
      << path->bic[path->selected].value << "  iterations " << best.iterations
      << (best.converged ? "  converged" : "  not converged") << '\n';
  out << "components (group, t1, t2, reduced, orthogonality)\n";
  for (const auto& gs : best.groups) {
    out << "  " << gs.group + 1 << ' ' << gs.t1 << ' ' << gs.t2 << ' ' << (gs.reduced ? "yes" : "no") << ' '
        << std::scientific << std::setprecision(2) << gs.orthogonality << std::fixed << std::setprecision(3)
        << '\n';
  }
  out << "path (lambda, df, bic, converged)\n";
  for (std::size_t i = 0; i < path->grid.size(); ++i) {
    out << "  " << path->grid[i] << ' ' << path->fits[i].active_set.size() << ' ' << path->bic[i].value << ' '
        << (path->fits[i].converged ? 1 : 0) << (static_cast<int>(i) == path->selected ? "  *" : "") << '\n';
  }
}

struct Loaded {
  DataSet data;
  FitProblem problem;
};

std::unique_ptr<Loaded> load(const RunConfig& cfg) {
  DataSet data = read_csv_file(cfg.data, cfg.response, cfg.sources);
  auto out = std::unique_ptr<Loaded>(new Loaded{data, FitProblem(data, fit_options(cfg))});
  return out;
}

PathResult fit_path(const RunConfig& cfg, const FitProblem& problem) {
  std::vector<double> grid = parse_lambdas(cfg.lambda);
  if (grid.empty()) grid = default_lambda_grid(problem);
  PathOptions po;
  po.warm_start = cfg.warm_start;
  return run_path(problem, grid, po);
}

int cmd_fit(const RunConfig& cfg) {
  const auto loaded = load(cfg);
  const DataSet& data = loaded->data;
  const FitProblem& problem = loaded->problem;
  const PathResult path = fit_path(cfg, problem);
  const FitResult& best = path.best();
  fs::create_directories(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  {
    auto out = open_out(dir / "coefficients.csv");
    out << "name,coefficient,selected\n";
    out << "(intercept)," << format_double(best.intercept) << ",1\n";
    std::vector<bool> sel(static_cast<std::size_t>(data.cols()), false);
    for (int j : best.active_set) sel[j] = true;
    for (Index j = 0; j < data.cols(); ++j) {
      out << data.column_names()[j] << ',' << format_double(best.beta(j)) << ',' << (sel[j] ? 1 : 0) << '\n';
    }
  }
  {
    auto out = open_out(dir / "path.csv");
    write_path_csv(out, path);
  }
  {
    auto out = open_out(dir / "summary.txt");
    out << "seed " << cfg.seed << '\n';
    write_summary(out, data, problem, &path);
  }
  if (cfg.dump_imputations) write_imputations(dir / "imputations.csv", data, problem.index, problem.views);
  std::cout << "selected lambda " << format_double(best.lambda) << ", " << best.active_set.size()
            << " covariates; outputs in " << dir.string() << '\n';
  if (cfg.verbose) write_summary(std::cout, data, problem, &path);
  return 0;
}

int cmd_impute(const RunConfig& cfg) {
  const auto loaded = load(cfg);
  fs::create_directories(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  write_imputations(dir / "imputations.csv", loaded->data, loaded->problem.index, loaded->problem.views);
  auto out = open_out(dir / "summary.txt");
  out << "seed " << cfg.seed << '\n';
  write_summary(out, loaded->data, loaded->problem, nullptr);
  std::cout << "imputations written to " << (dir / "imputations.csv").string() << '\n';
  return 0;
}

int cmd_diagnose(const RunConfig& cfg) {
  const auto loaded = load(cfg);
  const FitProblem& problem = loaded->problem;
  const PathResult path = fit_path(cfg, problem);
  const FitResult& best = path.best();
  fs::create_directories(cfg.out_dir);
  const fs::path dir(cfg.out_dir);

  GmmObjective objective(*problem.system, PenaltySpec{best.lambda, problem.options.a}, problem.options.gmm);
  objective.refresh(best.raw_beta);
  const MatrixXd v = gmm_asymptotic_variance(*problem.system, objective.reduction(), best.raw_beta, best.active_set);
  {
    auto out = open_out(dir / "vhat.csv");
    out << "name";
    for (int j : best.active_set) out << ',' << loaded->data.column_names()[j];
    out << '\n';
    for (Index a = 0; a < v.rows(); ++a) {
      out << loaded->data.column_names()[best.active_set[a]];
      for (Index b = 0; b < v.cols(); ++b) out << ',' << format_double(v(a, b));
      out << '\n';
    }
  }
  auto report = open_out(dir / "gap.txt");
  report << "selected lambda " << format_double(best.lambda) << "  active " << best.active_set.size() << '\n';
  if (best.active_set.empty()) {
    report << "efficiency gap: not applicable (empty active set)\n";
  } else {
    try {
      const EfficiencyGap gap = efficiency_gap(*problem.system, objective.reduction(), best.raw_beta, best.active_set);
      report << "min eigenvalue of V1 - V " << format_double(gap.min_eigenvalue) << '\n';
      report << "scale ||V1|| " << format_double(gap.scale) << '\n';
      report << "psd (tolerance 1e-8 * scale) " << (gap.psd ? "true" : "false") << '\n';
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoCompleteGroup) throw;
      report << "efficiency gap: not applicable (no complete-case group)\n";
    }
  }
  std::cout << "diagnostics written to " << dir.string() << '\n';
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  std::vector<double> rhos = cfg.rho;
  const bool strong = cfg.setting == "strong" || cfg.setting == "0";
  int id = 0;
  if (!strong) {
    try {
      id = std::stoi(cfg.setting);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad --setting '" + cfg.setting + "'");
    }
  }
  if (rhos.empty()) rhos.push_back(strong ? 0.4 : 0.7);
  SimulationOptions so;
  so.methods = cfg.methods;
  so.threads = cfg.threads;
  so.verbose = cfg.verbose > 0;
  std::vector<MetricRow> rows;
  for (double rho : rhos) {
    SettingSpec spec = strong ? strong_signal_preset(rho) : setting_preset(id, rho);
    spec.replications = cfg.reps;
    spec.seed = cfg.seed;
    auto part = run_setting(spec, so);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  std::cout << std::fixed << std::setprecision(3);
  std::cout << "setting  rho    method     FNR    FPR    FNR+FPR  MSE    reps  failed\n";
  for (const auto& r : rows) {
    std::cout << std::setw(7) << r.setting << "  " << r.rho << "  " << std::left << std::setw(9) << r.method
              << std::right << "  " << r.fnr << "  " << r.fpr << "  " << r.fnr_plus_fpr() << "    " << r.mse
              << "  " << std::setw(4) << r.reps_used << "  " << std::setw(6) << r.reps_failed << '\n';
  }
  if (!cfg.out.empty()) {
    auto out = open_out(cfg.out);
    write_metrics_csv(out, rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple block-wise imputation with penalized GMM variable selection"};
  app.set_config("--config", "", "flat key=value file mirroring the flags");
  app.require_subcommand(1);
  RunConfig cfg;
  std::vector<CLI::Option*> verbose_flags;

  auto data_flags = [&](CLI::App* sub) {
    sub->add_option("--data", cfg.data, "CSV with a header row; missing cells are NA or empty")->required()->check(CLI::ExistingFile);
    sub->add_option("--response", cfg.response, "response column name")->capture_default_str();
    sub->add_option("--sources", cfg.sources, "1-based inclusive covariate spans, e.g. 1-12,13-24")->required();
    sub->add_option("--seed", cfg.seed, "seed for every random choice")->capture_default_str();
    sub->add_option("--out-dir", cfg.out_dir, "output directory")->capture_default_str();
    verbose_flags.push_back(sub->add_flag("-v,--verbose", "more output"));
  };

  auto* fit = app.add_subcommand("fit", "select variables and write coefficients, path and summary");
  data_flags(fit);
  fit->add_option("--lambda", cfg.lambda, "comma list or auto")->capture_default_str();
  fit->add_option("--threads", cfg.threads, "thread cap")->check(CLI::PositiveNumber);
  fit->add_flag("--dump-imputations", cfg.dump_imputations, "also write imputations.csv");
  fit->add_flag("--warm-start", cfg.warm_start, "start each lambda from the previous solution");

  auto* imp = app.add_subcommand("impute", "write every block-wise imputed view");
  data_flags(imp);

  auto* diag = app.add_subcommand("diagnose", "write the estimated covariance and the efficiency gap");
  data_flags(diag);
  diag->add_option("--lambda", cfg.lambda, "comma list or auto")->capture_default_str();
  diag->add_flag("--warm-start", cfg.warm_start, "start each lambda from the previous solution");

  auto* sim = app.add_subcommand("simulate", "run a simulation setting and print the metric table");
  sim->add_option("--setting", cfg.setting, "1-6, or strong")->capture_default_str();
  sim->add_option("--rho", cfg.rho, "correlation(s)")->delimiter(',');
  sim->add_option("--reps", cfg.reps, "replications")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--methods", cfg.methods, "proposed,cc,si")->delimiter(',');
  sim->add_option("--threads", cfg.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--seed", cfg.seed, "base seed")->capture_default_str();
  sim->add_option("--out", cfg.out, "metrics CSV");
  verbose_flags.push_back(sim->add_flag("-v,--verbose", "per-replication progress"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitParse;
  }
  for (const auto* opt : verbose_flags) cfg.verbose += static_cast<int>(opt->count());

  try {
    if (*fit) return cmd_fit(cfg);
    if (*imp) return cmd_impute(cfg);
    if (*diag) return cmd_diagnose(cfg);
    if (*sim) return cmd_simulate(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFit;
  }
  return 0;
}
