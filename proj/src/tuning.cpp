#include "mbi/tuning.hpp"

#include "mbi/csv.hpp"
#include "mbi/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace mbi {

RssBreakdown rss(const PatternIndex& idx, const ImputationSet& views, const VectorXd& response,
                 const VectorXd& beta, double intercept) {
  RssBreakdown out;
  out.per_group.assign(idx.num_groups(), 0.0);
  for (int r = 0; r < idx.num_groups(); ++r) {
    const auto& g = idx.groups[r];
    const VectorXd y = gather(response, g.members).array() - intercept;
    double sum = 0.0;
    for (int pos = 0; pos < g.donor_count(); ++pos) {
      sum += (y - views.view(r, pos).values * beta).squaredNorm();
    }
    out.per_group[r] = g.donor_count() > 0 ? sum / g.donor_count() : 0.0;
    out.total += out.per_group[r];
  }
  return out;
}

BicScore mbi_bic(double rss_total, int df, int n) {
  BicScore s;
  s.rss = rss_total;
  s.df = df;
  const double big_n = static_cast<double>(n);
  if (!(rss_total > 1e-300)) {
    s.degenerate = true;
    s.value = -std::numeric_limits<double>::infinity();
    return s;
  }
  s.value = big_n * std::log(rss_total / big_n) + df * std::log(big_n);
  return s;
}

BicScore mbi_bic(const FitProblem& problem, const FitResult& fit) {
  const RssBreakdown r =
      rss(problem.index, problem.views, problem.data.response(), fit.beta, fit.centered_intercept);
  return mbi_bic(r.total, static_cast<int>(fit.active_set.size()), static_cast<int>(problem.data.rows()));
}

std::vector<double> default_lambda_grid(const FitProblem& problem, int count) {
  const PatternIndex& idx = problem.index;
  int source = -1;
  if (idx.complete_group) {
    source = *idx.complete_group;
  } else {
    for (int r = 0; r < idx.num_groups(); ++r) {
      if (source < 0 || idx.groups[r].size() > idx.groups[source].size()) source = r;
    }
  }
  const auto& g = idx.groups.at(source);
  const MatrixXd x = gather_columns(gather_rows(problem.data.values(), g.members), g.observed);
  const VectorXd y = gather(problem.data.response(), g.members);
  const Standardizer st(x);
  double lmax = lasso_lambda_max(st.apply(x), y);
  if (!(lmax > 0.0)) lmax = 1.0;
  auto grid = log_grid(lmax, lmax / 1000.0, count);
  std::sort(grid.begin(), grid.end());
  return grid;
}

PathResult run_path(const FitProblem& problem, std::vector<double> grid, const PathOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "lambda grid is empty");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  PathResult path;
  path.grid = grid;
  std::optional<VectorXd> start;
  for (double lambda : grid) {
    FitResult f;
    BicScore b;
    bool ok = true;
    std::string err;
    try {
      f = fit(problem, lambda, options.warm_start ? start : std::nullopt);
      b = mbi_bic(problem, f);
      if (options.warm_start) start = f.raw_beta;
    } catch (const Error& e) {
      ok = false;
      err = e.what();
      f.lambda = lambda;
      b.value = std::numeric_limits<double>::infinity();
    }
    path.fits.push_back(std::move(f));
    path.bic.push_back(b);
    path.ok.push_back(ok);
    path.errors.push_back(std::move(err));
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!path.ok[i] || !path.fits[i].converged) continue;
    // Values within rounding of each other count as ties.
    const double best = path.selected < 0 ? 0.0 : path.bic[static_cast<std::size_t>(path.selected)].value;
    if (path.selected < 0 || path.bic[i].value <= best + 1e-8 * std::max(1.0, std::abs(best))) {
      path.selected = static_cast<int>(i);
    }
  }
  if (path.selected < 0) {
    std::string msg = "no lambda produced a converged fit";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      msg += "; lambda=" + format_double(grid[i]) + ": " +
             (path.ok[i] ? std::string("not converged") : path.errors[i]);
    }
    throw Error(ErrorCode::AllFitsFailed, msg);
  }
  return path;
}

void write_path_csv(std::ostream& out, const PathResult& path) {
  out << "lambda,rss,df,bic,converged,active\n";
  for (std::size_t i = 0; i < path.grid.size(); ++i) {
    const auto& f = path.fits[i];
    out << format_double(path.grid[i]) << ',' << format_double(path.bic[i].rss) << ',' << path.bic[i].df << ','
        << format_double(path.bic[i].value) << ',' << (path.ok[i] && f.converged ? 1 : 0) << ','
        << f.active_set.size() << '\n';
  }
}

}  // namespace mbi
