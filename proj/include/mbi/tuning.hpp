#pragma once

#include "mbi/fit.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mbi {

struct RssBreakdown {
  double total = 0.0;
  std::vector<double> per_group;  // indexed by pattern group
};

/// RSS_r = (1/M_r) sum_{k in G(r)} sum_{i in H(r)} (y_i - b0 - x_i^{(k)} beta)^2
/// over every pattern group.
RssBreakdown rss(const PatternIndex& idx, const ImputationSet& views, const VectorXd& response,
                 const VectorXd& beta, double intercept = 0.0);

struct BicScore {
  double value = 0.0;
  double rss = 0.0;
  int df = 0;
  bool degenerate = false;  // RSS <= 0: value is -infinity
};

/// N log(RSS / N) + df log N.
BicScore mbi_bic(double rss_total, int df, int n);
BicScore mbi_bic(const FitProblem& problem, const FitResult& fit);

/// `count` log-spaced values on [lambda_max / 1000, lambda_max], increasing.
/// lambda_max zeroes the lasso on the rows used by the initializer.
std::vector<double> default_lambda_grid(const FitProblem& problem, int count = 20);

struct PathOptions {
  // Each fit starts from the previous lambda's solution instead of the
  // initializer. Off by default: starts far from the initializer wander.
  bool warm_start = false;
};

struct PathResult {
  std::vector<double> grid;  // strictly increasing
  std::vector<FitResult> fits;
  std::vector<BicScore> bic;
  std::vector<bool> ok;       // fit finished without error
  std::vector<std::string> errors;
  int selected = -1;

  const FitResult& best() const { return fits.at(static_cast<std::size_t>(selected)); }
};

/// Fits every lambda and selects the MBI-BIC minimizer among converged fits
/// (ties: larger lambda). Throws AllFitsFailed when nothing converged.
PathResult run_path(const FitProblem& problem, std::vector<double> grid, const PathOptions& options = {});

/// CSV columns: lambda, rss, df, bic, converged, active.
void write_path_csv(std::ostream& out, const PathResult& path);

}  // namespace mbi
