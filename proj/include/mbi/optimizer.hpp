#pragma once

#include "mbi/types.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace mbi {

using ScalarFunction = std::function<double(const VectorXd&)>;
using LineFunction = std::function<double(double)>;

/// Central differences with per-coordinate step h_j = rel_step * max(1, |x_j|).
VectorXd numeric_gradient(const ScalarFunction& f, const VectorXd& x, double rel_step = 1e-6);

struct LineSearchOptions {
  double tolerance = 1e-6;  // relative tolerance on the step length
  int max_backtracks = 60;
  int max_expansions = 60;
  int max_iterations = 200;
  double max_step = std::numeric_limits<double>::infinity();  // cap on alpha
};

struct LineSearchResult {
  double alpha = 0.0;
  double value = 0.0;
  int evaluations = 0;
  bool decreased = false;  // false: no step below phi(0) was found
};

/// Approximate argmin over alpha > 0 of phi. The minimum is bracketed by
/// expansion (or halving when the first trial does not decrease phi) and then
/// refined by golden-section search with parabolic interpolation.
LineSearchResult line_search(const LineFunction& phi, double phi0, double initial_step,
                             const LineSearchOptions& options = {});

/// Interface minimized by `minimize_cg`.
class CgProblem {
 public:
  virtual ~CgProblem() = default;

  /// Called at the start of every outer iteration; the objective must stay
  /// fixed between two calls.
  virtual void refresh(const VectorXd& /*x*/) {}
  /// Undo the last refresh.
  virtual void rollback() {}
  virtual double value(const VectorXd& x) = 0;
  virtual VectorXd gradient(const VectorXd& x);
  /// Point reached from x along s with step alpha (default x + alpha s).
  virtual VectorXd advance(const VectorXd& x, const VectorXd& s, double alpha) const { return x + alpha * s; }
  /// Hook to restrict a search direction before the line search (default: none).
  virtual void project(const VectorXd& /*x*/, const VectorXd& /*gradient*/, VectorXd& /*s*/) const {}
  /// phi(alpha) = value(advance(x, s, alpha)). Problems may specialize this.
  virtual LineFunction line(const VectorXd& x, const VectorXd& s);
};

/// Wraps plain callables; the gradient defaults to central differences.
class FunctionProblem : public CgProblem {
 public:
  explicit FunctionProblem(ScalarFunction f, std::function<VectorXd(const VectorXd&)> grad = {})
      : f_(std::move(f)), grad_(std::move(grad)) {}
  double value(const VectorXd& x) override { return f_(x); }
  VectorXd gradient(const VectorXd& x) override { return grad_ ? grad_(x) : CgProblem::gradient(x); }

 private:
  ScalarFunction f_;
  std::function<VectorXd(const VectorXd&)> grad_;
};

struct CgOptions {
  double tolerance = 1e-4;  // on max_j |x_j^{(k)} - x_j^{(k-1)}|
  int max_iterations = 500;
  double restart_ratio = 1e-12;
  // Largest coordinate change allowed in one step (max_j |alpha s_j|).
  double max_coordinate_step = std::numeric_limits<double>::infinity();
  // Roll a refresh back when it would raise the objective at the current iterate.
  bool monotone_refresh = true;
  LineSearchOptions line;
};

struct CgState {
  VectorXd x;
  VectorXd gradient;       // at x
  VectorXd prev_gradient;  // at the previous iterate
  VectorXd direction;      // last search direction
  double last_step = 1.0;
  int iteration = 0;
  int restarts = 0;
};

/// s_k = -grad_k + gamma s_{k-1},
/// gamma = -|grad_k|^2 / (s_{k-1}^T (grad_{k-1} - grad_k)),
/// replaced by -grad_k when the denominator is negligible or s_k is not a
/// descent direction. Returns true when a restart happened.
bool cg_direction(CgState& state, double restart_ratio);

struct CgResult {
  VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<double> trace;  // objective at the start and after each accepted step
  std::vector<double> refreshed;  // objective at each iterate right after refresh
  int rollbacks = 0;
};

CgResult minimize_cg(CgProblem& problem, const VectorXd& x0, const CgOptions& options = {});

}  // namespace mbi
