#include "mbi/optimizer.hpp"

#include "mbi/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mbi {

VectorXd numeric_gradient(const ScalarFunction& f, const VectorXd& x, double rel_step) {
  VectorXd grad(x.size());
  VectorXd probe = x;
  for (Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x(j)));
    probe(j) = x(j) + h;
    const double up = f(probe);
    probe(j) = x(j) - h;
    const double down = f(probe);
    probe(j) = x(j);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error(ErrorCode::NonFiniteObjective, "objective is not finite near coordinate " + std::to_string(j));
    }
    grad(j) = (up - down) / (2.0 * h);
  }
  return grad;
}

VectorXd CgProblem::gradient(const VectorXd& x) {
  return numeric_gradient([this](const VectorXd& v) { return value(v); }, x);
}

LineFunction CgProblem::line(const VectorXd& x, const VectorXd& s) {
  return [this, x, s](double alpha) { return value(advance(x, s, alpha)); };
}

namespace {

constexpr double kGolden = 0.3819660112501051;  // 2 - golden ratio
constexpr double kGrow = 1.618033988749895;

double safe(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

}  // namespace

LineSearchResult line_search(const LineFunction& phi_raw, double phi0, double initial_step,
                             const LineSearchOptions& options) {
  LineSearchResult res;
  res.value = phi0;
  auto phi = [&](double a) {
    ++res.evaluations;
    return safe(phi_raw(a));
  };
  if (!(initial_step > 0.0) || !std::isfinite(initial_step)) initial_step = 1.0;
  initial_step = std::min(initial_step, options.max_step);

  // Bracket: a < b < c with phi(b) < phi(a), phi(b) <= phi(c).
  double a = 0.0, fa = phi0;
  double b = initial_step, fb = phi(b);
  double c, fc;
  if (fb < fa) {
    c = std::min(b + kGrow * (b - a), options.max_step);
    fc = c > b ? phi(c) : fb;
    int grow = 0;
    while (fc < fb && grow < options.max_expansions && c < options.max_step) {
      a = b, fa = fb;
      b = c, fb = fc;
      c = std::min(b + kGrow * (b - a), options.max_step);
      fc = phi(c);
      ++grow;
    }
    if (c <= b) {  // capped at the first trial
      res.alpha = b;
      res.value = fb;
      res.decreased = true;
      return res;
    }
    if (fc < fb) {  // still descending: accept the furthest point
      res.alpha = c;
      res.value = fc;
      res.decreased = true;
      return res;
    }
  } else {
    c = b, fc = fb;
    int back = 0;
    do {
      b *= 0.5;
      fb = phi(b);
      ++back;
      if (fb < fa) break;
      c = b, fc = fb;
    } while (back < options.max_backtracks);
    if (!(fb < fa)) return res;
  }

  // Brent minimization on [a, c] started from b.
  double lo = a, hi = c;
  double x = b, w = b, v = b;
  double fx = fb, fw = fb, fv = fb;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double tol1 = options.tolerance * std::abs(x) + 1e-14;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - mid) <= tol2 - 0.5 * (hi - lo)) break;
    bool golden = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (lo - x) && p < q * (hi - x)) {
        e = d;
        d = p / q;
        const double u = x + d;
        if (u - lo < tol2 || hi - u < tol2) d = mid >= x ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x >= mid ? lo : hi) - x;
      d = kGolden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d >= 0 ? tol1 : -tol1);
    const double fu = phi(u);
    if (fu <= fx) {
      (u >= x ? lo : hi) = x;
      v = w, fv = fw;
      w = x, fw = fx;
      x = u, fx = fu;
    } else {
      (u < x ? lo : hi) = u;
      if (fu <= fw || w == x) {
        v = w, fv = fw;
        w = u, fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u, fv = fu;
      }
    }
  }
  res.alpha = x;
  res.value = fx;
  res.decreased = fx < phi0;
  return res;
}

bool cg_direction(CgState& state, double restart_ratio) {
  const VectorXd& g = state.gradient;
  bool restart = state.direction.size() != g.size() || state.prev_gradient.size() != g.size();
  VectorXd s = -g;
  if (!restart) {
    const double denom = state.direction.dot(state.prev_gradient - g);
    const double scale = state.direction.norm() * std::max(g.norm(), state.prev_gradient.norm());
    if (std::abs(denom) < restart_ratio * scale || scale == 0.0) {
      restart = true;
    } else {
      const double gamma = -g.squaredNorm() / denom;
      s += gamma * state.direction;
      if (!(s.dot(g) < 0.0)) {
        restart = true;
        s = -g;
      }
    }
  }
  state.direction = s;
  if (restart && state.iteration > 1) ++state.restarts;
  return restart;
}

CgResult minimize_cg(CgProblem& problem, const VectorXd& x0, const CgOptions& options) {
  CgResult out;
  CgState st;
  st.x = x0;

  for (int k = 1; k <= options.max_iterations; ++k) {
    st.iteration = k;
    const double before = k == 1 ? 0.0 : out.trace.back();
    problem.refresh(st.x);
    double f = problem.value(st.x);
    out.refreshed.push_back(f);
    if (k > 1 && options.monotone_refresh && !(f <= before)) {
      problem.rollback();
      f = before;
      ++out.rollbacks;
    }
    if (!std::isfinite(f)) throw Error(ErrorCode::NonFiniteObjective, "objective is not finite at the current iterate");
    if (k == 1) out.trace.push_back(f);
    st.gradient = problem.gradient(st.x);
    if (st.gradient.cwiseAbs().maxCoeff() == 0.0) {
      out.converged = true;
      break;
    }
    bool restarted = cg_direction(st, options.restart_ratio);
    problem.project(st.x, st.gradient, st.direction);
    if (!(st.direction.dot(st.gradient) < 0.0)) {
      st.direction = -st.gradient;
      problem.project(st.x, st.gradient, st.direction);
      if (!restarted && k > 1) ++st.restarts;
      restarted = true;
    }
    if (st.direction.cwiseAbs().maxCoeff() == 0.0) {
      out.converged = true;
      break;
    }

    // Initial trial step: reuse the previous step scaled by the direction size.
    auto search = [&](const LineFunction* direct = nullptr, double step0 = 0.0) {
      LineSearchOptions lo = options.line;
      const double smax = st.direction.cwiseAbs().maxCoeff();
      if (std::isfinite(options.max_coordinate_step) && smax > 0.0) {
        lo.max_step = std::min(lo.max_step, options.max_coordinate_step / smax);
      }
      if (!(step0 > 0.0)) step0 = k == 1 ? 1.0 / std::max(1.0, smax) : st.last_step;
      return line_search(direct ? *direct : problem.line(st.x, st.direction), f, step0, lo);
    };
    LineSearchResult ls = search();
    if (!ls.decreased && !restarted) {
      st.direction = -st.gradient;
      problem.project(st.x, st.gradient, st.direction);
      ++st.restarts;
      ls = search();
    }
    if (!ls.decreased) {
      // No descent after the backtracking budget: keep the iterate, flag it.
      out.line_search_failed = true;
      break;
    }
    VectorXd next = problem.advance(st.x, st.direction, ls.alpha);
    double f_next = problem.value(next);
    if (!(f_next <= f)) {
      // The line function disagreed with a direct evaluation (an ill-conditioned
      // weight); search again on direct evaluations.
      const LineFunction direct = [&](double a) { return problem.value(problem.advance(st.x, st.direction, a)); };
      ls = search(&direct, ls.alpha);
      if (!ls.decreased) {
        out.line_search_failed = true;
        break;
      }
      next = problem.advance(st.x, st.direction, ls.alpha);
      f_next = problem.value(next);
    }
    const VectorXd step = next - st.x;
    st.x = next;
    st.last_step = ls.alpha;
    st.prev_gradient = st.gradient;
    out.trace.push_back(f_next);
    out.iterations = k;
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.x = st.x;
  out.value = problem.value(st.x);
  out.restarts = st.restarts;
  return out;
}

}  // namespace mbi
