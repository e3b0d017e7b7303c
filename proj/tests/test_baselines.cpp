#include "mbi/baselines.hpp"
#include "mbi/error.hpp"
#include "mbi/penalty.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mbi;
using mbi::testing::Gen;

TEST_CASE("scad threshold matches its closed form") {
  const double a = 3.7, lambda = 0.8;
  const auto closed = [&](double z) {
    const double az = std::abs(z), sg = z < 0 ? -1.0 : 1.0;
    if (az <= 2 * lambda) return sg * std::max(az - lambda, 0.0);
    if (az <= a * lambda) return ((a - 1) * z - sg * a * lambda) / (a - 2);
    return z;
  };
  for (double z = -5.0; z <= 5.0; z += 0.0137) CHECK(std::abs(scad_threshold(z, lambda, a) - closed(z)) < 1e-10);
}

TEST_CASE("scad threshold is the univariate minimizer") {
  // Brute force over a fine grid of b against the penalty module.
  Gen gen(1);
  const PenaltySpec spec{0.6, 3.7};
  for (int t = 0; t < 40; ++t) {
    const double z = gen.uniform(-4.0, 4.0);
    double best = 0.0, best_v = 1e300;
    for (double b = -5.0; b <= 5.0; b += 1e-4) {
      const double v = 0.5 * (b - z) * (b - z) + scad(std::abs(b), spec);
      if (v < best_v) best_v = v, best = b;
    }
    CHECK(std::abs(scad_threshold(z, spec.lambda, spec.a) - best) < 2e-4);
  }
}

TEST_CASE("a large lambda gives the null model") {
  Gen gen(2);
  const MatrixXd x = gen.normal_matrix(60, 5);
  const VectorXd y = x.col(0) + gen.normal_vector(60);
  BaselineOptions opts;
  opts.lambdas = {1e4};
  const BaselineResult r = scad_bic(x, y, opts);
  CHECK(r.active_set.empty());
  CHECK(r.intercept == doctest::Approx(y.mean()));
}

TEST_CASE("scad bic recovers a strong sparse signal") {
  Gen gen(3);
  const MatrixXd x = gen.normal_matrix(300, 10);
  const VectorXd y = (3.0 * x.col(2) - 2.0 * x.col(7) + gen.normal_vector(300)).array() + 1.0;
  const BaselineResult r = scad_bic(x, y);
  CHECK(r.active_set == IndexList{2, 7});
  CHECK(r.beta(2) == doctest::Approx(3.0).epsilon(0.05));
  CHECK(r.intercept == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("baselines need a complete-case group") {
  Gen gen(4);
  const auto layouts = mbi::testing::five_group_layouts();
  const MatrixXd x = gen.normal_matrix(60, 6);
  const DataSet d = mbi::testing::block_dataset(x, x.col(0), {2, 2, 2}, {layouts[1], layouts[2], layouts[3]},
                                                {20, 20, 20});
  const PatternIndex idx = detect_patterns(d);
  CHECK_THROWS_AS(baseline_cc_scad(d, idx), Error);
  CHECK_THROWS_AS(baseline_si_scad(d, idx), Error);
}

TEST_CASE("without missing data both baselines are plain SCAD") {
  Gen gen(5);
  const MatrixXd x = gen.normal_matrix(100, 6);
  const VectorXd y = 2.0 * x.col(1) + gen.normal_vector(100);
  const DataSet d(x, Mask::Constant(100, 6, true), y, {{0, 3}, {3, 6}});
  const PatternIndex idx = detect_patterns(d);
  const BaselineResult full = scad_bic(x, y);
  const BaselineResult cc = baseline_cc_scad(d, idx);
  const BaselineResult si = baseline_si_scad(d, idx);
  CHECK(cc.beta == full.beta);
  CHECK(si.beta == full.beta);
  CHECK(cc.lambda == full.lambda);
}

TEST_CASE("single imputation recovers an exactly dependent block") {
  Gen gen(6);
  const int n = 120;
  MatrixXd x = gen.normal_matrix(n, 4);
  x.col(2) = 2.0 * x.col(0);
  x.col(3) = x.col(1) - x.col(0);
  const VectorXd y = 3.0 * x.col(2) + gen.normal_vector(n);
  const DataSet d = mbi::testing::block_dataset(x, y, {2, 2}, {{true, true}, {true, false}}, {60, 60});
  const PatternIndex idx = detect_patterns(d);
  const ImputationSet single = impute_single(d, idx);
  for (int r = 0; r < idx.num_groups(); ++r) {
    const ImputedView& v = single.view(r, 0);
    for (std::size_t i = 0; i < v.rows.size(); ++i)
      CHECK((v.values.row(static_cast<Index>(i)) - x.row(v.rows[i])).cwiseAbs().maxCoeff() < 1e-8);
  }
}
