#include "mbi/imputation.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace mbi;
using mbi::testing::Gen;

namespace {

DataSet full_data(const MatrixXd& x, const VectorXd& y) {
  return DataSet(x, Mask::Constant(x.rows(), x.cols(), true), y, {{0, static_cast<int>(x.cols())}});
}

IndexList iota(int n) {
  IndexList v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

DataSet layout_data(std::uint64_t seed, int per_group = 40) {
  Gen gen(seed);
  const int n = 5 * per_group;
  MatrixXd x = gen.normal_matrix(n, 6);
  x.col(4) += 0.8 * x.col(0);
  x.col(5) += 0.5 * x.col(2) - 0.4 * x.col(1);
  const VectorXd y = x.col(0) - x.col(4) + gen.normal_vector(n);
  return mbi::testing::block_dataset(x, y, {2, 2, 2}, mbi::testing::five_group_layouts(), std::vector<int>(5, per_group));
}

}  // namespace

TEST_CASE("constant target gives an intercept-only model") {
  Gen gen(1);
  MatrixXd x = gen.normal_matrix(20, 3);
  x.col(2).setConstant(4.5);
  const ConditionalModel m = fit_conditional_on_rows(full_data(x, gen.normal_vector(20)), iota(20), 2, {0, 1});
  CHECK(m.intercept == doctest::Approx(4.5));
  CHECK(m.coefficients.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("exact linear relation is recovered by least squares") {
  Gen gen(2);
  MatrixXd x = gen.normal_matrix(25, 4);
  x.col(3) = 2.0 * x.col(0);
  const ConditionalModel m = fit_conditional_on_rows(full_data(x, gen.normal_vector(25)), iota(25), 3, {0, 1, 2});
  CHECK_FALSE(m.regularized);
  CHECK(std::abs(m.coefficients(0) - 2.0) < 1e-8);
  CHECK(std::abs(m.coefficients(1)) < 1e-8);
  CHECK(std::abs(m.coefficients(2)) < 1e-8);
  CHECK(std::abs(m.intercept) < 1e-8);
}

TEST_CASE("fewer pooled rows than predictors takes the L1 route") {
  Gen gen(3);
  const MatrixXd x = gen.normal_matrix(50, 81);
  const ConditionalModel m = fit_conditional_on_rows(full_data(x, gen.normal_vector(50)), iota(50), 80, iota(80));
  CHECK(m.regularized);
  CHECK(m.coefficients.size() == 80);
}

TEST_CASE("least-squares residuals are orthogonal to the predictors") {
  Gen gen(4);
  const MatrixXd x = gen.normal_matrix(60, 5);
  const DataSet d = full_data(x, gen.normal_vector(60));
  const ConditionalModel m = fit_conditional_on_rows(d, iota(60), 4, {0, 1, 2, 3});
  VectorXd resid(60);
  for (int i = 0; i < 60; ++i) resid(i) = x(i, 4) - m.predict(x.row(i));
  const double scale = x.col(4).squaredNorm();
  for (int c = 0; c < 4; ++c) CHECK(std::abs(resid.dot(x.col(c))) <= 1e-8 * scale);
  CHECK(std::abs(resid.sum()) <= 1e-8 * scale);
}

TEST_CASE("binary target predicts a conditional mean between its levels") {
  Gen gen(5);
  MatrixXd x = gen.normal_matrix(200, 3);
  for (int i = 0; i < 200; ++i) x(i, 2) = (x(i, 0) + 0.5 * gen.normal()) > 0 ? 1.0 : -1.0;
  const ConditionalModel m = fit_conditional_on_rows(full_data(x, gen.normal_vector(200)), iota(200), 2, {0, 1});
  CHECK(m.family == Family::Binomial);
  CHECK(m.low == -1.0);
  CHECK(m.high == 1.0);
  CHECK(m.coefficients(0) > 1.0);
  for (int i = 0; i < 200; ++i) {
    const double v = m.predict(x.row(i));
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("group with three donors gets three views") {
  const DataSet d = layout_data(6);
  const PatternIndex idx = detect_patterns(d);
  const ImputationSet set = impute(d, idx);
  REQUIRE(set.views[1].size() == 3);
  CHECK(set.view(1, 0).donor == 0);
  CHECK(set.view(1, 1).donor == 2);
  CHECK(set.view(1, 2).donor == 3);
  // Donor 3 imputes source 3 from source 1 only.
  CHECK(set.view(1, 1).columns == IndexList{0, 1, 4, 5});
}

TEST_CASE("observed entries pass through unchanged") {
  const DataSet d = layout_data(7);
  const PatternIndex idx = detect_patterns(d);
  const ImputationSet set = impute(d, idx);
  for (int r = 0; r < set.num_groups(); ++r) {
    for (const auto& v : set.views[r]) {
      for (std::size_t i = 0; i < v.rows.size(); ++i) {
        for (Index j = 0; j < d.cols(); ++j) {
          if (d.observed(v.rows[i], j)) CHECK(v.values(static_cast<Index>(i), j) == d.values()(v.rows[i], j));
          CHECK(std::isfinite(v.values(static_cast<Index>(i), j)));
        }
      }
    }
  }
}

TEST_CASE("pooled rows for another donor include the complete cases") {
  const DataSet d = layout_data(8);
  const PatternIndex idx = detect_patterns(d);
  for (int r = 1; r < idx.num_groups(); ++r) {
    const auto& g = idx.groups[r];
    for (int j : g.missing) {
      const IndexList cc = pooled_rows(idx, j, idx.overlap(r, 0));
      for (int k : g.donors) {
        if (k == 0) continue;
        const IndexList other = pooled_rows(idx, j, idx.overlap(r, k));
        CHECK(std::includes(other.begin(), other.end(), cc.begin(), cc.end()));
      }
    }
  }
}

TEST_CASE("no missing data gives the raw matrix") {
  Gen gen(9);
  const MatrixXd x = gen.normal_matrix(15, 3);
  const DataSet d = full_data(x, gen.normal_vector(15));
  const ImputationSet set = impute(d, detect_patterns(d));
  REQUIRE(set.num_groups() == 1);
  REQUIRE(set.views[0].size() == 1);
  CHECK(set.view(0, 0).values == x);
}

TEST_CASE("single-donor group matches single imputation") {
  Gen gen(10);
  const MatrixXd x = gen.normal_matrix(60, 4);
  // Complete group plus one group missing source 2: its only donor is the complete group.
  const DataSet d = mbi::testing::block_dataset(x, gen.normal_vector(60), {2, 2}, {{true, true}, {true, false}},
                                                {30, 30});
  const PatternIndex idx = detect_patterns(d);
  const ImputationSet mbi_set = impute(d, idx);
  const ImputationSet si_set = impute_single(d, idx);
  REQUIRE(mbi_set.views[1].size() == 1);
  CHECK(mbi_set.view(1, 0).values == si_set.view(1, 0).values);
}
