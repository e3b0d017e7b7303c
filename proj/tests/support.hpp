#pragma once

#include "mbi/patterns.hpp"
#include "mbi/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mbi::testing {

// Small seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

  MatrixXd normal_matrix(Index rows, Index cols) {
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }
  VectorXd normal_vector(Index n) { return normal_matrix(n, 1).col(0); }

  // PSD matrix of the given rank with a spread-out spectrum.
  MatrixXd psd(int d, int rank) {
    MatrixXd a = normal_matrix(d, rank);
    for (int j = 0; j < rank; ++j) a.col(j) *= std::exp(uniform(-3.0, 2.0));
    return a * a.transpose();
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// Rows assigned to source-level layouts; unobserved blocks are NaN.
// `layouts[g]` lists the observed flag per source for group g.
inline DataSet block_dataset(const MatrixXd& x, const VectorXd& y, const std::vector<int>& source_sizes,
                             const std::vector<std::vector<bool>>& layouts, const std::vector<int>& group_sizes) {
  std::vector<SourceSpan> spans;
  int col = 0;
  for (int s : source_sizes) {
    spans.push_back({col, col + s});
    col += s;
  }
  MatrixXd values = x;
  Mask mask = Mask::Constant(x.rows(), x.cols(), true);
  Index row = 0;
  for (std::size_t g = 0; g < layouts.size(); ++g) {
    for (int i = 0; i < group_sizes[g]; ++i, ++row) {
      for (std::size_t s = 0; s < spans.size(); ++s) {
        if (layouts[g][s]) continue;
        for (int c = spans[s].begin; c < spans[s].end; ++c) {
          values(row, c) = std::nan("");
          mask(row, c) = false;
        }
      }
    }
  }
  return DataSet(values, mask, y, spans);
}

// The five-group, three-source layout: complete, missing 3, missing 2,
// missing 1, missing 2 and 3.
inline std::vector<std::vector<bool>> five_group_layouts() {
  return {{true, true, true}, {true, true, false}, {true, false, true}, {false, true, true}, {true, false, false}};
}

}  // namespace mbi::testing

#include "mbi/imputation.hpp"

#include <Eigen/QR>

namespace mbi::testing {

// Exact Gaussian conditional expectations E(X_j | X_J) = S_jJ S_JJ^+ x_J for
// every model the pattern index calls for.
inline ModelSet gaussian_models(const PatternIndex& idx, const MatrixXd& sigma) {
  ModelSet models;
  for (int r = 0; r < idx.num_groups(); ++r) {
    const auto& g = idx.groups[r];
    if (g.complete()) continue;
    for (int k : g.donors) {
      const IndexList& pred = idx.overlap(r, k);
      MatrixXd sjj(pred.size(), pred.size());
      for (std::size_t a = 0; a < pred.size(); ++a)
        for (std::size_t b = 0; b < pred.size(); ++b) sjj(a, b) = sigma(pred[a], pred[b]);
      const MatrixXd pinv = sjj.completeOrthogonalDecomposition().pseudoInverse();
      for (int j : g.missing) {
        VectorXd cross(pred.size());
        for (std::size_t a = 0; a < pred.size(); ++a) cross(a) = sigma(j, pred[a]);
        ConditionalModel m;
        m.target = j;
        m.predictors = pred;
        m.coefficients = pinv * cross;
        models.emplace(ModelKey{r, k, j}, m);
      }
    }
  }
  return models;
}

}  // namespace mbi::testing
