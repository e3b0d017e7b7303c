#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mbi {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using IndexList = std::vector<int>;

// Gathers the listed columns of `m` into a dense matrix.
inline MatrixXd gather_columns(const Eigen::Ref<const MatrixXd>& m, const IndexList& cols) {
  MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Index>(c)) = m.col(cols[c]);
  return out;
}

inline MatrixXd gather_rows(const Eigen::Ref<const MatrixXd>& m, const IndexList& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

inline VectorXd gather(const Eigen::Ref<const VectorXd>& v, const IndexList& idx) {
  VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

}  // namespace mbi
