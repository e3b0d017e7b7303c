#pragma once

#include "mbi/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mbi {

/// Half-open, 0-based column range owned by one source (modality).
struct SourceSpan {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool contains(int col) const { return col >= begin && col < end; }
};

/// Multi-source design with block-wise missingness.
///
/// Unobserved entries of `values()` are stored as NaN. Construction validates
/// that the spans partition the columns, that every row is observed or
/// missing as a whole within each source, and that the response is finite.
class DataSet {
 public:
  DataSet(MatrixXd values, Mask mask, VectorXd response, std::vector<SourceSpan> sources,
          std::vector<std::string> column_names = {});

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  int num_sources() const { return static_cast<int>(sources_.size()); }

  const MatrixXd& values() const { return values_; }
  const Mask& mask() const { return mask_; }
  const VectorXd& response() const { return response_; }
  const std::vector<SourceSpan>& sources() const { return sources_; }
  const std::vector<std::string>& column_names() const { return names_; }

  bool observed(Index row, Index col) const { return mask_(row, col); }
  bool source_observed(Index row, int source) const { return mask_(row, sources_[source].begin); }
  int source_of(int col) const;

 private:
  MatrixXd values_;
  Mask mask_;
  VectorXd response_;
  std::vector<SourceSpan> sources_;
  std::vector<std::string> names_;
};

/// One missing-pattern group r.
struct PatternGroup {
  std::vector<bool> signature;            // observed flag per source
  IndexList observed;                     // a(r)
  IndexList missing;                      // m(r)
  IndexList members;                      // H(r)
  IndexList donors;                       // G(r), ascending group ids
  std::vector<IndexList> overlaps;        // J(r,k), parallel to `donors`
  int first_row = 0;

  int size() const { return static_cast<int>(members.size()); }
  bool complete() const { return missing.empty(); }
  int donor_count() const { return static_cast<int>(donors.size()); }
  // Position of donor k inside `donors`, or -1.
  int donor_position(int k) const;
};

struct PatternIndex {
  IndexList group_of;  // ξ_i, 0-based group ids
  std::vector<PatternGroup> groups;
  std::optional<int> complete_group;
  int num_covariates = 0;

  int num_groups() const { return static_cast<int>(groups.size()); }
  const IndexList& overlap(int r, int k) const;
};

/// Groups rows by source-level observation signature and builds a(r), m(r),
/// H(r), G(r) and J(r,k). The complete-case group comes first, then groups by
/// decreasing |a(r)|, ties by first occurrence.
PatternIndex detect_patterns(const DataSet& data);

struct GroupReadiness {
  int group = 0;
  int size = 0;
  bool below_floor = false;        // n_r < min_group_size
  bool fewer_rows_than_observed = false;  // n_r < |a(r)|
};

struct ImputationRoute {
  int group = 0;
  int donor = 0;
  int target = 0;
  int pooled_rows = 0;
  int predictors = 0;
  bool l1 = false;  // pooled_rows <= |J(r,k)|
};

struct FitReadiness {
  std::vector<GroupReadiness> groups;
  std::vector<ImputationRoute> routes;
  bool all_ok() const;
};

/// Advisory feasibility report; never throws.
FitReadiness validate_for_fit(const PatternIndex& idx, int min_group_size = 5);

/// Number of rows whose group observes `target` and every column in `predictors`.
int pooled_row_count(const PatternIndex& idx, int target, const IndexList& predictors);
IndexList pooled_rows(const PatternIndex& idx, int target, const IndexList& predictors);

/// Parses "1-12,13-24,25-40" (1-based, inclusive) into 0-based spans.
std::vector<SourceSpan> parse_source_spans(const std::string& text);

}  // namespace mbi
