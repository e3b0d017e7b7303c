#include "mbi/patterns.hpp"

#include "mbi/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace mbi {

DataSet::DataSet(MatrixXd values, Mask mask, VectorXd response, std::vector<SourceSpan> sources,
                 std::vector<std::string> column_names)
    : values_(std::move(values)),
      mask_(std::move(mask)),
      response_(std::move(response)),
      sources_(std::move(sources)),
      names_(std::move(column_names)) {
  const Index n = values_.rows();
  const Index p = values_.cols();
  if (mask_.rows() != n || mask_.cols() != p) {
    throw Error(ErrorCode::DimensionMismatch, "mask shape differs from value matrix");
  }
  if (response_.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "response length differs from row count");
  }
  if (sources_.empty()) throw Error(ErrorCode::InvalidArgument, "no source spans given");
  int next = 0;
  for (const auto& s : sources_) {
    if (s.begin != next || s.end <= s.begin) {
      throw Error(ErrorCode::InvalidArgument,
                  "source spans must be sorted, disjoint, nonempty and cover every column");
    }
    next = s.end;
  }
  if (next != p) {
    throw Error(ErrorCode::InvalidArgument, "source spans cover " + std::to_string(next) +
                                                " columns but the data has " + std::to_string(p));
  }
  if (names_.empty()) {
    for (Index j = 0; j < p; ++j) names_.push_back("x" + std::to_string(j + 1));
  } else if (static_cast<Index>(names_.size()) != p) {
    throw Error(ErrorCode::DimensionMismatch, "column name count differs from column count");
  }
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(response_(i))) {
      throw Error(ErrorCode::InvalidArgument, "response is missing at row " + std::to_string(i + 1));
    }
    for (const auto& s : sources_) {
      const bool first = mask_(i, s.begin);
      for (int j = s.begin; j < s.end; ++j) {
        if (mask_(i, j) != first) {
          throw Error(ErrorCode::NonBlockRow, "row " + std::to_string(i + 1) +
                                                  " is partially observed within the source "
                                                  "containing column " + names_[j]);
        }
        if (mask_(i, j) && !std::isfinite(values_(i, j))) {
          throw Error(ErrorCode::InvalidArgument,
                      "non-finite observed value at row " + std::to_string(i + 1));
        }
        if (!mask_(i, j)) values_(i, j) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
}

int DataSet::source_of(int col) const {
  for (int s = 0; s < num_sources(); ++s) {
    if (sources_[s].contains(col)) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "column out of range");
}

int PatternGroup::donor_position(int k) const {
  auto it = std::find(donors.begin(), donors.end(), k);
  return it == donors.end() ? -1 : static_cast<int>(it - donors.begin());
}

const IndexList& PatternIndex::overlap(int r, int k) const {
  const auto& g = groups.at(r);
  const int pos = g.donor_position(k);
  if (pos < 0) throw Error(ErrorCode::InvalidArgument, "group is not a donor");
  return g.overlaps[pos];
}

namespace {

bool contains_all(const IndexList& sorted_haystack, const IndexList& needles) {
  return std::all_of(needles.begin(), needles.end(), [&](int j) {
    return std::binary_search(sorted_haystack.begin(), sorted_haystack.end(), j);
  });
}

IndexList intersect(const IndexList& a, const IndexList& b) {
  IndexList out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

PatternIndex detect_patterns(const DataSet& data) {
  const Index n = data.rows();
  const int p = static_cast<int>(data.cols());
  const int s_count = data.num_sources();

  std::map<std::vector<bool>, int> first_seen;
  std::vector<PatternGroup> raw;
  IndexList raw_of(n);
  for (Index i = 0; i < n; ++i) {
    std::vector<bool> sig(s_count);
    for (int s = 0; s < s_count; ++s) sig[s] = data.source_observed(i, s);
    auto [it, inserted] = first_seen.try_emplace(sig, static_cast<int>(raw.size()));
    if (inserted) {
      PatternGroup g;
      g.signature = sig;
      g.first_row = static_cast<int>(i);
      for (int s = 0; s < s_count; ++s) {
        const auto& span = data.sources()[s];
        for (int j = span.begin; j < span.end; ++j) (sig[s] ? g.observed : g.missing).push_back(j);
      }
      raw.push_back(std::move(g));
    }
    raw[it->second].members.push_back(static_cast<int>(i));
    raw_of[i] = it->second;
  }

  IndexList order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool ca = raw[a].complete(), cb = raw[b].complete();
    if (ca != cb) return ca;
    if (raw[a].observed.size() != raw[b].observed.size()) {
      return raw[a].observed.size() > raw[b].observed.size();
    }
    return raw[a].first_row < raw[b].first_row;
  });
  IndexList relabel(raw.size());
  PatternIndex idx;
  idx.num_covariates = p;
  for (std::size_t r = 0; r < order.size(); ++r) {
    relabel[order[r]] = static_cast<int>(r);
    idx.groups.push_back(std::move(raw[order[r]]));
  }
  idx.group_of.resize(n);
  for (Index i = 0; i < n; ++i) idx.group_of[i] = relabel[raw_of[i]];

  std::vector<bool> seen(p, false);
  for (const auto& g : idx.groups) {
    for (int j : g.observed) seen[j] = true;
  }
  for (int j = 0; j < p; ++j) {
    if (!seen[j]) {
      throw Error(ErrorCode::UnobservedCovariate,
                  "covariate " + data.column_names()[j] + " is never observed");
    }
  }

  const int R = idx.num_groups();
  for (int r = 0; r < R; ++r) {
    auto& g = idx.groups[r];
    if (g.complete()) {
      idx.complete_group = idx.complete_group.value_or(r);
      g.donors = {r};
      g.overlaps = {g.observed};
      continue;
    }
    for (int k = 0; k < R; ++k) {
      if (k == r) continue;
      const auto& donor = idx.groups[k];
      if (!contains_all(donor.observed, g.missing)) continue;
      IndexList j_set = intersect(g.observed, donor.observed);
      if (j_set.empty()) continue;
      g.donors.push_back(k);
      g.overlaps.push_back(std::move(j_set));
    }
    if (g.donors.empty()) {
      throw Error(ErrorCode::EmptyDonor, "group " + std::to_string(r + 1) +
                                             " (first row " + std::to_string(g.first_row + 1) +
                                             ") has no donor group observing its missing block");
    }
  }
  return idx;
}

IndexList pooled_rows(const PatternIndex& idx, int target, const IndexList& predictors) {
  IndexList rows;
  for (const auto& g : idx.groups) {
    if (!std::binary_search(g.observed.begin(), g.observed.end(), target)) continue;
    if (!contains_all(g.observed, predictors)) continue;
    rows.insert(rows.end(), g.members.begin(), g.members.end());
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

int pooled_row_count(const PatternIndex& idx, int target, const IndexList& predictors) {
  int count = 0;
  for (const auto& g : idx.groups) {
    if (std::binary_search(g.observed.begin(), g.observed.end(), target) &&
        contains_all(g.observed, predictors)) {
      count += g.size();
    }
  }
  return count;
}

bool FitReadiness::all_ok() const {
  return std::none_of(groups.begin(), groups.end(), [](const GroupReadiness& g) {
           return g.below_floor || g.fewer_rows_than_observed;
         }) &&
         std::none_of(routes.begin(), routes.end(), [](const ImputationRoute& r) { return r.l1; });
}

FitReadiness validate_for_fit(const PatternIndex& idx, int min_group_size) {
  FitReadiness report;
  for (int r = 0; r < idx.num_groups(); ++r) {
    const auto& g = idx.groups[r];
    report.groups.push_back({r, g.size(), g.size() < min_group_size,
                             g.size() < static_cast<int>(g.observed.size())});
    for (std::size_t d = 0; d < g.donors.size(); ++d) {
      if (g.complete()) break;
      const auto& j_set = g.overlaps[d];
      for (int j : g.missing) {
        const int pooled = pooled_row_count(idx, j, j_set);
        report.routes.push_back({r, g.donors[d], j, pooled, static_cast<int>(j_set.size()),
                                 pooled <= static_cast<int>(j_set.size())});
      }
    }
  }
  return report;
}

std::vector<SourceSpan> parse_source_spans(const std::string& text) {
  std::vector<SourceSpan> spans;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    try {
      std::size_t used = 0;
      int first = 0, last = 0;
      if (dash == std::string::npos) {
        first = last = std::stoi(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
      } else {
        const std::string a = item.substr(0, dash), b = item.substr(dash + 1);
        first = std::stoi(a, &used);
        if (used != a.size()) throw std::invalid_argument(item);
        last = std::stoi(b, &used);
        if (used != b.size()) throw std::invalid_argument(item);
      }
      if (first < 1 || last < first) throw std::invalid_argument(item);
      spans.push_back({first - 1, last});
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "bad source span '" + item + "'");
    }
  }
  if (spans.empty()) throw Error(ErrorCode::ParseError, "empty source specification");
  return spans;
}

}  // namespace mbi
