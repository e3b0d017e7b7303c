#pragma once

#include "mbi/patterns.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mbi {

enum class Mechanism {
  MCAR,         // uniform assignment to groups
  Weighted,     // complete group drawn with weights exp(-a_i)
};

enum class Covariance { Exchangeable, Unstructured };

/// Missing-pattern layouts over the first three sources (any further
/// sources are always observed):
///   1: all three, 2: sources 1-2, 3: sources 1 and 3, 4: sources 2-3, 5: source 1.
struct SettingSpec {
  int id = 0;
  std::vector<int> source_sizes;
  std::vector<int> layouts;      // layout id of each group
  std::vector<int> group_sizes;  // parallel to layouts
  std::vector<int> relevant;     // leading relevant covariates per source
  std::vector<double> signal;    // per source
  double rho = 0.5;
  Covariance covariance = Covariance::Exchangeable;
  Mechanism mechanism = Mechanism::MCAR;
  // a_i = weight_scale * (sum of weight_columns + y_i if weight_response)
  IndexList weight_columns;
  bool weight_response = false;
  double weight_scale = 0.0;
  int binary_source = -1;  // source whose columns are replaced by sign(X)
  int replications = 10;
  std::uint64_t seed = 1;

  int num_covariates() const;
  int num_rows() const;
  int num_relevant() const;
  void validate() const;  // InvalidArgument / InvalidRho
};

/// Presets for settings 1-6 at the given correlation.
SettingSpec setting_preset(int id, double rho);
/// N = 500, p = 20 (sources 7, 7, 6), q = 5, signal 5, MCAR groups 1-4.
SettingSpec strong_signal_preset(double rho = 0.4);

struct SimulatedData {
  MatrixXd x;  // fully observed covariates
  VectorXd y;
  VectorXd beta;
};

/// Rows of X iid N(0, (1 - rho) I + rho 11^T) via
///   x = sqrt(1 - rho) (e - ebar 1) + sqrt(1 + (p - 1) rho) ebar 1,
/// y = X beta + N(0, 1).
SimulatedData gen_data(const SettingSpec& spec, std::uint64_t seed);

/// Group (index into spec.layouts) of every row.
IndexList assign_missing(const SettingSpec& spec, const SimulatedData& sim, std::uint64_t seed);

/// DataSet with the masks of the assigned layouts.
DataSet make_dataset(const SettingSpec& spec, const SimulatedData& sim, const IndexList& assignment);

/// Observed-source flags of a layout for `num_sources` sources.
std::vector<bool> layout_signature(int layout, int num_sources);

struct SelectionMetrics {
  double fnr = 0.0;
  double fpr = 0.0;
  double mse = 0.0;  // |beta_hat - beta0|^2 / p
  double total() const { return fnr + fpr; }
};

SelectionMetrics selection_metrics(const VectorXd& beta_hat, const VectorXd& beta0);

struct MetricRow {
  int setting = 0;
  double rho = 0.0;
  std::string method;
  double fnr = 0.0;
  double fpr = 0.0;
  double mse = 0.0;
  double time_s = 0.0;
  int reps_used = 0;
  int reps_failed = 0;
  double fnr_plus_fpr() const { return fnr + fpr; }
};

struct ReplicationOutcome {
  std::string method;
  bool ok = false;
  std::string error;
  SelectionMetrics metrics;
  double time_s = 0.0;
};

/// Runs every method on replication `rep` of the setting.
std::vector<ReplicationOutcome> run_replication(const SettingSpec& spec, int rep,
                                                const std::vector<std::string>& methods);

struct SimulationOptions {
  std::vector<std::string> methods{"proposed", "cc", "si"};
  int threads = 1;
  bool verbose = false;
};

/// Per-method averages over spec.replications; failed replications are
/// excluded and counted.
std::vector<MetricRow> run_setting(const SettingSpec& spec, const SimulationOptions& options = {});

/// Columns: setting, rho, method, fnr, fpr, fnr_plus_fpr, mse, time_s, reps_used.
void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows, bool header = true);

/// Deterministic seed for replication `rep`.
std::uint64_t replication_seed(std::uint64_t seed, int rep);

}  // namespace mbi
