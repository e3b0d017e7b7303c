#include "mbi/simulation.hpp"

#include "mbi/baselines.hpp"
#include "mbi/csv.hpp"
#include "mbi/error.hpp"
#include "mbi/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace mbi {

int SettingSpec::num_covariates() const { return std::accumulate(source_sizes.begin(), source_sizes.end(), 0); }
int SettingSpec::num_rows() const { return std::accumulate(group_sizes.begin(), group_sizes.end(), 0); }
int SettingSpec::num_relevant() const { return std::accumulate(relevant.begin(), relevant.end(), 0); }

void SettingSpec::validate() const {
  const int p = num_covariates();
  if (source_sizes.empty() || p <= 1) throw Error(ErrorCode::InvalidArgument, "setting needs at least two covariates");
  if (relevant.size() != source_sizes.size() || signal.size() != source_sizes.size()) {
    throw Error(ErrorCode::InvalidArgument, "relevant counts and signals must be given per source");
  }
  for (std::size_t s = 0; s < source_sizes.size(); ++s) {
    if (relevant[s] < 0 || relevant[s] > source_sizes[s]) {
      throw Error(ErrorCode::InvalidArgument, "relevant count exceeds the source size");
    }
  }
  if (layouts.empty() || layouts.size() != group_sizes.size()) {
    throw Error(ErrorCode::InvalidArgument, "group layouts and sizes must be parallel and nonempty");
  }
  for (int l : layouts) {
    if (l < 1 || l > 5) throw Error(ErrorCode::InvalidArgument, "layout ids run from 1 to 5");
  }
  for (int n : group_sizes) {
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "group sizes must be nonnegative");
  }
  if (mechanism == Mechanism::Weighted && layouts.front() != 1) {
    throw Error(ErrorCode::InvalidArgument, "weighted assignment needs the complete layout first");
  }
  for (int c : weight_columns) {
    if (c < 0 || c >= p) throw Error(ErrorCode::InvalidArgument, "weight column out of range");
  }
  if (!(rho > -1.0 / (p - 1.0)) || !(rho < 1.0)) {
    throw Error(ErrorCode::InvalidRho, "exchangeable correlation must lie in (-1/(p-1), 1)");
  }
  if (covariance == Covariance::Unstructured) {
    throw Error(ErrorCode::NotImplemented, "unstructured covariance is not available");
  }
}

SettingSpec setting_preset(int id, double rho) {
  SettingSpec s;
  s.id = id;
  s.rho = rho;
  switch (id) {
    case 1:
    case 6:
      s.source_sizes = {12, 12, 12, 4};
      s.layouts = {1, 2, 3, 4};
      s.relevant = {4, 4, 4, 2};
      s.signal = {5, 6, 7, 8};
      if (id == 1) {
        s.group_sizes = {30, 220, 220, 230};
        s.mechanism = Mechanism::Weighted;
        s.weight_columns = {36, 37, 38, 39};
        s.weight_scale = 10.0;
      } else {
        s.group_sizes = {200, 200, 200, 200};
      }
      break;
    case 2:
      s.source_sizes = {75, 100, 825};
      s.layouts = {1, 2, 3, 4};
      s.group_sizes = {180, 120, 100, 100};
      s.relevant = {6, 6, 8};
      s.signal = {6, 5, 4};
      break;
    case 3:
      s.source_sizes = {20, 20, 20};
      s.layouts = {1, 2, 3, 4};
      s.group_sizes = {45, 45, 80, 80};
      s.relevant = {5, 5, 5};
      s.signal = {2.5, 3, 3.5};
      s.mechanism = Mechanism::Weighted;
      s.weight_columns = {0, 1, 2, 3, 4};
      s.weight_response = true;
      s.weight_scale = 3.0;
      break;
    case 4:
      s.source_sizes = {20, 20, 20};
      s.layouts = {1, 2, 3, 4};
      s.group_sizes = {45, 265, 265, 125};
      s.relevant = {2, 6, 7};
      s.signal = {7, 8, 10};
      s.mechanism = Mechanism::Weighted;
      s.weight_response = true;
      s.weight_scale = 10.0;
      s.binary_source = 0;
      break;
    case 5:
      s.source_sizes = {20, 20, 20};
      s.layouts = {2, 3, 4};
      s.group_sizes = {100, 100, 100};
      s.relevant = {5, 5, 5};
      s.signal = {0.8, 1, 1.5};
      break;
    default:
      throw Error(ErrorCode::InvalidArgument, "settings are numbered 1 to 6");
  }
  s.validate();
  return s;
}

SettingSpec strong_signal_preset(double rho) {
  SettingSpec s;
  s.id = 0;
  s.rho = rho;
  s.source_sizes = {7, 7, 6};
  s.layouts = {1, 2, 3, 4};
  s.group_sizes = {125, 125, 125, 125};
  s.relevant = {2, 2, 1};
  s.signal = {5, 5, 5};
  s.validate();
  return s;
}

std::uint64_t replication_seed(std::uint64_t seed, int rep) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(rep + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SimulatedData gen_data(const SettingSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int n = spec.num_rows();
  const int p = spec.num_covariates();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SimulatedData sim;
  sim.beta = VectorXd::Zero(p);
  int offset = 0;
  for (std::size_t s = 0; s < spec.source_sizes.size(); ++s) {
    for (int j = 0; j < spec.relevant[s]; ++j) sim.beta(offset + j) = spec.signal[s];
    offset += spec.source_sizes[s];
  }

  const double a = std::sqrt(1.0 - spec.rho);
  const double b = std::sqrt(1.0 + (p - 1.0) * spec.rho);
  sim.x.resize(n, p);
  VectorXd e(p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) e(j) = normal(rng);
    const double ebar = e.mean();
    sim.x.row(i) = (a * (e.array() - ebar) + b * ebar).matrix().transpose();
  }
  if (spec.binary_source >= 0) {
    int begin = 0;
    for (int s = 0; s < spec.binary_source; ++s) begin += spec.source_sizes[s];
    const int width = spec.source_sizes[spec.binary_source];
    sim.x.middleCols(begin, width) =
        sim.x.middleCols(begin, width).unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
  }
  sim.y = sim.x * sim.beta;
  for (int i = 0; i < n; ++i) sim.y(i) += normal(rng);
  return sim;
}

IndexList assign_missing(const SettingSpec& spec, const SimulatedData& sim, std::uint64_t seed) {
  const int n = static_cast<int>(sim.x.rows());
  if (n != spec.num_rows()) throw Error(ErrorCode::DimensionMismatch, "group sizes do not sum to N");
  std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
  IndexList order(n);
  std::iota(order.begin(), order.end(), 0);
  IndexList assignment(n, -1);
  std::size_t first_group = 0;

  if (spec.mechanism == Mechanism::Weighted) {
    // Weighted sampling without replacement with weights exp(-a_i):
    // keep the n1 largest keys -a_i + Gumbel noise.
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::pair<double, int>> keys(n);
    for (int i = 0; i < n; ++i) {
      double a = 0.0;
      for (int c : spec.weight_columns) a += sim.x(i, c);
      if (spec.weight_response) a += sim.y(i);
      a *= spec.weight_scale;
      double u = unif(rng);
      while (u <= 0.0) u = unif(rng);
      keys[i] = {-a - std::log(-std::log(u)), i};
    }
    std::stable_sort(keys.begin(), keys.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
    const int n1 = spec.group_sizes.front();
    for (int i = 0; i < n; ++i) order[i] = keys[i].second;
    for (int i = 0; i < n1; ++i) assignment[order[i]] = 0;
    std::shuffle(order.begin() + n1, order.end(), rng);
    order.erase(order.begin(), order.begin() + n1);
    first_group = 1;
  } else {
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::size_t pos = 0;
  for (std::size_t g = first_group; g < spec.group_sizes.size(); ++g) {
    for (int c = 0; c < spec.group_sizes[g]; ++c) assignment[order[pos++]] = static_cast<int>(g);
  }
  return assignment;
}

std::vector<bool> layout_signature(int layout, int num_sources) {
  static const bool table[5][3] = {{1, 1, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {1, 0, 0}};
  std::vector<bool> sig(num_sources, true);
  for (int s = 0; s < std::min(num_sources, 3); ++s) sig[s] = table[layout - 1][s];
  return sig;
}

DataSet make_dataset(const SettingSpec& spec, const SimulatedData& sim, const IndexList& assignment) {
  const Index n = sim.x.rows(), p = sim.x.cols();
  const int num_sources = static_cast<int>(spec.source_sizes.size());
  std::vector<SourceSpan> spans;
  int begin = 0;
  for (int w : spec.source_sizes) {
    spans.push_back({begin, begin + w});
    begin += w;
  }
  Mask mask(n, p);
  for (Index i = 0; i < n; ++i) {
    const auto sig = layout_signature(spec.layouts.at(assignment[i]), num_sources);
    for (int s = 0; s < num_sources; ++s) {
      for (int j = spans[s].begin; j < spans[s].end; ++j) mask(i, j) = sig[s];
    }
  }
  std::vector<std::string> names;
  for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return DataSet(sim.x, mask, sim.y, spans, names);
}

SelectionMetrics selection_metrics(const VectorXd& beta_hat, const VectorXd& beta0) {
  if (beta_hat.size() != beta0.size()) throw Error(ErrorCode::DimensionMismatch, "coefficient lengths differ");
  SelectionMetrics m;
  int relevant = 0, null = 0, missed = 0, false_pos = 0;
  for (Index j = 0; j < beta0.size(); ++j) {
    if (beta0(j) != 0.0) {
      ++relevant;
      if (beta_hat(j) == 0.0) ++missed;
    } else {
      ++null;
      if (beta_hat(j) != 0.0) ++false_pos;
    }
  }
  m.fnr = relevant > 0 ? static_cast<double>(missed) / relevant : 0.0;
  m.fpr = null > 0 ? static_cast<double>(false_pos) / null : 0.0;
  m.mse = beta0.size() > 0 ? (beta_hat - beta0).squaredNorm() / static_cast<double>(beta0.size()) : 0.0;
  return m;
}

std::vector<ReplicationOutcome> run_replication(const SettingSpec& spec, int rep,
                                                const std::vector<std::string>& methods) {
  const std::uint64_t seed = replication_seed(spec.seed, rep);
  const SimulatedData sim = gen_data(spec, seed);
  const IndexList assignment = assign_missing(spec, sim, seed);
  const DataSet data = make_dataset(spec, sim, assignment);
  const PatternIndex idx = detect_patterns(data);

  std::vector<ReplicationOutcome> out;
  for (const auto& method : methods) {
    ReplicationOutcome o;
    o.method = method;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      VectorXd beta;
      if (method == "proposed") {
        const FitProblem problem(data);
        const PathResult path = run_path(problem, default_lambda_grid(problem));
        beta = path.best().beta;
      } else if (method == "cc") {
        beta = baseline_cc_scad(data, idx).beta;
      } else if (method == "si") {
        beta = baseline_si_scad(data, idx).beta;
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown method '" + method + "'");
      }
      o.metrics = selection_metrics(beta, sim.beta);
      o.ok = true;
    } catch (const Error& e) {
      o.error = e.what();
    }
    o.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<MetricRow> run_setting(const SettingSpec& spec, const SimulationOptions& options) {
  spec.validate();
  const int reps = spec.replications;
  std::vector<std::vector<ReplicationOutcome>> results(static_cast<std::size_t>(std::max(reps, 0)));
  std::atomic<int> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (int rep = next++; rep < reps; rep = next++) {
      results[rep] = run_replication(spec, rep, options.methods);
      if (options.verbose) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::clog << "setting " << spec.id << " rho " << spec.rho << " rep " << rep + 1 << "/" << reps;
        for (const auto& o : results[rep]) {
          std::clog << "  " << o.method << "=";
          if (o.ok) {
            std::clog << o.metrics.total();
          } else {
            std::clog << "failed";
          }
        }
        std::clog << '\n';
      }
    }
  };
  const int threads = std::max(1, std::min(options.threads, reps));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<MetricRow> rows;
  for (std::size_t m = 0; m < options.methods.size(); ++m) {
    MetricRow row;
    row.setting = spec.id;
    row.rho = spec.rho;
    row.method = options.methods[m];
    double time = 0.0;
    for (const auto& rep : results) {
      const auto& o = rep[m];
      time += o.time_s;
      if (!o.ok) {
        ++row.reps_failed;
        if (options.verbose) std::clog << row.method << " failed: " << o.error << '\n';
        continue;
      }
      ++row.reps_used;
      row.fnr += o.metrics.fnr;
      row.fpr += o.metrics.fpr;
      row.mse += o.metrics.mse;
    }
    if (row.reps_used > 0) {
      row.fnr /= row.reps_used;
      row.fpr /= row.reps_used;
      row.mse /= row.reps_used;
    }
    row.time_s = reps > 0 ? time / reps : 0.0;
    rows.push_back(row);
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows, bool header) {
  if (header) out << "setting,rho,method,fnr,fpr,fnr_plus_fpr,mse,time_s,reps_used\n";
  for (const auto& r : rows) {
    out << r.setting << ',' << format_double(r.rho) << ',' << r.method << ',' << format_double(r.fnr) << ','
        << format_double(r.fpr) << ',' << format_double(r.fnr_plus_fpr()) << ',' << format_double(r.mse) << ','
        << format_double(r.time_s) << ',' << r.reps_used << '\n';
  }
}

}  // namespace mbi
