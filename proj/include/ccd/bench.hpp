#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ccd/calibrate.hpp"
#include "ccd/cascade.hpp"
#include "ccd/cascade_io.hpp"
#include "ccd/clustopt.hpp"
#include "ccd/errors.hpp"
#include "ccd/io.hpp"
#include "ccd/lfr.hpp"
#include "ccd/log.hpp"
#include "ccd/metrics.hpp"
#include "ccd/planted.hpp"
#include "ccd/simulate.hpp"
#include "ccd/surrogate.hpp"

namespace ccd {

// Average number of infections passed per graph edge. Without recorded
// transmissions this is the sum of (|C| - 1), an approximation.
inline double relative_size(const CascadeSet& cs, const Graph& g) {
  if (g.edge_count() == 0) throw DomainError("relative size is undefined for a graph without edges");
  return static_cast<double>(cs.transmission_count()) / static_cast<double>(g.edge_count());
}

// ---------------------------------------------------------------------------
// Experiment description

struct DatasetSource {
  enum class Kind { kFiles, kPlanted, kLfr } kind = Kind::kFiles;
  std::string name;
  std::filesystem::path edges, communities;  // kFiles
  std::vector<std::size_t> group_sizes;      // kPlanted
  double p_in = 0.0, p_out = 0.0;            // kPlanted
  LfrConfig lfr;                             // kLfr
  std::optional<std::filesystem::path> cascades;  // observed cascades instead of simulation
};

enum class BudgetKind { kCount, kRelativeSize };

struct ExperimentSpec {
  std::vector<DatasetSource> datasets;
  CascadeModel model = CascadeModel::kSir;
  EpidemicParams params;
  bool calibrate = false;
  CalibrationOptions calibration;
  std::vector<std::string> algorithms;
  BudgetKind budget_kind = BudgetKind::kCount;
  std::vector<double> budgets;
  std::vector<std::string> metrics{"pearson-sub"};
  std::vector<Seed> seeds{1};
  Seed graph_seed = 1;  // planted / LFR graphs
  std::filesystem::path output = "bench-out";
  unsigned workers = 1;
  bool svg = false;
  // Simulated SI-BD / C-SI-BD cascades: give ClustOpt the true horizon and
  // let its likelihood count the observed nodes each cascade missed.
  bool known_horizon = false;
  std::size_t chunk = 256;            // cascades generated per pool extension
  std::size_t max_pool = 1'000'000;   // give up on a budget beyond this many cascades
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  for (auto part : split_on(value, ',')) {
    auto item = trim(part);
    if (!item.empty()) out.push_back(std::move(item));
  }
  return out;
}

inline double to_double(const std::string& s, std::size_t line_no) { return parse_double(s, line_no); }

inline std::uint64_t to_uint(const std::string& s, std::size_t line_no) {
  const double x = parse_double(s, line_no);
  if (x < 0.0 || x != std::floor(x)) throw ParseError("expected a nonnegative integer", line_no);
  return static_cast<std::uint64_t>(x);
}

inline bool to_bool(const std::string& s, std::size_t line_no) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ParseError("expected true or false", line_no);
}

inline bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

}  // namespace detail

// Flat "key = value" config; '#' starts a comment line. Relative paths are
// resolved against `base`. Keys:
//   dataset = files NAME EDGES COMMUNITIES
//   dataset = planted NAME SIZE,SIZE,... P_IN P_OUT
//   dataset = lfr NAME N MU MIN_COMMUNITY MAX_COMMUNITY [AVG_DEGREE MAX_DEGREE]
//   cascades = NAME FILE        (observed cascades for dataset NAME)
//   model, alpha, beta, alpha_in, alpha_out, lomax_shape, t_max, calibrate,
//   calibration_batch, algorithms, budget_kind (count|s), budgets, metrics,
//   seeds, graph_seed, output, workers, svg, known_horizon
inline ExperimentSpec parse_experiment(std::istream& in, const std::filesystem::path& base = ".") {
  ExperimentSpec spec;
  spec.algorithms.clear();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::string, std::string>> cascade_files;
  bool saw_budgets = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::is_data_line(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key == "dataset") {
      const auto f = detail::split_fields(value);
      if (f.size() < 2) throw ParseError("dataset needs a kind and a name", line_no);
      DatasetSource d;
      d.name = std::string(f[1]);
      if (!detail::valid_name(d.name)) throw ParseError("dataset names use [A-Za-z0-9_.-]", line_no);
      if (f[0] == "files" && f.size() == 4) {
        d.kind = DatasetSource::Kind::kFiles;
        d.edges = resolve(std::string(f[2]));
        d.communities = resolve(std::string(f[3]));
      } else if (f[0] == "planted" && f.size() == 5) {
        d.kind = DatasetSource::Kind::kPlanted;
        for (const auto& s : detail::split_list(std::string(f[2]))) d.group_sizes.push_back(detail::to_uint(s, line_no));
        d.p_in = detail::to_double(std::string(f[3]), line_no);
        d.p_out = detail::to_double(std::string(f[4]), line_no);
      } else if (f[0] == "lfr" && (f.size() == 6 || f.size() == 8)) {
        d.kind = DatasetSource::Kind::kLfr;
        d.lfr.n = detail::to_uint(std::string(f[2]), line_no);
        d.lfr.mu = detail::to_double(std::string(f[3]), line_no);
        d.lfr.min_community = detail::to_uint(std::string(f[4]), line_no);
        d.lfr.max_community = detail::to_uint(std::string(f[5]), line_no);
        if (f.size() == 8) {
          d.lfr.avg_degree = detail::to_double(std::string(f[6]), line_no);
          d.lfr.max_degree = detail::to_double(std::string(f[7]), line_no);
        }
      } else {
        throw ParseError("unrecognized dataset line", line_no);
      }
      for (const auto& other : spec.datasets) {
        if (other.name == d.name) throw ParseError("duplicate dataset name '" + d.name + "'", line_no);
      }
      spec.datasets.push_back(std::move(d));
    } else if (key == "cascades") {
      const auto f = detail::split_fields(value);
      if (f.size() != 2) throw ParseError("cascades = NAME FILE", line_no);
      cascade_files.emplace_back(std::string(f[0]), resolve(std::string(f[1])).string());
    } else if (key == "model") {
      spec.model = parse_cascade_model(value);
    } else if (key == "alpha") {
      spec.params.alpha = detail::to_double(value, line_no);
    } else if (key == "beta") {
      spec.params.beta = detail::to_double(value, line_no);
    } else if (key == "alpha_in") {
      spec.params.alpha_in = detail::to_double(value, line_no);
    } else if (key == "alpha_out") {
      spec.params.alpha_out = detail::to_double(value, line_no);
    } else if (key == "lomax_shape") {
      spec.params.lomax_shape = detail::to_double(value, line_no);
    } else if (key == "t_max") {
      spec.params.t_max = detail::to_double(value, line_no);
    } else if (key == "calibrate") {
      spec.calibrate = detail::to_bool(value, line_no);
    } else if (key == "calibration_batch") {
      spec.calibration.batch = detail::to_uint(value, line_no);
    } else if (key == "algorithms") {
      spec.algorithms = detail::split_list(value);
      for (const auto& a : spec.algorithms) {
        if (a != "clustopt" && !parse_detection_method(a)) throw ParseError("unknown algorithm '" + a + "'", line_no);
      }
    } else if (key == "budget_kind") {
      if (value == "count") {
        spec.budget_kind = BudgetKind::kCount;
      } else if (value == "s") {
        spec.budget_kind = BudgetKind::kRelativeSize;
      } else {
        throw ParseError("budget_kind is 'count' or 's'", line_no);
      }
    } else if (key == "budgets") {
      spec.budgets.clear();
      for (const auto& s : detail::split_list(value)) spec.budgets.push_back(detail::to_double(s, line_no));
      saw_budgets = true;
    } else if (key == "metrics") {
      spec.metrics = detail::split_list(value);
      for (const auto& m : spec.metrics) {
        if (!is_metric_name(m)) throw ParseError("unknown metric '" + m + "'", line_no);
      }
    } else if (key == "seeds") {
      spec.seeds.clear();
      for (const auto& s : detail::split_list(value)) spec.seeds.push_back(detail::to_uint(s, line_no));
    } else if (key == "graph_seed") {
      spec.graph_seed = detail::to_uint(value, line_no);
    } else if (key == "output") {
      spec.output = resolve(value);
    } else if (key == "workers") {
      spec.workers = static_cast<unsigned>(std::max<std::uint64_t>(1, detail::to_uint(value, line_no)));
    } else if (key == "svg") {
      spec.svg = detail::to_bool(value, line_no);
    } else if (key == "known_horizon") {
      spec.known_horizon = detail::to_bool(value, line_no);
    } else {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
  }
  for (const auto& [name, path] : cascade_files) {
    auto it = std::find_if(spec.datasets.begin(), spec.datasets.end(),
                           [&](const DatasetSource& d) { return d.name == name; });
    if (it == spec.datasets.end()) throw ValidationError("cascades given for unknown dataset '" + name + "'");
    it->cascades = path;
  }
  if (spec.datasets.empty()) throw ValidationError("experiment has no datasets");
  if (spec.algorithms.empty()) throw ValidationError("experiment has no algorithms");
  if (!saw_budgets || spec.budgets.empty()) throw ValidationError("experiment has no budgets");
  if (spec.seeds.empty()) throw ValidationError("experiment has no seeds");
  if (spec.known_horizon && spec.model == CascadeModel::kSir) {
    throw ValidationError("known_horizon needs an si-bd or c-si-bd model");
  }
  if (spec.metrics.empty()) throw ValidationError("experiment has no metrics");
  for (double b : spec.budgets) {
    if (!(b > 0.0)) throw ValidationError("budgets must be positive");
    if (spec.budget_kind == BudgetKind::kCount && b != std::floor(b)) {
      throw ValidationError("cascade-count budgets must be integers");
    }
  }
  return spec;
}

inline ExperimentSpec load_experiment(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_experiment(in, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

// ---------------------------------------------------------------------------
// Report

struct ReportRow {
  std::string dataset, model, algorithm, budget;
  std::optional<double> s;  // relative size; empty if undefined
  bool s_approximate = false;
  Seed seed = 0;
  std::string metric;
  std::optional<double> value;  // empty: undefined metric
  std::optional<std::string> failure;  // set for failed cells
};

struct EvalReport {
  std::vector<ReportRow> rows;
};

inline const char* kReportHeader = "dataset,model,algorithm,budget,S,seed,metric,value";

namespace detail {

inline std::string format_row(const ReportRow& r) {
  std::string line = r.dataset + ',' + r.model + ',' + r.algorithm + ',' + r.budget + ',';
  if (r.s) line += (r.s_approximate ? "~" : "") + format_g(*r.s, 10);
  line += ',' + std::to_string(r.seed) + ',' + r.metric + ',';
  if (r.failure) {
    line += "failed:" + *r.failure;
  } else if (r.value) {
    line += format_g(*r.value, 10);
  }
  return line;
}

inline ReportRow parse_row(const std::string& line, std::size_t line_no) {
  const auto f = split_on(line, ',');
  if (f.size() != 8) throw ParseError("report rows have 8 columns", line_no);
  ReportRow r;
  r.dataset = std::string(f[0]);
  r.model = std::string(f[1]);
  r.algorithm = std::string(f[2]);
  r.budget = std::string(f[3]);
  std::string_view s = f[4];
  if (!s.empty() && s.front() == '~') r.s_approximate = true, s.remove_prefix(1);
  if (!s.empty()) r.s = parse_double(s, line_no);
  r.seed = static_cast<Seed>(std::stoull(std::string(f[5])));
  r.metric = std::string(f[6]);
  const std::string_view v = f[7];
  if (v.starts_with("failed:")) {
    r.failure = std::string(v.substr(7));
  } else if (!v.empty()) {
    r.value = parse_double(v, line_no);
  }
  return r;
}

inline std::string cell_key(const std::string& dataset, const std::string& model, const std::string& algorithm,
                            const std::string& budget, Seed seed) {
  return dataset + ',' + model + ',' + algorithm + ',' + budget + ',' + std::to_string(seed);
}

}  // namespace detail

inline EvalReport read_report(std::istream& in) {
  EvalReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kReportHeader) throw ParseError("unexpected report header", line_no);
      continue;
    }
    if (line.empty()) continue;
    report.rows.push_back(detail::parse_row(line, line_no));
  }
  return report;
}

inline EvalReport load_report(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_report(in);
}

inline void write_report(std::ostream& out, const EvalReport& report) {
  out << kReportHeader << '\n';
  for (const auto& r : report.rows) out << detail::format_row(r) << '\n';
}

// Ranks by descending value; tied values share the mean of their ranks.
inline std::vector<double> rank_descending(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> rank(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double mean = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = mean;
    i = j;
  }
  return rank;
}

// Geometric S buckets 2^k, k in [lo, hi]; S is assigned to the nearest one
// on a log scale. Nonpositive S has no bucket.
struct SBuckets {
  int lo = -5, hi = 5;

  std::optional<double> of(double s) const {
    if (!(s > 0.0)) return std::nullopt;
    const int k = std::clamp(static_cast<int>(std::lround(std::log2(s))), lo, hi);
    return std::ldexp(1.0, k);
  }
};

struct AlgorithmAggregate {
  double mean_value = 0.0;
  double mean_rank = 0.0;
  std::size_t datasets = 0;
};

namespace detail {

// Mean value per (dataset, algorithm) over the rows of one metric whose S
// falls into `bucket` (all rows if no bucket is given).
inline std::map<std::string, std::map<std::string, std::vector<double>>> bucket_values(
    const EvalReport& report, const std::string& metric, std::optional<double> bucket, const SBuckets& buckets,
    std::map<std::string, std::set<std::string>>& broken) {
  std::map<std::string, std::map<std::string, std::vector<double>>> values;
  for (const auto& r : report.rows) {
    if (r.metric != metric) continue;
    if (bucket) {
      if (!r.s) continue;
      const auto b = buckets.of(*r.s);
      if (!b || *b != *bucket) continue;
    }
    if (r.failure || !r.value) {
      broken[r.dataset].insert(r.algorithm);
      continue;
    }
    values[r.dataset][r.algorithm].push_back(*r.value);
  }
  return values;
}

}  // namespace detail

// Per dataset, ranks the algorithms by their mean metric value (rank 1 =
// best), then averages the ranks over datasets. A dataset on which some
// algorithm has a failed or undefined cell, or no cell at all, is left out
// of the bucket.
inline std::map<std::string, AlgorithmAggregate> average_rank(const EvalReport& report, const std::string& metric,
                                                             std::optional<double> bucket = std::nullopt,
                                                             const SBuckets& buckets = {}) {
  std::set<std::string> algorithms;
  for (const auto& r : report.rows) {
    if (r.metric == metric) algorithms.insert(r.algorithm);
  }
  std::map<std::string, std::set<std::string>> broken;
  const auto values = detail::bucket_values(report, metric, bucket, buckets, broken);
  std::map<std::string, AlgorithmAggregate> out;
  std::set<std::string> datasets;
  for (const auto& [d, _] : values) datasets.insert(d);
  for (const auto& [d, _] : broken) datasets.insert(d);
  for (const auto& dataset : datasets) {
    auto it = values.find(dataset);
    const bool complete = it != values.end() && !broken.contains(dataset) && it->second.size() == algorithms.size();
    if (!complete) {
      log_warning("dataset '" + dataset + "' left out of the " + metric + " ranking: missing or undefined cells");
      continue;
    }
    std::vector<std::string> names;
    std::vector<double> means;
    for (const auto& [alg, vs] : it->second) {
      names.push_back(alg);
      double sum = 0.0;
      for (double v : vs) sum += v;
      means.push_back(sum / static_cast<double>(vs.size()));
    }
    const auto ranks = rank_descending(means);
    for (std::size_t i = 0; i < names.size(); ++i) {
      auto& agg = out[names[i]];
      agg.mean_value += means[i];
      agg.mean_rank += ranks[i];
      ++agg.datasets;
    }
  }
  for (auto& [alg, agg] : out) {
    agg.mean_value /= static_cast<double>(agg.datasets);
    agg.mean_rank /= static_cast<double>(agg.datasets);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running

namespace detail {

inline std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

inline DatasetBundle materialize(const DatasetSource& d, Seed graph_seed) {
  DatasetBundle out;
  switch (d.kind) {
    case DatasetSource::Kind::kFiles: out = load_dataset(d.name, d.edges, d.communities); break;
    case DatasetSource::Kind::kPlanted:
      out = planted_partition(d.group_sizes, d.p_in, d.p_out, derive_seed(graph_seed, name_hash(d.name)));
      break;
    case DatasetSource::Kind::kLfr: {
      LfrConfig cfg = d.lfr;
      cfg.seed = derive_seed(graph_seed, name_hash(d.name));
      out = generate_lfr(cfg);
      break;
    }
  }
  out.name = d.name;
  validate_bundle(out);
  return out;
}

inline std::string failure_kind(const std::exception& e) {
  if (dynamic_cast<const OracleUnavailableError*>(&e)) return "oracle-unavailable";
  if (dynamic_cast<const EmptyInputError*>(&e)) return "empty-input";
  if (dynamic_cast<const FitError*>(&e)) return "fit-failure";
  if (dynamic_cast<const UndefinedEstimateError*>(&e)) return "undefined-estimate";
  if (dynamic_cast<const DegenerateInputError*>(&e)) return "degenerate-input";
  return "error";
}

inline Partition run_algorithm(const std::string& algorithm, const CascadeSet& cs, Seed seed,
                               std::optional<double> horizon) {
  if (algorithm == "clustopt") {
    ClustOptOptions opt;
    if (horizon) {
      opt.likelihood.include_unobserved = true;
      opt.tmax = std::vector<double>(cs.size(), *horizon);
    }
    return clust_opt(cs, seed, opt).partition;
  }
  return detect(cs, *parse_detection_method(algorithm), seed);
}

struct PreparedDataset {
  DatasetBundle bundle;
  EpidemicParams params;
  std::optional<CascadeSet> observed;  // loaded cascades, singletons removed
};

// Cascade pool of one (dataset, seed) task: non-singleton cascades in
// generation order, extended on demand.
class CascadePool {
 public:
  CascadePool(const PreparedDataset& d, CascadeModel model, Seed seed, std::size_t chunk, std::size_t max_pool)
      : d_(&d), model_(model), seed_(seed), chunk_(chunk), max_pool_(max_pool) {
    if (d.observed) {
      pool_ = *d.observed;
      exhausted_ = true;
    } else {
      pool_.node_count = d.bundle.graph.node_count();
      pool_.transmissions.emplace();
    }
  }

  bool simulated() const { return !d_->observed; }

  // First `count` usable cascades, or nullopt if unreachable.
  std::optional<CascadeSet> by_count(std::size_t count) {
    while (pool_.size() < count && extend()) {
    }
    if (pool_.size() < count) return std::nullopt;
    return pool_.prefix(count);
  }

  // Shortest prefix whose relative size reaches `target`.
  std::optional<CascadeSet> by_relative_size(double target) {
    const double m = static_cast<double>(d_->bundle.graph.edge_count());
    if (m == 0.0) throw DomainError("relative size is undefined for a graph without edges");
    std::size_t count = 0, transmitted = 0;
    while (true) {
      for (; count < pool_.size(); ++count) {
        if (static_cast<double>(transmitted) / m >= target) break;
        transmitted += pool_.transmissions ? (*pool_.transmissions)[count].size() : pool_.cascades[count].size() - 1;
      }
      if (static_cast<double>(transmitted) / m >= target) return pool_.prefix(count);
      if (!extend()) return std::nullopt;
    }
  }

 private:
  bool extend() {
    if (exhausted_ || generated_ >= max_pool_) return false;
    const SimulationTarget target = SimulationTarget::of(d_->bundle);
    auto batch = generate_cascades(target, model_, d_->params, chunk_, seed_, 1, generated_);
    generated_ += chunk_;
    pool_.info = batch.info;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch.cascades[i].size() < 2) continue;
      pool_.cascades.push_back(std::move(batch.cascades[i]));
      pool_.transmissions->push_back(std::move((*batch.transmissions)[i]));
    }
    return true;
  }

  const PreparedDataset* d_;
  CascadeModel model_;
  Seed seed_;
  std::size_t chunk_, max_pool_;
  std::size_t generated_ = 0;
  bool exhausted_ = false;
  CascadeSet pool_;
};

inline std::string budget_label(BudgetKind kind, double b) {
  return kind == BudgetKind::kCount ? std::to_string(static_cast<std::uint64_t>(b)) : "S=" + format_g(b, 10);
}

}  // namespace detail

// Runs every (dataset, seed, budget, algorithm) cell and appends its metric
// rows to <output>/results.csv in grid order. Cells already present in an
// existing results file are skipped, so an interrupted run can be resumed.
// Cascade pools depend only on (seed, dataset name), and budgets are prefixes
// of the pool, so results do not depend on the worker count.
inline EvalReport run_experiment(const ExperimentSpec& spec) {
  std::filesystem::create_directories(spec.output);
  const auto results_path = spec.output / "results.csv";

  std::set<std::string> done;
  if (std::filesystem::exists(results_path)) {
    std::string content;
    {
      std::ifstream in(results_path, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      content = ss.str();
    }
    // Drop a partially written last line.
    if (!content.empty() && content.back() != '\n') {
      content.erase(content.find_last_of('\n') == std::string::npos ? 0 : content.find_last_of('\n') + 1);
      std::ofstream(results_path, std::ios::binary | std::ios::trunc) << content;
    }
    if (!content.empty()) {
      std::istringstream in(content);
      const auto previous = read_report(in);
      std::map<std::string, std::set<std::string>> metrics_of;
      for (const auto& r : previous.rows) {
        metrics_of[detail::cell_key(r.dataset, r.model, r.algorithm, r.budget, r.seed)].insert(r.metric);
      }
      for (const auto& [key, ms] : metrics_of) {
        if (std::all_of(spec.metrics.begin(), spec.metrics.end(), [&](const auto& m) { return ms.contains(m); })) {
          done.insert(key);
        }
      }
    }
  }
  if (!std::filesystem::exists(results_path) || std::filesystem::file_size(results_path) == 0) {
    std::ofstream(results_path, std::ios::binary) << kReportHeader << '\n';
  }

  const std::string model_name = to_string(spec.model);
  std::vector<detail::PreparedDataset> prepared;
  for (const auto& d : spec.datasets) {
    detail::PreparedDataset p{detail::materialize(d, spec.graph_seed), spec.params, std::nullopt};
    if (d.cascades) {
      CascadeSet cs = load_cascades(*d.cascades, p.bundle.names, false);
      cs.node_count = p.bundle.graph.node_count();
      p.observed = filter_singletons(cs);
    } else if (spec.model == CascadeModel::kObserved) {
      throw ValidationError("dataset '" + d.name + "' has no cascades file and the model is 'observed'");
    } else if (spec.calibrate) {
      p.params = calibrate(SimulationTarget::of(p.bundle), spec.model, default_goal(spec.model), spec.params,
                           derive_seed(spec.seeds.front(), detail::name_hash(d.name)), spec.calibration);
      log_info("calibrated " + d.name + ": " + describe(spec.model, p.params));
    }
    prepared.push_back(std::move(p));
  }

  struct Task {
    std::size_t dataset;
    Seed seed;
  };
  std::vector<Task> tasks;
  for (std::size_t d = 0; d < prepared.size(); ++d) {
    for (Seed s : spec.seeds) tasks.push_back({d, s});
  }

  auto run_task = [&](const Task& task) {
    const auto& d = prepared[task.dataset];
    const std::string model = d.observed ? "observed" : model_name;
    std::vector<ReportRow> rows;
    detail::CascadePool pool(d, spec.model, derive_seed(task.seed, detail::name_hash(d.bundle.name)), spec.chunk,
                             spec.max_pool);
    for (double b : spec.budgets) {
      const std::string budget = detail::budget_label(spec.budget_kind, b);
      bool pending = false;
      for (const auto& alg : spec.algorithms) {
        pending |= !done.contains(detail::cell_key(d.bundle.name, model, alg, budget, task.seed));
      }
      if (!pending) continue;
      std::optional<CascadeSet> cs;
      std::optional<std::string> budget_failure;
      try {
        cs = spec.budget_kind == BudgetKind::kCount ? pool.by_count(static_cast<std::size_t>(b))
                                                    : pool.by_relative_size(b);
        if (!cs) budget_failure = "budget-unreachable";
      } catch (const std::exception& e) {
        budget_failure = detail::failure_kind(e);
      }
      std::optional<double> s;
      if (cs && d.bundle.graph.edge_count() > 0) s = relative_size(*cs, d.bundle.graph);
      for (const auto& alg : spec.algorithms) {
        if (done.contains(detail::cell_key(d.bundle.name, model, alg, budget, task.seed))) continue;
        std::optional<std::string> failure = budget_failure;
        std::optional<Partition> pred;
        if (!failure) {
          try {
            const auto horizon = spec.known_horizon && pool.simulated() ? std::optional(d.params.t_max) : std::nullopt;
            pred = resize_universe(detail::run_algorithm(alg, *cs, derive_seed(task.seed, 7), horizon),
                                   d.bundle.graph.node_count());
          } catch (const std::exception& e) {
            failure = detail::failure_kind(e);
          }
        }
        for (const auto& metric : spec.metrics) {
          ReportRow r{d.bundle.name, model, alg, budget, s, d.observed.has_value(), task.seed, metric,
                      std::nullopt, failure};
          if (!failure) {
            try {
              r.value = evaluate_metric(metric, *pred, d.bundle.ground_truth);
            } catch (const std::exception& e) {
              r.failure = detail::failure_kind(e);
            }
          }
          rows.push_back(std::move(r));
        }
      }
    }
    return rows;
  };

  // Workers take tasks in order; rows are appended strictly in task order.
  std::vector<std::optional<std::vector<ReportRow>>> finished(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::mutex mutex;
  std::size_t next_to_write = 0;
  std::ofstream out(results_path, std::ios::binary | std::ios::app);
  auto flush_ready = [&] {
    while (next_to_write < tasks.size() && finished[next_to_write]) {
      for (const auto& r : *finished[next_to_write]) out << detail::format_row(r) << '\n';
      out.flush();
      finished[next_to_write].reset();
      ++next_to_write;
    }
  };
  std::atomic<std::size_t> next_task{0};
  auto worker = [&] {
    for (std::size_t i = next_task++; i < tasks.size(); i = next_task++) {
      std::vector<ReportRow> rows;
      try {
        rows = run_task(tasks[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
      std::lock_guard lock(mutex);
      finished[i] = std::move(rows);
      flush_ready();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(spec.workers, static_cast<unsigned>(tasks.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  out.close();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return load_report(results_path);
}

// ---------------------------------------------------------------------------
// Plot data

enum class PlotAxis { kBudget, kRelativeSize };

namespace detail {

struct SeriesPoint {
  double mean = 0.0;
  std::optional<double> stderr_;
};

inline SeriesPoint summarize_values(const std::vector<double>& v) {
  SeriesPoint p;
  double sum = 0.0;
  for (double x : v) sum += x;
  p.mean = sum / static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - p.mean) * (x - p.mean);
    p.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return p;
}

inline double budget_value(const std::string& budget) {
  return std::stod(budget.starts_with("S=") ? budget.substr(2) : budget);
}

struct PlotTable {
  std::vector<std::string> algorithms;
  std::vector<double> xs;
  std::map<std::pair<double, std::string>, std::vector<double>> cells;
};

inline void write_svg(const std::filesystem::path& path, const PlotTable& t,
                      const std::map<std::pair<double, std::string>, SeriesPoint>& points, const std::string& title) {
  const double width = 640, height = 400, left = 60, right = 150, top = 40, bottom = 50;
  double ymin = 0.0, ymax = 1.0;
  for (const auto& [_, p] : points) ymin = std::min(ymin, p.mean), ymax = std::max(ymax, p.mean);
  const double xlo = std::log2(t.xs.front()), xhi = std::log2(t.xs.back());
  auto sx = [&](double x) {
    return xhi > xlo ? left + (std::log2(x) - xlo) / (xhi - xlo) * (width - left - right) : left;
  };
  auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * (height - top - bottom); };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  std::ofstream out(path, std::ios::binary);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
      << "\" stroke=\"black\"/>\n";
  for (double y : {ymin, 0.5 * (ymin + ymax), ymax}) {
    out << "<text x=\"5\" y=\"" << sy(y) + 4 << "\" font-size=\"11\">" << format_g(y, 3) << "</text>\n";
  }
  for (double x : t.xs) {
    out << "<text x=\"" << sx(x) - 10 << "\" y=\"" << height - bottom + 18 << "\" font-size=\"11\">" << format_g(x, 4)
        << "</text>\n";
  }
  for (std::size_t a = 0; a < t.algorithms.size(); ++a) {
    const char* color = colors[a % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (double x : t.xs) {
      auto it = points.find({x, t.algorithms[a]});
      if (it != points.end()) out << sx(x) << ',' << sy(it->second.mean) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << width - right + 10 << "\" y=\"" << top + 16 * a << "\" font-size=\"12\" fill=\"" << color
        << "\">" << t.algorithms[a] << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace detail

// One CSV per (dataset, metric): x (budget or S bucket), then mean and
// standard error over seeds per algorithm. Undefined or failed cells are
// left out of the means; a point with no values is an empty field, and a
// point with a single value has an empty stderr. Returns the files written.
inline std::vector<std::filesystem::path> emit_plot_data(const EvalReport& report, PlotAxis axis,
                                                         const std::filesystem::path& dir, bool svg = false,
                                                         const SBuckets& buckets = {}) {
  std::filesystem::create_directories(dir);
  std::map<std::pair<std::string, std::string>, detail::PlotTable> tables;  // (dataset, metric)
  for (const auto& r : report.rows) {
    auto& t = tables[{r.dataset, r.metric}];
    if (std::find(t.algorithms.begin(), t.algorithms.end(), r.algorithm) == t.algorithms.end()) {
      t.algorithms.push_back(r.algorithm);
    }
    std::optional<double> x;
    if (axis == PlotAxis::kBudget) {
      x = detail::budget_value(r.budget);
    } else if (r.s) {
      x = buckets.of(*r.s);
    }
    if (!x) continue;
    if (std::find(t.xs.begin(), t.xs.end(), *x) == t.xs.end()) t.xs.push_back(*x);
    auto& cell = t.cells[{*x, r.algorithm}];
    if (!r.failure && r.value) cell.push_back(*r.value);
  }
  std::vector<std::filesystem::path> written;
  const std::string axis_name = axis == PlotAxis::kBudget ? "budget" : "S";
  for (auto& [key, t] : tables) {
    std::sort(t.xs.begin(), t.xs.end());
    const auto stem = "plot_" + key.first + "_" + key.second + "_" + axis_name;
    std::map<std::pair<double, std::string>, detail::SeriesPoint> points;
    std::ofstream out(dir / (stem + ".csv"), std::ios::binary);
    out << "x";
    for (const auto& a : t.algorithms) out << ',' << a << "_mean," << a << "_stderr";
    out << '\n';
    for (double x : t.xs) {
      out << detail::format_g(x, 10);
      for (const auto& a : t.algorithms) {
        auto it = t.cells.find({x, a});
        if (it == t.cells.end() || it->second.empty()) {
          out << ",,";
          continue;
        }
        const auto p = detail::summarize_values(it->second);
        points[{x, a}] = p;
        out << ',' << detail::format_g(p.mean, 10) << ',';
        if (p.stderr_) out << detail::format_g(*p.stderr_, 10);
      }
      out << '\n';
    }
    written.push_back(dir / (stem + ".csv"));
    if (svg && !t.xs.empty() && t.xs.front() > 0.0) {
      detail::write_svg(dir / (stem + ".svg"), t, points, key.first + " " + key.second);
      written.push_back(dir / (stem + ".svg"));
    }
  }
  return written;
}

// Mean value and mean rank per (algorithm, S bucket) for one metric.
inline std::filesystem::path emit_rank_table(const EvalReport& report, const std::string& metric,
                                             const std::filesystem::path& dir, const SBuckets& buckets = {}) {
  std::filesystem::create_directories(dir);
  std::set<double> present;
  for (const auto& r : report.rows) {
    if (r.metric == metric && r.s) {
      if (auto b = buckets.of(*r.s)) present.insert(*b);
    }
  }
  const auto path = dir / ("ranks_" + metric + ".csv");
  std::ofstream out(path, std::ios::binary);
  out << "S,algorithm,mean_value,mean_rank,datasets\n";
  for (double b : present) {
    for (const auto& [alg, agg] : average_rank(report, metric, b, buckets)) {
      out << detail::format_g(b, 10) << ',' << alg << ',' << detail::format_g(agg.mean_value, 10) << ','
          << detail::format_g(agg.mean_rank, 10) << ',' << agg.datasets << '\n';
    }
  }
  return path;
}

}  // namespace ccd
