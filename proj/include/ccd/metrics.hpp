#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccd/errors.hpp"
#include "ccd/graph.hpp"
#include "ccd/partition.hpp"

namespace ccd {

enum class MetricVariant { kSub, kAll };

// Pair counts between a predicted and a true grouping of the same node list.
// n11: same in both, n10: same only in pred, n01: same only in truth.
struct IncidenceSummary {
  std::int64_t nodes = 0;
  std::int64_t pairs = 0;  // C(nodes, 2)
  std::int64_t n11 = 0, n10 = 0, n01 = 0, n00 = 0;
};

namespace detail {

inline std::int64_t choose2(std::int64_t k) { return k * (k - 1) / 2; }

struct Contingency {
  std::vector<std::int64_t> row, col;  // cluster sizes of x and y
  std::unordered_map<std::uint64_t, std::int64_t> cell;
  std::int64_t total = 0;
};

// x and y hold nonnegative labels of the same nodes.
inline Contingency contingency(std::span<const Label> x, std::span<const Label> y) {
  Contingency t;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto a = static_cast<std::size_t>(x[i]), b = static_cast<std::size_t>(y[i]);
    if (t.row.size() <= a) t.row.resize(a + 1, 0);
    if (t.col.size() <= b) t.col.resize(b + 1, 0);
    ++t.row[a], ++t.col[b];
    ++t.cell[(static_cast<std::uint64_t>(a) << 32) | b];
    ++t.total;
  }
  return t;
}

inline IncidenceSummary summarize_pairs(std::span<const Label> x, std::span<const Label> y) {
  const Contingency t = contingency(x, y);
  IncidenceSummary s;
  s.nodes = t.total;
  s.pairs = choose2(t.total);
  std::int64_t same_x = 0, same_y = 0;
  for (auto r : t.row) same_x += choose2(r);
  for (auto c : t.col) same_y += choose2(c);
  for (const auto& [key, count] : t.cell) s.n11 += choose2(count);
  s.n10 = same_x - s.n11;
  s.n01 = same_y - s.n11;
  s.n00 = s.pairs - s.n11 - s.n10 - s.n01;
  return s;
}

// Pearson correlation from integer moments; undefined if either side has
// zero variance. y is a 0/1 vector, so its sum of squares is its sum.
inline std::optional<double> correlation(std::int64_t n, __int128 sx, __int128 sxx, __int128 sy, __int128 sxy) {
  const __int128 cov = static_cast<__int128>(n) * sxy - sx * sy;
  const __int128 vx = static_cast<__int128>(n) * sxx - sx * sx;
  const __int128 vy = static_cast<__int128>(n) * sy - sy * sy;  // y is 0/1
  if (vx <= 0 || vy <= 0) return std::nullopt;
  const long double r = static_cast<long double>(cov) /
                        std::sqrt(static_cast<long double>(vx) * static_cast<long double>(vy));
  return static_cast<double>(std::clamp(r, -1.0L, 1.0L));
}

inline void require_cover(const Partition& p, std::span<const NodeId> nodes, const char* what) {
  for (NodeId v : nodes) {
    if (!p.covers(v)) throw ValidationError(std::string(what) + " does not cover every evaluated node");
  }
}

// Labels of pred and truth on the evaluated node list. In the all variant the
// nodes pred leaves unassigned get either one shared extra label or one fresh
// label each.
struct LabelPair {
  std::vector<Label> pred, truth;
};

inline LabelPair gather(const Partition& pred, const Partition& truth, MetricVariant variant,
                        bool unknown_as_one_cluster) {
  LabelPair out;
  if (variant == MetricVariant::kSub) {
    const auto v0 = pred.support();
    require_cover(truth, v0, "ground truth");
    for (NodeId v : v0) {
      out.pred.push_back(pred[v]);
      out.truth.push_back(truth[v]);
    }
    return out;
  }
  if (!truth.is_total()) throw ValidationError("ground truth must cover every node for the all variant");
  if (pred.size() != truth.size()) throw ValidationError("partitions have different node universes");
  auto fresh = static_cast<Label>(pred.community_count());
  for (NodeId v = 0; v < truth.size(); ++v) {
    out.truth.push_back(truth[v]);
    if (pred.covers(v)) {
      out.pred.push_back(pred[v]);
    } else {
      out.pred.push_back(unknown_as_one_cluster ? static_cast<Label>(pred.community_count()) : fresh++);
    }
  }
  return out;
}

}  // namespace detail

// Pair counts over V_0 = the support of pred.
inline IncidenceSummary incidence_summary(const Partition& pred, const Partition& truth,
                                          MetricVariant variant = MetricVariant::kSub) {
  const auto lp = detail::gather(pred, truth, variant, false);
  return detail::summarize_pairs(lp.pred, lp.truth);
}

// Correlation of the 0/1 same-community indicators over pairs of `v0`.
inline std::optional<double> pearson_sub(const Partition& pred, const Partition& truth,
                                         std::span<const NodeId> v0) {
  detail::require_cover(pred, v0, "predicted partition");
  detail::require_cover(truth, v0, "ground truth");
  std::vector<Label> x, y;
  for (NodeId v : v0) x.push_back(pred[v]), y.push_back(truth[v]);
  const auto s = detail::summarize_pairs(x, y);
  const __int128 sx = s.n11 + s.n10, sy = s.n11 + s.n01;
  return detail::correlation(s.pairs, sx, sx, sy, s.n11);
}

inline std::optional<double> pearson_sub(const Partition& pred, const Partition& truth) {
  return pearson_sub(pred, truth, pred.support());
}

// Over all pairs of the universe: pairs with one node outside V_0 count as
// "different" for pred, pairs with both outside count 0.5.
inline std::optional<double> pearson_all(const Partition& pred, const Partition& truth) {
  if (!truth.is_total()) throw ValidationError("ground truth must cover every node for pearson_all");
  if (pred.size() != truth.size()) throw ValidationError("partitions have different node universes");
  std::vector<Label> x, y, unknown_truth;
  for (NodeId v = 0; v < truth.size(); ++v) {
    if (pred.covers(v)) {
      x.push_back(pred[v]);
      y.push_back(truth[v]);
    } else {
      unknown_truth.push_back(truth[v]);
    }
  }
  const auto sub = detail::summarize_pairs(x, y);
  const auto all_truth = detail::summarize_pairs(truth.labels(), truth.labels());
  const auto unknown = detail::summarize_pairs(unknown_truth, unknown_truth);
  // Work with 2x so every pred entry is an integer in {0, 1, 2}.
  const __int128 half_pairs = unknown.pairs;
  const __int128 sx = 2 * static_cast<__int128>(sub.n11 + sub.n10) + half_pairs;
  const __int128 sxx = 4 * static_cast<__int128>(sub.n11 + sub.n10) + half_pairs;
  const __int128 sy = all_truth.n11;
  const __int128 sxy = 2 * static_cast<__int128>(sub.n11) + unknown.n11;
  return detail::correlation(all_truth.pairs, sx, sxx, sy, sxy);
}

inline std::optional<double> pearson(const Partition& pred, const Partition& truth, MetricVariant variant) {
  return variant == MetricVariant::kSub ? pearson_sub(pred, truth) : pearson_all(pred, truth);
}

// Arithmetic-mean normalization. In the all variant, nodes outside V_0 form
// one extra "unknown" cluster of pred.
inline double nmi(const Partition& pred, const Partition& truth, MetricVariant variant) {
  const auto lp = detail::gather(pred, truth, variant, true);
  if (lp.pred.empty()) throw ValidationError("nmi: no nodes to compare");
  const auto t = detail::contingency(lp.pred, lp.truth);
  const double n = static_cast<double>(t.total);
  auto entropy = [&](const std::vector<std::int64_t>& sizes) {
    double h = 0.0;
    for (auto s : sizes) {
      if (s > 0) h -= (s / n) * std::log(s / n);
    }
    return h;
  };
  const double hx = entropy(t.row), hy = entropy(t.col);
  if (hx == 0.0 && hy == 0.0) return 1.0;  // both trivial, hence identical
  double mi = 0.0;
  for (const auto& [key, count] : t.cell) {
    const double pxy = count / n;
    const double px = t.row[key >> 32] / n, py = t.col[key & 0xffffffffu] / n;
    mi += pxy * std::log(pxy / (px * py));
  }
  return std::clamp(2.0 * mi / (hx + hy), 0.0, 1.0);
}

// n11 / (n11 + n10 + n01); 1 when no pair is together in either partition.
// In the all variant, unknown nodes are singletons.
inline double jaccard(const Partition& pred, const Partition& truth, MetricVariant variant) {
  const auto lp = detail::gather(pred, truth, variant, false);
  const auto s = detail::summarize_pairs(lp.pred, lp.truth);
  const auto denominator = s.n11 + s.n10 + s.n01;
  return denominator == 0 ? 1.0 : static_cast<double>(s.n11) / static_cast<double>(denominator);
}

// Harmonic mean of pair precision n11/(n11+n10) and recall n11/(n11+n01);
// 0 when both are 0. In the all variant, unknown nodes are singletons.
inline double f_measure(const Partition& pred, const Partition& truth, MetricVariant variant) {
  const auto lp = detail::gather(pred, truth, variant, false);
  const auto s = detail::summarize_pairs(lp.pred, lp.truth);
  if (s.n11 == 0) return 0.0;
  const double precision = static_cast<double>(s.n11) / static_cast<double>(s.n11 + s.n10);
  const double recall = static_cast<double>(s.n11) / static_cast<double>(s.n11 + s.n01);
  return 2.0 * precision * recall / (precision + recall);
}

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"pearson-sub", "pearson-all", "nmi-sub",      "nmi-all",
                                              "jaccard-sub", "jaccard-all", "fmeasure-sub", "fmeasure-all"};
  return names;
}

inline bool is_metric_name(const std::string& name) {
  for (const auto& m : metric_names()) {
    if (m == name) return true;
  }
  return false;
}

// Undefined values (degenerate correlations) come back as nullopt.
inline std::optional<double> evaluate_metric(const std::string& name, const Partition& pred,
                                             const Partition& truth) {
  const auto dash = name.rfind('-');
  if (dash == std::string::npos || !is_metric_name(name)) throw ValidationError("unknown metric '" + name + "'");
  const std::string base = name.substr(0, dash);
  const MetricVariant variant = name.substr(dash + 1) == "sub" ? MetricVariant::kSub : MetricVariant::kAll;
  if (base == "pearson") return pearson(pred, truth, variant);
  if (base == "nmi") return nmi(pred, truth, variant);
  if (base == "jaccard") return jaccard(pred, truth, variant);
  return f_measure(pred, truth, variant);
}

}  // namespace ccd
