#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ccd/cascade.hpp"
#include "ccd/errors.hpp"
#include "ccd/graph.hpp"
#include "ccd/log.hpp"
#include "ccd/louvain.hpp"
#include "ccd/partition.hpp"

namespace ccd {

// Edges lighter than this are numerical noise and are not materialized.
inline constexpr double kMinSurrogateWeight = 1e-12;

// Weighted graph built from cascades over the full node universe; only
// observed nodes (V_0) can carry edges.
struct SurrogateGraph {
  Graph graph;
  std::vector<NodeId> observed;
  std::string builder;
  std::optional<double> decay;  // Clique family: the decay parameter a
};

enum class DetectionMethod { kPath, kClique, kClique0, kCosine, kOracle };

inline std::string to_string(DetectionMethod m) {
  switch (m) {
    case DetectionMethod::kPath: return "path";
    case DetectionMethod::kClique: return "clique";
    case DetectionMethod::kClique0: return "clique0";
    case DetectionMethod::kCosine: return "cosine";
    case DetectionMethod::kOracle: return "oracle";
  }
  return "unknown";
}

inline std::optional<DetectionMethod> parse_detection_method(const std::string& s) {
  for (auto m : {DetectionMethod::kPath, DetectionMethod::kClique, DetectionMethod::kClique0,
                 DetectionMethod::kCosine, DetectionMethod::kOracle}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

namespace detail {

inline void require_cascades(const CascadeSet& cs, const char* who) {
  if (cs.empty()) throw EmptyInputError(std::string(who) + ": empty cascade set");
}

inline SurrogateGraph finish(GraphBuilder& builder, const CascadeSet& cs, std::string name,
                             std::optional<double> decay = std::nullopt) {
  return {builder.build(kMinSurrogateWeight), observed_nodes(cs), std::move(name), decay};
}

// Sum over unordered pairs of |t_i - t_j| for a time-sorted cascade.
inline double pairwise_gap_sum(const Cascade& c) {
  double sum = 0.0;
  const auto m = static_cast<double>(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) sum += c[k].time * (2.0 * static_cast<double>(k) - (m - 1.0));
  return sum;
}

}  // namespace detail

// Path: every cascade contributes its chain of consecutively activated nodes,
// one unit of weight per link.
inline SurrogateGraph build_path(const CascadeSet& cs) {
  detail::require_cascades(cs, "build_path");
  GraphBuilder builder(cs.node_count, false);
  for (const Cascade& c : cs.cascades) {
    for (std::size_t k = 1; k < c.size(); ++k) builder.add_edge(c[k - 1].node, c[k].node, 1.0);
  }
  return detail::finish(builder, cs, "path");
}

// Probability that `j` was infected by `i` in cascade `c`, given decay `a`:
// exp(-a * dt_ij) normalized over all nodes activated before j. Predecessors
// are the nodes sorted before j, so tied times still have an order.
inline double clique_prob(const Cascade& c, NodeId i, NodeId j, double a) {
  std::optional<std::size_t> pi, pj;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k].node == i) pi = k;
    if (c[k].node == j) pj = k;
  }
  if (!pi || !pj) throw ValidationError("clique_prob: node is not part of the cascade");
  if (*pi >= *pj) return 0.0;
  const double tj = c[*pj].time;
  const double nearest = tj - c[*pj - 1].time;
  double norm = 0.0;
  for (std::size_t l = 0; l < *pj; ++l) norm += std::exp(-a * ((tj - c[l].time) - nearest));
  return std::exp(-a * ((tj - c[*pi].time) - nearest)) / norm;
}

struct CliqueDecay {
  enum class Mode { kAuto, kZero, kExplicit } mode = Mode::kAuto;
  double value = 0.0;  // used by kExplicit

  static CliqueDecay automatic() { return {Mode::kAuto, 0.0}; }
  static CliqueDecay zero() { return {Mode::kZero, 0.0}; }
  static CliqueDecay fixed(double a) { return {Mode::kExplicit, a}; }
};

// Mean |t_i - t_j| over all unordered pairs of nodes sharing a cascade.
inline double mean_pairwise_gap(const CascadeSet& cs) {
  double sum = 0.0, pairs = 0.0;
  for (const Cascade& c : cs.cascades) {
    sum += detail::pairwise_gap_sum(c);
    pairs += 0.5 * static_cast<double>(c.size()) * static_cast<double>(c.size() > 0 ? c.size() - 1 : 0);
  }
  return pairs > 0.0 ? sum / pairs : 0.0;
}

inline double resolve_decay(const CascadeSet& cs, const CliqueDecay& decay) {
  switch (decay.mode) {
    case CliqueDecay::Mode::kZero: return 0.0;
    case CliqueDecay::Mode::kExplicit:
      if (!(decay.value >= 0.0)) throw ValidationError("clique decay must be nonnegative");
      return decay.value;
    case CliqueDecay::Mode::kAuto: {
      const double gap = mean_pairwise_gap(cs);
      if (!(gap > 0.0)) {
        log_warning("all infection-time gaps are zero; Clique falls back to a = 0");
        return 0.0;
      }
      return 1.0 / gap;
    }
  }
  return 0.0;
}

// Clique: weight of {i, j} is the expected number of infections passed
// between i and j, sum over cascades of P(i -> j) + P(j -> i).
inline SurrogateGraph build_clique(const CascadeSet& cs, const CliqueDecay& decay = CliqueDecay::automatic()) {
  detail::require_cascades(cs, "build_clique");
  const double a = resolve_decay(cs, decay);
  GraphBuilder builder(cs.node_count, false);
  std::vector<double> mass;
  for (const Cascade& c : cs.cascades) {
    for (std::size_t j = 1; j < c.size(); ++j) {
      const double tj = c[j].time;
      const double nearest = tj - c[j - 1].time;
      mass.resize(j);
      double norm = 0.0;
      for (std::size_t l = 0; l < j; ++l) norm += mass[l] = std::exp(-a * ((tj - c[l].time) - nearest));
      for (std::size_t l = 0; l < j; ++l) builder.add_edge(c[l].node, c[j].node, mass[l] / norm);
    }
  }
  return detail::finish(builder, cs, decay.mode == CliqueDecay::Mode::kZero ? "clique0" : "clique", a);
}

// CosineSim: cosine similarity of the 0/1 cascade-participation vectors.
inline SurrogateGraph build_cosine_sim(const CascadeSet& cs) {
  std::vector<double> participation(cs.node_count, 0.0);
  GraphBuilder builder(cs.node_count, false);
  for (const Cascade& c : cs.cascades) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      participation[c[i].node] += 1.0;
      for (std::size_t j = i + 1; j < c.size(); ++j) builder.add_edge(c[i].node, c[j].node, 1.0);
    }
  }
  const Graph shared = builder.build();
  std::vector<Edge> edges(shared.edges().begin(), shared.edges().end());
  for (Edge& e : edges) e.weight /= std::sqrt(participation[e.u] * participation[e.v]);
  std::erase_if(edges, [](const Edge& e) { return e.weight < kMinSurrogateWeight; });
  return {Graph(cs.node_count, std::move(edges)), observed_nodes(cs), "cosine", std::nullopt};
}

// Oracle: the recorded transmission edges, weighted by how often each one
// carried an infection.
inline SurrogateGraph build_oracle(const CascadeSet& cs) {
  if (!cs.transmissions) throw OracleUnavailableError();
  GraphBuilder builder(cs.node_count, false);
  for (const auto& tx : *cs.transmissions) {
    for (const Transmission& t : tx) builder.add_edge(t.infector, t.infectee, 1.0);
  }
  return detail::finish(builder, cs, "oracle");
}

inline SurrogateGraph build_surrogate(const CascadeSet& cs, DetectionMethod method,
                                      std::optional<double> clique_decay = std::nullopt) {
  switch (method) {
    case DetectionMethod::kPath: return build_path(cs);
    case DetectionMethod::kClique:
      return build_clique(cs, clique_decay ? CliqueDecay::fixed(*clique_decay) : CliqueDecay::automatic());
    case DetectionMethod::kClique0: return build_clique(cs, CliqueDecay::zero());
    case DetectionMethod::kCosine: return build_cosine_sim(cs);
    case DetectionMethod::kOracle: return build_oracle(cs);
  }
  throw ValidationError("unknown detection method");
}

// Builds the surrogate graph and clusters it with Louvain; the result is a
// partition of V_0.
inline Partition detect(const CascadeSet& cs, DetectionMethod method, Seed seed,
                        std::optional<double> clique_decay = std::nullopt) {
  detail::require_cascades(cs, "detect");
  const SurrogateGraph s = build_surrogate(cs, method, clique_decay);
  return louvain_modularity_on(s.graph, s.observed, seed);
}

}  // namespace ccd
