#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <sstream>
#include <thread>
#include <vector>

#include "ccd/cascade.hpp"
#include "ccd/errors.hpp"
#include "ccd/graph.hpp"
#include "ccd/partition.hpp"
#include "ccd/random.hpp"

namespace ccd {

struct EpidemicParams {
  double alpha = 0.1;      // SIR / SI-BD per-edge transmission rate
  double beta = 1.0;       // SIR recovery rate
  double alpha_in = 0.1;   // C-SI-BD rate within a community
  double alpha_out = 0.01; // C-SI-BD rate across communities
  // Shape of the Lomax multiplier applied to alpha per cascade (SIR only);
  // scale is shape - 1 so the multiplier has unit mean. Unset: fixed rate.
  std::optional<double> lomax_shape;
  double t_max = 1.0;      // SI-BD / C-SI-BD horizon
};

struct SimulationResult {
  Cascade cascade;
  std::vector<Transmission> transmissions;
};

namespace detail {

// Counter-RNG domains. Every random quantity of a cascade is keyed by the
// object it belongs to: the source, the per-cascade rate multiplier, each
// node's recovery clock and each directed edge's transmission clock.
enum : std::uint64_t { kSourceDomain = 1, kLomaxDomain = 2, kRecoveryDomain = 3, kEdgeDomain = 4 };

inline double lomax_multiplier(const CounterRng& rng, double shape) {
  if (!(shape > 1.0)) throw ValidationError("Lomax shape must exceed 1 for a unit-mean multiplier");
  const double u = rng.uniform(kLomaxDomain, 0);
  return (shape - 1.0) * (std::pow(u, -1.0 / shape) - 1.0);
}

struct Pending {
  double time;
  NodeId node;
  NodeId infector;
  friend bool operator>(const Pending& a, const Pending& b) {
    if (a.time != b.time) return a.time > b.time;
    if (a.node != b.node) return a.node > b.node;
    return a.infector > b.infector;
  }
};

// Event-driven spread from `source`. `for_each_contact(u, t_u, push)` offers
// tentative infection times of u's contacts; the earliest offer wins.
template <class Contacts>
SimulationResult spread(std::size_t n, NodeId source, Contacts&& for_each_contact) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(n, kInf);
  std::vector<char> infected(n, 0);
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue;
  std::vector<Event> events;
  std::vector<Transmission> transmissions;

  best[source] = 0.0;
  queue.push({0.0, source, source});
  auto push = [&](NodeId v, double t, NodeId from) {
    if (!infected[v] && t < best[v]) {
      best[v] = t;
      queue.push({t, v, from});
    }
  };
  while (!queue.empty()) {
    const Pending p = queue.top();
    queue.pop();
    if (infected[p.node] || p.time > best[p.node]) continue;
    infected[p.node] = 1;
    events.push_back({p.node, p.time});
    if (p.node != source) transmissions.push_back({p.infector, p.node});
    for_each_contact(p.node, p.time, push);
  }
  return {Cascade(std::move(events)), std::move(transmissions)};
}

}  // namespace detail

// SIR on g: each infected node recovers after Exp(beta) and meanwhile
// transmits along each incident edge after Exp(alpha_C * w); transmissions
// scheduled after recovery never happen.
inline SimulationResult simulate_sir(const Graph& g, const EpidemicParams& params, Seed seed) {
  if (g.node_count() == 0) throw ValidationError("simulate_sir: empty graph");
  const CounterRng rng(seed);
  const auto source = static_cast<NodeId>(rng.below(detail::kSourceDomain, 0, g.node_count()));
  double rate = params.alpha;
  if (params.lomax_shape) rate *= detail::lomax_multiplier(rng, *params.lomax_shape);
  return detail::spread(g.node_count(), source, [&](NodeId u, double t, auto&& push) {
    const double infectious_for = rng.exponential(detail::kRecoveryDomain, u) / params.beta;
    const std::size_t base = g.adjacency_offset(u);
    const auto nbrs = g.neighbors(u);
    for (std::size_t j = 0; j < nbrs.size(); ++j) {
      const double delay = rng.exponential(detail::kEdgeDomain, base + j) / (rate * nbrs[j].weight);
      if (delay < infectious_for) push(nbrs[j].node, t + delay, u);
    }
  });
}

// SI with bounded duration: no recovery, everything stops at t_max.
inline SimulationResult simulate_si_bd(const Graph& g, const EpidemicParams& params, Seed seed) {
  if (g.node_count() == 0) throw ValidationError("simulate_si_bd: empty graph");
  if (!(params.t_max > 0.0)) throw ValidationError("t_max must be positive");
  const CounterRng rng(seed);
  const auto source = static_cast<NodeId>(rng.below(detail::kSourceDomain, 0, g.node_count()));
  double rate = params.alpha;
  if (params.lomax_shape) rate *= detail::lomax_multiplier(rng, *params.lomax_shape);
  return detail::spread(g.node_count(), source, [&](NodeId u, double t, auto&& push) {
    const std::size_t base = g.adjacency_offset(u);
    const auto nbrs = g.neighbors(u);
    for (std::size_t j = 0; j < nbrs.size(); ++j) {
      const double arrival =
          t + rng.exponential(detail::kEdgeDomain, base + j) / (rate * nbrs[j].weight);
      if (arrival < params.t_max) push(nbrs[j].node, arrival, u);
    }
  });
}

// Community-based SI-BD: no graph; every infected node may infect every
// susceptible node, at rate alpha_in inside its community and alpha_out
// across communities, until t_max.
inline SimulationResult simulate_c_si_bd(const Partition& communities, const EpidemicParams& params,
                                         Seed seed) {
  const std::size_t n = communities.size();
  if (n == 0) throw ValidationError("simulate_c_si_bd: empty partition");
  if (!communities.is_total()) throw ValidationError("simulate_c_si_bd: partition must cover every node");
  if (!(params.t_max > 0.0)) throw ValidationError("t_max must be positive");
  if (params.alpha_in < 0.0 || params.alpha_out < 0.0) throw ValidationError("rates must be nonnegative");
  const CounterRng rng(seed);
  const auto source = static_cast<NodeId>(rng.below(detail::kSourceDomain, 0, n));
  return detail::spread(n, source, [&](NodeId u, double t, auto&& push) {
    const std::uint64_t base = static_cast<std::uint64_t>(u) * n;
    for (NodeId v = 0; v < n; ++v) {
      if (v == u) continue;
      const double rate = communities[u] == communities[v] ? params.alpha_in : params.alpha_out;
      if (rate <= 0.0) continue;
      const double arrival = t + rng.exponential(detail::kEdgeDomain, base + v) / rate;
      if (arrival < params.t_max) push(v, arrival, u);
    }
  });
}

inline std::string describe(CascadeModel model, const EpidemicParams& p) {
  std::ostringstream os;
  os.precision(9);
  switch (model) {
    case CascadeModel::kSir:
      os << "alpha=" << p.alpha << " beta=" << p.beta;
      break;
    case CascadeModel::kSiBd:
      os << "alpha=" << p.alpha << " tmax=" << p.t_max;
      break;
    case CascadeModel::kCSiBd:
      os << "alpha_in=" << p.alpha_in << " alpha_out=" << p.alpha_out << " tmax=" << p.t_max;
      break;
    case CascadeModel::kObserved:
      break;
  }
  if (p.lomax_shape && model != CascadeModel::kCSiBd) os << " lomax_shape=" << *p.lomax_shape;
  return os.str();
}

// Graph for SIR / SI-BD, partition for C-SI-BD; a DatasetBundle carries both.
struct SimulationTarget {
  const Graph* graph = nullptr;
  const Partition* communities = nullptr;

  static SimulationTarget of(const DatasetBundle& d) { return {&d.graph, &d.ground_truth}; }

  std::size_t node_count() const {
    return graph ? graph->node_count() : communities ? communities->size() : 0;
  }
};

inline SimulationResult simulate(const SimulationTarget& target, CascadeModel model,
                                 const EpidemicParams& params, Seed seed) {
  switch (model) {
    case CascadeModel::kSir:
      if (!target.graph) throw ValidationError("SIR needs a graph");
      return simulate_sir(*target.graph, params, seed);
    case CascadeModel::kSiBd:
      if (!target.graph) throw ValidationError("SI-BD needs a graph");
      return simulate_si_bd(*target.graph, params, seed);
    case CascadeModel::kCSiBd:
      if (!target.communities) throw ValidationError("C-SI-BD needs a partition");
      return simulate_c_si_bd(*target.communities, params, seed);
    case CascadeModel::kObserved:
      break;
  }
  throw ValidationError("cannot simulate the 'observed' model");
}

// Generates cascades first_index .. first_index + count - 1 of the stream
// defined by `master_seed`. Cascade i depends only on (master_seed, i), so
// the result is identical for any worker count. Singletons are kept.
inline CascadeSet generate_cascades(const SimulationTarget& target, CascadeModel model,
                                    const EpidemicParams& params, std::size_t count, Seed master_seed,
                                    unsigned workers = 1, std::size_t first_index = 0) {
  std::vector<SimulationResult> results(count);
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::vector<std::exception_ptr> failures(workers);
  auto run = [&](unsigned worker) {
    try {
      for (std::size_t i = worker; i < count; i += workers) {
        results[i] = simulate(target, model, params, derive_seed(master_seed, first_index + i));
      }
    } catch (...) {
      failures[worker] = std::current_exception();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  CascadeSet out;
  out.node_count = target.node_count();
  out.info.model = model;
  out.info.parameters = describe(model, params);
  if (model != CascadeModel::kSir) out.info.horizon = params.t_max;
  out.transmissions.emplace();
  out.cascades.reserve(count);
  out.transmissions->reserve(count);
  for (auto& r : results) {
    out.cascades.push_back(std::move(r.cascade));
    out.transmissions->push_back(std::move(r.transmissions));
  }
  return out;
}

}  // namespace ccd
