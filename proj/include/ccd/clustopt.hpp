#pragma once

#include <optional>
#include <vector>

#include "ccd/cascade.hpp"
#include "ccd/errors.hpp"
#include "ccd/likelihood.hpp"
#include "ccd/louvain.hpp"
#include "ccd/partition.hpp"
#include "ccd/surrogate.hpp"

namespace ccd {

struct ClustOptOptions {
  LikelihoodOptions likelihood;
  FitOptions fit;
  LouvainOptions louvain;
  // Per-cascade horizons; estimated from the cascades when absent.
  std::optional<std::vector<double>> tmax;
};

struct ClustOptResult {
  Partition partition;  // over V_0
  Partition initial;    // Clique(0) starting point
  RateEstimate rates;   // fitted on the starting point
  double log_likelihood = 0.0;  // of the final partition at the fitted rates
};

// Start from Clique(0), fit the rates once on that partition, then run
// single-node likelihood moves with the rates held fixed.
inline ClustOptResult clust_opt(const CascadeSet& cs, Seed seed, const ClustOptOptions& opt = {}) {
  if (cs.empty()) throw EmptyInputError("clust_opt: empty cascade set");
  Partition init = detect(cs, DetectionMethod::kClique0, seed);
  const auto universe = observed_nodes(cs);
  const LikelihoodContext ctx(cs, opt.tmax ? *opt.tmax : estimate_tmax(cs), universe, opt.likelihood);
  const RateEstimate rates = fit_rates(ctx, init, opt.fit);
  LikelihoodObjective objective(ctx, init, rates);
  Partition result = louvain_with_objective(std::span<const NodeId>(universe), objective, seed, opt.louvain);
  const double value = objective.value();
  return {restrict_partition(result, universe), std::move(init), rates, value};
}

}  // namespace ccd
