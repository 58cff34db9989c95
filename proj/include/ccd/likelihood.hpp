#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ccd/cascade.hpp"
#include "ccd/errors.hpp"
#include "ccd/graph.hpp"
#include "ccd/log.hpp"
#include "ccd/partition.hpp"

namespace ccd {

// Log-likelihood of cascades under the community-based SI-BD model, where
// node i infects j at rate alpha_in when they share a community and alpha_out
// otherwise. Per cascade C with horizon T:
//
//   -(alpha_in - alpha_out) * sum_{same-community pairs} |t_i - t_j|
//   - alpha_out * sum_{all pairs} |t_i - t_j|
//   + sum_{i : 0 < t_i < T} log((alpha_in - alpha_out) * n_same(i) + alpha_out * n_total(i))
//
// with n_total(i) = #{j : t_j < t_i} and n_same(i) the same count restricted
// to i's community. Pairs range over the infected nodes of C; with
// `include_unobserved`, nodes of the universe that C missed also take part,
// placed at t = T.
struct LikelihoodOptions {
  bool include_unobserved = false;
};

struct RateEstimate {
  double alpha_in = 0.0;
  double alpha_out = 0.0;
  double delta = 0.0;  // alpha_in = (delta + 1) * alpha_out
  double log_likelihood = 0.0;
};

// Cascades plus everything about them that does not depend on the partition.
class LikelihoodContext {
 public:
  struct Occurrence {
    std::uint32_t cascade;
    std::uint32_t position;
  };

  // Horizons estimated per cascade with estimate_tmax; universe = V_0.
  explicit LikelihoodContext(const CascadeSet& cs, LikelihoodOptions opt = {})
      : LikelihoodContext(cs, estimate_tmax(cs), observed_nodes(cs), opt) {}

  LikelihoodContext(const CascadeSet& cs, std::vector<double> tmax, std::vector<NodeId> universe,
                    LikelihoodOptions opt = {})
      : cascades_(cs.cascades),
        tmax_(std::move(tmax)),
        universe_(std::move(universe)),
        node_count_(cs.node_count),
        opt_(opt) {
    if (tmax_.size() != cascades_.size()) throw ValidationError("one horizon per cascade required");
    std::sort(universe_.begin(), universe_.end());
    universe_.erase(std::unique(universe_.begin(), universe_.end()), universe_.end());
    in_universe_.assign(node_count_, 0);
    for (NodeId v : universe_) {
      if (v >= node_count_) throw ValidationError("universe node out of range");
      in_universe_[v] = 1;
    }
    occurrence_offsets_.assign(node_count_ + 1, 0);
    earlier_.resize(cascades_.size());
    for (std::size_t c = 0; c < cascades_.size(); ++c) {
      const Cascade& cascade = cascades_[c];
      if (!cascade.empty() && tmax_[c] < cascade.last_time()) {
        throw ValidationError("cascade horizon precedes its last event");
      }
      auto& earlier = earlier_[c];
      earlier.resize(cascade.size());
      for (std::size_t k = 0; k < cascade.size(); ++k) {
        const NodeId v = cascade[k].node;
        if (!in_universe_[v]) throw ValidationError("cascade node outside the likelihood universe");
        ++occurrence_offsets_[v + 1];
        earlier[k] = (k > 0 && cascade[k].time == cascade[k - 1].time) ? earlier[k - 1]
                                                                        : static_cast<std::uint32_t>(k);
      }
    }
    for (std::size_t v = 0; v < node_count_; ++v) occurrence_offsets_[v + 1] += occurrence_offsets_[v];
    occurrences_.resize(occurrence_offsets_.back());
    std::vector<std::size_t> cursor(occurrence_offsets_.begin(), occurrence_offsets_.end() - 1);
    for (std::size_t c = 0; c < cascades_.size(); ++c) {
      for (std::size_t k = 0; k < cascades_[c].size(); ++k) {
        occurrences_[cursor[cascades_[c][k].node]++] = {static_cast<std::uint32_t>(c),
                                                         static_cast<std::uint32_t>(k)};
      }
    }
  }

  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t cascade_count() const noexcept { return cascades_.size(); }
  const Cascade& cascade(std::size_t c) const { return cascades_[c]; }
  double tmax(std::size_t c) const { return tmax_[c]; }
  std::span<const NodeId> universe() const noexcept { return universe_; }
  bool in_universe(NodeId v) const { return v < node_count_ && in_universe_[v]; }
  const LikelihoodOptions& options() const noexcept { return opt_; }

  // Number of events of cascade c strictly earlier than its k-th event.
  std::uint32_t earlier_count(std::size_t c, std::size_t k) const { return earlier_[c][k]; }

  // Whether event k of cascade c carries a log term: 0 < t < T.
  bool has_log_term(std::size_t c, std::size_t k) const {
    const double t = cascades_[c][k].time;
    return t > 0.0 && t < tmax_[c];
  }

  std::span<const Occurrence> occurrences(NodeId v) const {
    return {occurrences_.data() + occurrence_offsets_[v], occurrences_.data() + occurrence_offsets_[v + 1]};
  }

 private:
  std::vector<Cascade> cascades_;
  std::vector<double> tmax_;
  std::vector<NodeId> universe_;
  std::vector<char> in_universe_;
  std::size_t node_count_;
  LikelihoodOptions opt_;
  std::vector<std::vector<std::uint32_t>> earlier_;
  std::vector<std::size_t> occurrence_offsets_;
  std::vector<Occurrence> occurrences_;
};

// Partition-dependent sufficient statistics of the likelihood.
struct LikelihoodSummary {
  double same_gap_sum = 0.0;  // sum of |t_i - t_j| over same-community pairs
  double all_gap_sum = 0.0;   // sum of |t_i - t_j| over all pairs
  double log_terms = 0.0;     // number of events with a log term
  // (n_same, n_total) of every event with a log term.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;
};

namespace detail {

inline void require_cover(const LikelihoodContext& ctx, const Partition& p) {
  for (NodeId v : ctx.universe()) {
    if (!p.covers(v)) throw ValidationError("partition must cover every node in the likelihood universe");
  }
}

// n_same of every event of cascade c under `labels`; `count`/`scratch` are
// label-indexed buffers left zeroed on return.
inline void same_counts(const LikelihoodContext& ctx, std::size_t c, std::span<const Label> labels,
                        std::vector<std::uint32_t>& out, std::vector<std::uint32_t>& count) {
  const Cascade& cascade = ctx.cascade(c);
  out.assign(cascade.size(), 0);
  std::size_t k = 0;
  while (k < cascade.size()) {
    std::size_t end = k;
    while (end < cascade.size() && cascade[end].time == cascade[k].time) ++end;
    for (std::size_t i = k; i < end; ++i) out[i] = count[labels[cascade[i].node]];
    for (std::size_t i = k; i < end; ++i) ++count[labels[cascade[i].node]];
    k = end;
  }
  for (std::size_t i = 0; i < cascade.size(); ++i) count[labels[cascade[i].node]] = 0;
}

}  // namespace detail

inline LikelihoodSummary summarize(const LikelihoodContext& ctx, const Partition& p) {
  detail::require_cover(ctx, p);
  const auto labels = p.labels();
  LikelihoodSummary s;
  std::vector<std::uint32_t> count(p.community_count(), 0), n_same;
  std::vector<double> time_sum(p.community_count(), 0.0);
  std::vector<double> community_size(p.community_count(), 0.0);
  for (NodeId v : ctx.universe()) community_size[labels[v]] += 1.0;
  const double universe_size = static_cast<double>(ctx.universe().size());

  for (std::size_t c = 0; c < ctx.cascade_count(); ++c) {
    const Cascade& cascade = ctx.cascade(c);
    detail::same_counts(ctx, c, labels, n_same, count);
    double prefix = 0.0;
    for (std::size_t k = 0; k < cascade.size(); ++k) {
      const double t = cascade[k].time;
      const Label a = labels[cascade[k].node];
      s.all_gap_sum += t * static_cast<double>(k) - prefix;
      prefix += t;
      s.same_gap_sum += t * static_cast<double>(count[a]) - time_sum[a];
      ++count[a];
      time_sum[a] += t;
      if (ctx.has_log_term(c, k)) {
        const std::uint32_t n_total = ctx.earlier_count(c, k);
        if (n_total == 0) throw MalformedCascadeError("infected event with no earlier event");
        s.counts.emplace_back(n_same[k], n_total);
      }
    }
    if (ctx.options().include_unobserved) {
      const double missed = universe_size - static_cast<double>(cascade.size());
      for (std::size_t k = 0; k < cascade.size(); ++k) {
        const double wait = ctx.tmax(c) - cascade[k].time;
        const Label a = labels[cascade[k].node];
        s.all_gap_sum += wait * missed;
        s.same_gap_sum += wait * (community_size[a] - static_cast<double>(count[a]));
      }
    }
    for (std::size_t k = 0; k < cascade.size(); ++k) {
      const Label a = labels[cascade[k].node];
      count[a] = 0;
      time_sum[a] = 0.0;
    }
  }
  s.log_terms = static_cast<double>(s.counts.size());
  return s;
}

inline double log_likelihood(const LikelihoodSummary& s, double alpha_in, double alpha_out) {
  if (!(alpha_out > 0.0)) throw DomainError("alpha_out must be positive");
  if (!(alpha_in >= alpha_out)) throw DomainError("alpha_in must be at least alpha_out");
  const double diff = alpha_in - alpha_out;
  double value = -diff * s.same_gap_sum - alpha_out * s.all_gap_sum;
  for (const auto& [n_same, n_total] : s.counts) {
    value += std::log(diff * n_same + alpha_out * n_total);
  }
  return value;
}

inline double log_likelihood(const LikelihoodContext& ctx, const Partition& p, double alpha_in,
                             double alpha_out) {
  return log_likelihood(summarize(ctx, p), alpha_in, alpha_out);
}

// Horizons are estimated per cascade.
inline double log_likelihood(const CascadeSet& cs, const Partition& p, double alpha_in, double alpha_out,
                             LikelihoodOptions opt = {}) {
  return log_likelihood(LikelihoodContext(cs, opt), p, alpha_in, alpha_out);
}

// Maximizer of the likelihood over alpha_out for fixed delta:
// (#log terms) / (delta * same_gap_sum + all_gap_sum).
inline double optimal_alpha_out(const LikelihoodSummary& s, double delta) {
  if (!(delta >= 0.0)) throw DomainError("delta must be nonnegative");
  const double denominator = delta * s.same_gap_sum + s.all_gap_sum;
  if (!(denominator > 0.0)) throw DegenerateInputError("all pairwise time gaps are zero");
  return s.log_terms / denominator;
}

inline double optimal_alpha_out(const CascadeSet& cs, const Partition& p, double delta,
                                LikelihoodOptions opt = {}) {
  return optimal_alpha_out(summarize(LikelihoodContext(cs, opt), p), delta);
}

// Likelihood at (delta, optimal_alpha_out(delta)); -inf when undefined.
inline double profile_log_likelihood(const LikelihoodSummary& s, double delta) {
  const double denominator = delta * s.same_gap_sum + s.all_gap_sum;
  if (!(denominator > 0.0) || s.log_terms == 0.0) return -std::numeric_limits<double>::infinity();
  const double alpha_out = s.log_terms / denominator;
  return log_likelihood(s, (delta + 1.0) * alpha_out, alpha_out);
}

struct FitOptions {
  double grid_start = 1e-2;
  int grid_doublings = 20;  // grid: 0 and grid_start * 2^k, k = 0..grid_doublings
  double relative_tolerance = 1e-4;
};

inline std::vector<double> delta_grid(const FitOptions& opt = {}) {
  std::vector<double> grid{0.0};
  for (int k = 0; k <= opt.grid_doublings; ++k) grid.push_back(std::ldexp(opt.grid_start, k));
  return grid;
}

// Maximizes the profile likelihood over delta: coarse geometric grid to
// bracket the maximum, then golden-section search inside the bracket.
inline RateEstimate fit_rates(const LikelihoodSummary& s, const FitOptions& opt = {}) {
  const auto grid = delta_grid(opt);
  std::vector<double> values(grid.size());
  std::size_t best = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = profile_log_likelihood(s, grid[i]);
    if (std::isfinite(values[i]) && (best == grid.size() || values[i] > values[best])) best = i;
  }
  if (best == grid.size()) throw FitError("likelihood is not finite anywhere on the delta grid");
  if (best + 1 == grid.size()) {
    log_warning("delta estimate sits at the upper end of its search range; the fit is likely degenerate");
  }

  double lo = grid[best > 0 ? best - 1 : 0];
  double hi = grid[std::min(best + 1, grid.size() - 1)];
  double best_delta = grid[best], best_value = values[best];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = profile_log_likelihood(s, x1), f2 = profile_log_likelihood(s, x2);
  for (int iter = 0; iter < 200; ++iter) {
    const double scale = std::max(0.5 * (lo + hi), opt.grid_start * 1e-2);
    if (hi - lo <= opt.relative_tolerance * scale) break;
    if (f1 >= f2) {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = profile_log_likelihood(s, x1);
    } else {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = profile_log_likelihood(s, x2);
    }
  }
  for (auto [x, f] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
    if (std::isfinite(f) && f > best_value) best_delta = x, best_value = f;
  }
  const double alpha_out = optimal_alpha_out(s, best_delta);
  return {(best_delta + 1.0) * alpha_out, alpha_out, best_delta, best_value};
}

inline RateEstimate fit_rates(const LikelihoodContext& ctx, const Partition& p, const FitOptions& opt = {}) {
  if (ctx.cascade_count() == 0) throw FitError("no cascades to fit");
  return fit_rates(summarize(ctx, p), opt);
}

inline RateEstimate fit_rates(const CascadeSet& cs, const Partition& p, LikelihoodOptions lopt = {},
                              const FitOptions& opt = {}) {
  if (cs.empty()) throw FitError("no cascades to fit");
  return fit_rates(LikelihoodContext(cs, lopt), p, opt);
}

// The likelihood as a single-node-move objective with fixed rates. Keeps
// per-event same-community predecessor counts, community sizes and, for the
// unobserved-node extension, per-community sums of (T - t) so that a move's
// gain costs O(sum of the sizes of the cascades containing the node).
class LikelihoodObjective {
 public:
  LikelihoodObjective(const LikelihoodContext& ctx, const Partition& init, double alpha_in, double alpha_out)
      : ctx_(&ctx),
        labels_(init.labels().begin(), init.labels().end()),
        diff_(alpha_in - alpha_out),
        alpha_out_(alpha_out) {
    if (!(alpha_out > 0.0)) throw DomainError("alpha_out must be positive");
    if (!(alpha_in >= alpha_out)) throw DomainError("alpha_in must be at least alpha_out");
    if (init.size() != ctx.node_count()) throw ValidationError("partition universe differs from the cascades'");
    detail::require_cover(ctx, init);
    const std::size_t label_space = std::max<std::size_t>(init.community_count(), ctx.universe().size()) + 1;
    size_.assign(label_space, 0.0);
    waiting_.assign(label_space, 0.0);
    mark_.assign(label_space, 0);
    for (NodeId v : ctx.universe()) size_[labels_[v]] += 1.0;
    std::vector<std::uint32_t> count(label_space, 0);
    same_.resize(ctx.cascade_count());
    for (std::size_t c = 0; c < ctx.cascade_count(); ++c) {
      detail::same_counts(ctx, c, labels_, same_[c], count);
      for (std::size_t k = 0; k < ctx.cascade(c).size(); ++k) {
        waiting_[labels_[ctx.cascade(c)[k].node]] += ctx.tmax(c) - ctx.cascade(c)[k].time;
      }
    }
  }

  LikelihoodObjective(const LikelihoodContext& ctx, const Partition& init, const RateEstimate& rates)
      : LikelihoodObjective(ctx, init, rates.alpha_in, rates.alpha_out) {}

  Label community_of(NodeId v) const { return labels_[v]; }

  double gain(NodeId v, Label target) const {
    const Label from = labels_[v];
    if (target == from) return 0.0;
    double gap_change = 0.0;  // change of the same-community gap sum
    double log_change = 0.0;
    const bool extended = ctx_->options().include_unobserved;
    double waiting_in_own_cascades_from = 0.0, waiting_in_own_cascades_target = 0.0;
    for (const auto& occ : ctx_->occurrences(v)) {
      const Cascade& c = ctx_->cascade(occ.cascade);
      const double tv = c[occ.position].time;
      const double horizon = ctx_->tmax(occ.cascade);
      const auto& same = same_[occ.cascade];
      double in_from = 0.0, in_target = 0.0;  // infected members of C in each community
      std::uint32_t earlier_target = 0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        const Label a = labels_[c[k].node];
        if (a != from && a != target) continue;
        const bool is_target = a == target;
        (is_target ? in_target : in_from) += 1.0;
        (is_target ? waiting_in_own_cascades_target : waiting_in_own_cascades_from) += horizon - c[k].time;
        if (k == occ.position) continue;
        gap_change += (is_target ? 1.0 : -1.0) * std::abs(tv - c[k].time);
        if (c[k].time < tv && is_target) ++earlier_target;
        if (c[k].time > tv && ctx_->has_log_term(occ.cascade, k)) {
          const double n_total = ctx_->earlier_count(occ.cascade, k);
          const double old_same = same[k];
          const double new_same = old_same + (is_target ? 1.0 : -1.0);
          log_change += std::log(diff_ * new_same + alpha_out_ * n_total) -
                        std::log(diff_ * old_same + alpha_out_ * n_total);
        }
      }
      if (ctx_->has_log_term(occ.cascade, occ.position)) {
        const double n_total = ctx_->earlier_count(occ.cascade, occ.position);
        log_change += std::log(diff_ * earlier_target + alpha_out_ * n_total) -
                      std::log(diff_ * same[occ.position] + alpha_out_ * n_total);
      }
      if (extended) {
        // v against the nodes this cascade missed.
        gap_change += (horizon - tv) * ((size_[target] - in_target) - (size_[from] - in_from));
      }
    }
    if (extended && ctx_->in_universe(v)) {
      // v, where missed by a cascade, against that cascade's infected nodes.
      gap_change += (waiting_[target] - waiting_in_own_cascades_target) -
                    (waiting_[from] - waiting_in_own_cascades_from);
    }
    return -diff_ * gap_change + log_change;
  }

  // Candidates: communities of nodes sharing a cascade with v.
  template <class F>
  void for_each_candidate(NodeId v, F&& f) {
    const Label from = labels_[v];
    touched_.clear();
    for (const auto& occ : ctx_->occurrences(v)) {
      for (const Event& e : ctx_->cascade(occ.cascade).events()) {
        const Label a = labels_[e.node];
        if (a != from && !mark_[a]) {
          mark_[a] = 1;
          touched_.push_back(a);
        }
      }
    }
    std::sort(touched_.begin(), touched_.end());
    for (Label c : touched_) mark_[c] = 0;
    for (Label c : touched_) f(c, gain(v, c));
  }

  void move(NodeId v, Label target) {
    const Label from = labels_[v];
    if (target == from) return;
    if (static_cast<std::size_t>(target) >= size_.size()) {
      size_.resize(target + 1, 0.0);
      waiting_.resize(target + 1, 0.0);
      mark_.resize(target + 1, 0);
    }
    for (const auto& occ : ctx_->occurrences(v)) {
      const Cascade& c = ctx_->cascade(occ.cascade);
      const double tv = c[occ.position].time;
      auto& same = same_[occ.cascade];
      std::uint32_t earlier_target = 0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (k == occ.position) continue;
        const Label a = labels_[c[k].node];
        if (c[k].time < tv && a == target) ++earlier_target;
        if (c[k].time > tv && a == from) --same[k];
        if (c[k].time > tv && a == target) ++same[k];
      }
      same[occ.position] = earlier_target;
      const double wait = ctx_->tmax(occ.cascade) - tv;
      waiting_[from] -= wait;
      waiting_[target] += wait;
    }
    if (ctx_->in_universe(v)) {
      size_[from] -= 1.0;
      size_[target] += 1.0;
    }
    labels_[v] = target;
  }

  // Full recomputation with the current partition.
  double value() const { return log_likelihood(*ctx_, partition(), diff_ + alpha_out_, alpha_out_); }

  Partition partition() const { return Partition::from_labels(labels_); }

 private:
  const LikelihoodContext* ctx_;
  std::vector<Label> labels_;
  double diff_;
  double alpha_out_;
  std::vector<std::vector<std::uint32_t>> same_;
  std::vector<double> size_;     // universe nodes per community
  std::vector<double> waiting_;  // sum of (T - t) over infected events per community
  std::vector<char> mark_;
  std::vector<Label> touched_;
};

}  // namespace ccd
