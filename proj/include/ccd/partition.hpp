#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccd/errors.hpp"
#include "ccd/graph.hpp"

namespace ccd {

using Label = std::int32_t;
inline constexpr Label kUnassigned = -1;

// Assignment of nodes [0, n) to communities [0, k). A node may be left
// unassigned (kUnassigned), which is how partitions of a subset of the node
// universe (e.g. of the observed nodes V_0) are represented. Labels are always
// normalized: contiguous and numbered in order of first appearance.
class Partition {
 public:
  Partition() = default;

  // Normalizes arbitrary labels; negative labels mean "unassigned".
  template <class L>
  static Partition from_labels(std::span<const L> raw) {
    Partition p;
    p.labels_.resize(raw.size(), kUnassigned);
    std::unordered_map<long long, Label> remap;
    for (std::size_t v = 0; v < raw.size(); ++v) {
      const auto key = static_cast<long long>(raw[v]);
      if (key < 0) continue;
      auto [it, inserted] = remap.try_emplace(key, static_cast<Label>(remap.size()));
      p.labels_[v] = it->second;
    }
    p.community_count_ = remap.size();
    return p;
  }

  template <class L>
  static Partition from_labels(const std::vector<L>& raw) {
    return from_labels(std::span<const L>(raw));
  }

  static Partition from_labels(std::initializer_list<int> raw) {
    return from_labels(std::span<const int>(raw.begin(), raw.size()));
  }

  static Partition singletons(std::size_t n) {
    std::vector<Label> labels(n);
    for (std::size_t v = 0; v < n; ++v) labels[v] = static_cast<Label>(v);
    return from_labels(labels);
  }

  static Partition single_community(std::size_t n) { return from_labels(std::vector<Label>(n, 0)); }

  // Universe size n (assigned or not).
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t community_count() const noexcept { return community_count_; }
  Label operator[](NodeId v) const { return labels_[v]; }
  std::span<const Label> labels() const noexcept { return labels_; }

  bool covers(NodeId v) const { return v < labels_.size() && labels_[v] != kUnassigned; }
  bool is_total() const {
    return std::none_of(labels_.begin(), labels_.end(), [](Label l) { return l == kUnassigned; });
  }

  // Assigned nodes in increasing id order.
  std::vector<NodeId> support() const {
    std::vector<NodeId> nodes;
    for (std::size_t v = 0; v < labels_.size(); ++v) {
      if (labels_[v] != kUnassigned) nodes.push_back(static_cast<NodeId>(v));
    }
    return nodes;
  }

  std::vector<std::size_t> community_sizes() const {
    std::vector<std::size_t> sizes(community_count_, 0);
    for (Label l : labels_) {
      if (l != kUnassigned) ++sizes[l];
    }
    return sizes;
  }

  // Same grouping of the same node set, ignoring label names.
  bool equivalent(const Partition& other) const { return labels_ == other.labels_; }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<Label> labels_;
  std::size_t community_count_ = 0;
};

// Partition defined only on `nodes` (all other nodes unassigned), labels
// renormalized.
inline Partition restrict_partition(const Partition& p, std::span<const NodeId> nodes) {
  std::vector<Label> raw(p.size(), kUnassigned);
  for (NodeId v : nodes) {
    if (v >= p.size()) throw ValidationError("restrict_partition: node out of range");
    raw[v] = p[v];
  }
  return Partition::from_labels(raw);
}

// Extends a partition to universe size n; new nodes are unassigned.
inline Partition resize_universe(const Partition& p, std::size_t n) {
  std::vector<Label> raw(p.labels().begin(), p.labels().end());
  if (n < raw.size()) {
    for (std::size_t v = n; v < raw.size(); ++v) {
      if (raw[v] != kUnassigned) throw ValidationError("resize_universe would drop assigned nodes");
    }
  }
  raw.resize(n, kUnassigned);
  return Partition::from_labels(raw);
}

struct DatasetBundle {
  std::string name;
  Graph graph;
  Partition ground_truth;
  NodeIndex names;
};

inline void validate_bundle(const DatasetBundle& d) {
  if (d.graph.node_count() != d.ground_truth.size() || !d.ground_truth.is_total()) {
    throw ValidationError("dataset '" + d.name + "': ground truth must cover every graph node");
  }
}

}  // namespace ccd
