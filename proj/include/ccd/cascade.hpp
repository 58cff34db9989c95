#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccd/errors.hpp"
#include "ccd/graph.hpp"

namespace ccd {

struct Event {
  NodeId node;
  double time;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Transmission {
  NodeId infector;
  NodeId infectee;

  friend bool operator==(const Transmission&, const Transmission&) = default;
};

// Activation record of one spreading process. Events are sorted by time,
// ties by node id; the first event is at time 0 and no node repeats.
class Cascade {
 public:
  Cascade() = default;

  // Sorts, validates and shifts so the earliest event is at t = 0.
  explicit Cascade(std::vector<Event> events) : events_(std::move(events)) {
    std::sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
      return a.time != b.time ? a.time < b.time : a.node < b.node;
    });
    for (std::size_t i = 0; i < events_.size(); ++i) {
      if (!std::isfinite(events_[i].time)) throw ValidationError("cascade times must be finite");
    }
    std::vector<NodeId> nodes = this->nodes();
    std::sort(nodes.begin(), nodes.end());
    if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
      throw ValidationError("a node appears twice in one cascade");
    }
    if (!events_.empty() && events_.front().time != 0.0) {
      const double t0 = events_.front().time;
      for (Event& e : events_) e.time -= t0;
    }
  }

  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  std::span<const Event> events() const noexcept { return events_; }
  const Event& operator[](std::size_t i) const { return events_[i]; }
  const Event& source() const { return events_.front(); }
  double last_time() const { return events_.back().time; }

  std::vector<NodeId> nodes() const {
    std::vector<NodeId> out;
    out.reserve(events_.size());
    for (const Event& e : events_) out.push_back(e.node);
    return out;
  }

  friend bool operator==(const Cascade&, const Cascade&) = default;

 private:
  std::vector<Event> events_;
};

enum class CascadeModel { kSir, kSiBd, kCSiBd, kObserved };

inline std::string to_string(CascadeModel m) {
  switch (m) {
    case CascadeModel::kSir: return "sir";
    case CascadeModel::kSiBd: return "si-bd";
    case CascadeModel::kCSiBd: return "c-si-bd";
    case CascadeModel::kObserved: return "observed";
  }
  return "unknown";
}

inline CascadeModel parse_cascade_model(const std::string& s) {
  if (s == "sir") return CascadeModel::kSir;
  if (s == "si-bd") return CascadeModel::kSiBd;
  if (s == "c-si-bd") return CascadeModel::kCSiBd;
  if (s == "observed") return CascadeModel::kObserved;
  throw ValidationError("unknown cascade model '" + s + "'");
}

struct ModelInfo {
  CascadeModel model = CascadeModel::kObserved;
  std::string parameters;  // free-form "key=value ..." descriptor
  std::optional<double> horizon;  // known T_max of the generator, if any
};

// Cascades over a node universe [0, node_count). `transmissions`, when
// present, holds the realized who-infected-whom tree of each cascade, in the
// same order as `cascades`.
struct CascadeSet {
  std::size_t node_count = 0;
  std::vector<Cascade> cascades;
  std::optional<std::vector<std::vector<Transmission>>> transmissions;
  ModelInfo info;

  std::size_t size() const noexcept { return cascades.size(); }
  bool empty() const noexcept { return cascades.empty(); }
  bool has_transmissions() const noexcept { return transmissions.has_value(); }

  // Number of infections passed: recorded transmissions when known,
  // otherwise sum of (|C| - 1).
  std::size_t transmission_count() const {
    std::size_t total = 0;
    if (transmissions) {
      for (const auto& t : *transmissions) total += t.size();
    } else {
      for (const Cascade& c : cascades) total += c.size() > 0 ? c.size() - 1 : 0;
    }
    return total;
  }

  // First `count` cascades (with their transmissions).
  CascadeSet prefix(std::size_t count) const {
    CascadeSet out{node_count, {}, std::nullopt, info};
    count = std::min(count, cascades.size());
    out.cascades.assign(cascades.begin(), cascades.begin() + static_cast<std::ptrdiff_t>(count));
    if (transmissions) {
      out.transmissions.emplace(transmissions->begin(),
                                transmissions->begin() + static_cast<std::ptrdiff_t>(count));
    }
    return out;
  }
};

// Checks that each transmission list is a tree over its cascade rooted at the
// source, with infector strictly earlier than infectee.
inline void validate_transmissions(const CascadeSet& cs) {
  if (!cs.transmissions) return;
  if (cs.transmissions->size() != cs.cascades.size()) {
    throw ValidationError("transmission record count differs from cascade count");
  }
  std::vector<double> time(cs.node_count, -1.0);
  std::vector<char> seen(cs.node_count, 0);
  for (std::size_t c = 0; c < cs.cascades.size(); ++c) {
    const Cascade& cascade = cs.cascades[c];
    const auto& tx = (*cs.transmissions)[c];
    if (!cascade.empty() && tx.size() != cascade.size() - 1) {
      throw ValidationError("cascade " + std::to_string(c) + ": transmissions do not form a tree");
    }
    for (const Event& e : cascade.events()) time[e.node] = e.time;
    for (const Transmission& t : tx) {
      if (t.infector >= cs.node_count || t.infectee >= cs.node_count || time[t.infector] < 0 ||
          time[t.infectee] < 0 || seen[t.infectee] || t.infectee == cascade.source().node ||
          !(time[t.infector] <= time[t.infectee])) {
        throw ValidationError("cascade " + std::to_string(c) + ": inconsistent transmission " +
                              std::to_string(t.infector) + ">" + std::to_string(t.infectee));
      }
      seen[t.infectee] = 1;
    }
    for (const Event& e : cascade.events()) time[e.node] = -1.0, seen[e.node] = 0;
  }
}

// Horizon estimate for a cascade with unknown T_max: last activation time
// plus the mean gap between consecutive activations.
inline double estimate_tmax(const Cascade& c) {
  if (c.size() < 2) throw UndefinedEstimateError("T_max estimate needs at least two events");
  const double span = c.last_time() - c.source().time;
  return c.last_time() + span / static_cast<double>(c.size() - 1);
}

inline std::vector<double> estimate_tmax(const CascadeSet& cs) {
  std::vector<double> out;
  out.reserve(cs.size());
  for (const Cascade& c : cs.cascades) out.push_back(estimate_tmax(c));
  return out;
}

inline CascadeSet filter_singletons(const CascadeSet& cs) {
  CascadeSet out{cs.node_count, {}, std::nullopt, cs.info};
  if (cs.transmissions) out.transmissions.emplace();
  for (std::size_t i = 0; i < cs.cascades.size(); ++i) {
    if (cs.cascades[i].size() < 2) continue;
    out.cascades.push_back(cs.cascades[i]);
    if (cs.transmissions) out.transmissions->push_back((*cs.transmissions)[i]);
  }
  return out;
}

// V_0: every node that appears in some cascade, in increasing id order.
inline std::vector<NodeId> observed_nodes(const CascadeSet& cs) {
  std::vector<char> mark(cs.node_count, 0);
  for (const Cascade& c : cs.cascades) {
    for (const Event& e : c.events()) mark[e.node] = 1;
  }
  std::vector<NodeId> out;
  for (std::size_t v = 0; v < mark.size(); ++v) {
    if (mark[v]) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

}  // namespace ccd
