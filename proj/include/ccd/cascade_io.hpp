#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ccd/cascade.hpp"
#include "ccd/errors.hpp"
#include "ccd/graph.hpp"
#include "ccd/io.hpp"

namespace ccd {

// Cascade file: one cascade per line, events "node:time" joined by ';' in
// (time, node id) order, times with 9 significant digits.
inline void write_cascades(std::ostream& out, const CascadeSet& cs, const NodeIndex& names) {
  for (const Cascade& c : cs.cascades) {
    bool first = true;
    for (const Event& e : c.events()) {
      if (!first) out << ';';
      first = false;
      out << names.label(e.node) << ':' << detail::format_g(e.time, 9);
    }
    out << '\n';
  }
}

// Companion file: one line per cascade, "infector>infectee" pairs joined by
// ';' (empty line for a single-node cascade).
inline void write_transmissions(std::ostream& out, const CascadeSet& cs, const NodeIndex& names) {
  if (!cs.transmissions) throw OracleUnavailableError();
  for (const auto& tx : *cs.transmissions) {
    bool first = true;
    for (const Transmission& t : tx) {
      if (!first) out << ';';
      first = false;
      out << names.label(t.infector) << '>' << names.label(t.infectee);
    }
    out << '\n';
  }
}

namespace detail {

inline NodeId lookup_node(const NodeIndex& names, std::string_view label, std::size_t line_no) {
  if (label.empty()) throw ParseError("empty node label", line_no);
  if (const NodeId* id = names.find(label)) return *id;
  throw ValidationError("unknown node '" + std::string(label) + "' on line " + std::to_string(line_no));
}

inline NodeId resolve_node(NodeIndex& names, std::string_view label, bool extend, std::size_t line_no) {
  if (!extend || label.empty()) return lookup_node(names, label, line_no);
  return names.insert(std::string(label));
}

inline std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

// Reads a cascade file. Unknown node labels are added to `names` when
// `extend_names` is set, otherwise they are a ValidationError. Blank lines
// and '#' comments are skipped.
inline CascadeSet read_cascades(std::istream& in, NodeIndex& names, bool extend_names = true) {
  CascadeSet cs;
  cs.info.model = CascadeModel::kObserved;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::is_data_line(line)) continue;
    std::vector<Event> events;
    for (auto token : detail::split_on(line, ';')) {
      const auto colon = token.rfind(':');
      if (colon == std::string_view::npos) throw ParseError("expected 'node:time'", line_no);
      const NodeId v = detail::resolve_node(names, token.substr(0, colon), extend_names, line_no);
      const double t = detail::parse_double(token.substr(colon + 1), line_no);
      if (t < 0.0) throw ParseError("negative activation time", line_no);
      events.push_back({v, t});
    }
    try {
      cs.cascades.emplace_back(std::move(events));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  cs.node_count = names.size();
  return cs;
}

inline CascadeSet load_cascades(const std::filesystem::path& path, NodeIndex& names, bool extend_names = true) {
  auto in = detail::open_input(path);
  return read_cascades(in, names, extend_names);
}

// Attaches a transmissions file to `cs` (one line per cascade).
inline void read_transmissions(std::istream& in, CascadeSet& cs, const NodeIndex& names) {
  std::vector<std::vector<Transmission>> all;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<Transmission> tx;
    if (!line.empty()) {
      for (auto token : detail::split_on(line, ';')) {
        const auto gt = token.find('>');
        if (gt == std::string_view::npos) throw ParseError("expected 'infector>infectee'", line_no);
        tx.push_back({detail::lookup_node(names, token.substr(0, gt), line_no),
                      detail::lookup_node(names, token.substr(gt + 1), line_no)});
      }
    }
    all.push_back(std::move(tx));
  }
  if (all.size() != cs.size()) {
    throw ValidationError("transmissions file has " + std::to_string(all.size()) + " lines for " +
                          std::to_string(cs.size()) + " cascades");
  }
  cs.transmissions = std::move(all);
  validate_transmissions(cs);
}

inline void load_transmissions(const std::filesystem::path& path, CascadeSet& cs, const NodeIndex& names) {
  auto in = detail::open_input(path);
  read_transmissions(in, cs, names);
}

// Builds cascades from a retweet log with tab-separated columns
//   source_user_id  retweeter_id  timestamp  hashtag_list  hyperlink_count
// A cascade is identified by (hashtag list, source, hyperlink count). The
// original tweet's time is unobserved and imputed so that it precedes the
// first retweet by the gap between the first and second retweets (gap 0 when
// there is a single retweet). Cascades are emitted in order of first
// appearance of their key.
inline CascadeSet read_retweet_log(std::istream& in, NodeIndex& names) {
  struct Retweet {
    NodeId user;
    double time;
  };
  struct Group {
    NodeId source;
    std::vector<Retweet> retweets;
  };
  std::vector<Group> groups;
  std::unordered_map<std::string, std::size_t> group_of;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::is_data_line(line)) continue;
    const auto fields = detail::split_on(line, '\t');
    if (fields.size() != 5) throw ParseError("expected 5 tab-separated columns", line_no);
    const double time = detail::parse_double(fields[2], line_no);
    const double links = detail::parse_double(fields[4], line_no);
    if (links < 0.0 || links != static_cast<double>(static_cast<long long>(links))) {
      throw ParseError("hyperlink count must be a nonnegative integer", line_no);
    }
    const NodeId source = detail::resolve_node(names, fields[0], true, line_no);
    const NodeId user = detail::resolve_node(names, fields[1], true, line_no);
    std::string key = std::string(fields[3]);
    key += '\x1f';
    key += names.label(source);
    key += '\x1f';
    key += std::to_string(static_cast<long long>(links));
    auto [it, inserted] = group_of.try_emplace(std::move(key), groups.size());
    if (inserted) groups.push_back({source, {}});
    groups[it->second].retweets.push_back({user, time});
  }

  CascadeSet cs;
  cs.info.model = CascadeModel::kObserved;
  for (Group& g : groups) {
    std::stable_sort(g.retweets.begin(), g.retweets.end(),
                     [](const Retweet& a, const Retweet& b) { return a.time < b.time; });
    std::vector<Event> events;
    std::vector<char> seen;
    auto mark = [&](NodeId v) {
      if (seen.size() <= v) seen.resize(v + 1, 0);
      const bool fresh = !seen[v];
      seen[v] = 1;
      return fresh;
    };
    mark(g.source);
    for (const Retweet& r : g.retweets) {
      if (mark(r.user)) events.push_back({r.user, r.time});
    }
    double source_time = 0.0;
    if (!events.empty()) {
      const double gap = events.size() >= 2 ? events[1].time - events[0].time : 0.0;
      source_time = events[0].time - gap;
    }
    events.insert(events.begin(), Event{g.source, source_time});
    cs.cascades.emplace_back(std::move(events));
  }
  cs.node_count = names.size();
  return cs;
}

inline CascadeSet ingest_retweet_log(const std::filesystem::path& path, NodeIndex& names) {
  auto in = detail::open_input(path);
  return read_retweet_log(in, names);
}

}  // namespace ccd
