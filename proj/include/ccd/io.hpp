#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ccd/errors.hpp"
#include "ccd/graph.hpp"
#include "ccd/partition.hpp"

namespace ccd {

struct LabeledGraph {
  Graph graph;
  NodeIndex names;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Strips a trailing CR and reports whether the line carries data.
inline bool is_data_line(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto first = line.find_first_not_of(" \t");
  return first != std::string::npos && line[first] != '#';
}

inline double parse_double(std::string_view token, std::size_t line_no) {
  std::string s(token);
  std::size_t used = 0;
  double value;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError("expected a number, got '" + s + "'", line_no);
  }
  if (used != s.size()) throw ParseError("expected a number, got '" + s + "'", line_no);
  return value;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return in;
}

inline std::string format_g(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

}  // namespace detail

// Reads "u v" or "u v w" lines (tab or space separated, '#' comments).
// Node labels may be any token; ids are assigned by NodeIndex::from_labels.
inline LabeledGraph read_edge_list(std::istream& in) {
  struct Row {
    std::string u, v;
    double w;
  };
  std::vector<Row> rows;
  std::vector<std::string> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::is_data_line(line)) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 2 && fields.size() != 3) {
      throw ParseError("expected 'u v' or 'u v w'", line_no);
    }
    double w = 1.0;
    if (fields.size() == 3) {
      w = detail::parse_double(fields[2], line_no);
      if (w < 0.0) throw ValidationError("negative edge weight on line " + std::to_string(line_no));
    }
    rows.push_back({std::string(fields[0]), std::string(fields[1]), w});
    labels.push_back(rows.back().u);
    labels.push_back(rows.back().v);
  }
  LabeledGraph out;
  out.names = NodeIndex::from_labels(std::move(labels));
  GraphBuilder builder(out.names.size());
  for (const Row& r : rows) builder.add_edge(*out.names.find(r.u), *out.names.find(r.v), r.w);
  out.graph = builder.build();
  return out;
}

inline LabeledGraph load_edge_list(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_edge_list(in);
}

// Reads "node label" lines against a known node index. With
// `require_complete`, every indexed node must appear (ground-truth files);
// otherwise unlisted nodes stay unassigned (predicted partitions over V_0).
inline Partition read_communities(std::istream& in, const NodeIndex& names, bool require_complete = true) {
  std::vector<long long> raw(names.size(), -1);
  std::unordered_map<std::string, long long> label_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::is_data_line(line)) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 2) throw ParseError("expected 'node label'", line_no);
    const NodeId* id = names.find(fields[0]);
    if (!id) {
      throw ValidationError("unknown node '" + std::string(fields[0]) + "' on line " +
                            std::to_string(line_no));
    }
    if (raw[*id] != -1) {
      throw ValidationError("node '" + std::string(fields[0]) + "' listed twice (line " +
                            std::to_string(line_no) + ")");
    }
    auto [it, _] = label_ids.try_emplace(std::string(fields[1]), static_cast<long long>(label_ids.size()));
    raw[*id] = it->second;
  }
  if (require_complete) {
    for (std::size_t v = 0; v < raw.size(); ++v) {
      if (raw[v] == -1) {
        throw IncompleteGroundTruthError("node '" + names.label(static_cast<NodeId>(v)) +
                                         "' has no community");
      }
    }
  }
  return Partition::from_labels(raw);
}

inline Partition load_communities(const std::filesystem::path& path, const NodeIndex& names,
                                  bool require_complete = true) {
  auto in = detail::open_input(path);
  return read_communities(in, names, require_complete);
}

// Unit-weight graphs are written as "u\tv"; otherwise weights are printed
// with 17 significant digits so they read back exactly.
inline void write_edge_list(std::ostream& out, const Graph& g, const NodeIndex& names) {
  bool weighted = false;
  for (const Edge& e : g.edges()) weighted |= e.weight != 1.0;
  for (const Edge& e : g.edges()) {
    out << names.label(e.u) << '\t' << names.label(e.v);
    if (weighted) out << '\t' << detail::format_g(e.weight, 17);
    out << '\n';
  }
}

inline void write_communities(std::ostream& out, const Partition& p, const NodeIndex& names) {
  for (NodeId v : p.support()) out << names.label(v) << '\t' << p[v] << '\n';
}

inline DatasetBundle load_dataset(const std::string& name, const std::filesystem::path& edges,
                                  const std::filesystem::path& communities) {
  auto lg = load_edge_list(edges);
  DatasetBundle d{name, std::move(lg.graph), Partition{}, std::move(lg.names)};
  d.ground_truth = load_communities(communities, d.names);
  validate_bundle(d);
  return d;
}

}  // namespace ccd
