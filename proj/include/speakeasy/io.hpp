#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "speakeasy/graph.hpp"

namespace speakeasy {

class FormatError : public Error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = '\t') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Blank lines and `#` comments carry no data.
inline bool is_data_line(std::string_view line) {
  line = trim(line);
  return !line.empty() && line.front() != '#';
}

template <typename T>
bool parse_uint(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  // strtod accepts inf/nan spellings which callers reject separately.
  std::string buf(s);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size();
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

/// Shortest round-trippable decimal form of a double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses `src<TAB>dst[<TAB>weight]` lines. n = 1 + largest id seen.
inline Graph parse_edge_list(std::istream& in, bool directed, const std::string& source = "<edges>") {
  std::vector<Edge> edges;
  std::size_t n = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!detail::is_data_line(line)) continue;
    auto fields = detail::split_fields(detail::trim(line));
    if (fields.size() < 2 || fields.size() > 3)
      throw FormatError(source, lineno, "expected 2 or 3 tab-separated fields");
    Edge e;
    if (!detail::parse_uint(fields[0], e.src) || !detail::parse_uint(fields[1], e.dst))
      throw FormatError(source, lineno, "node ids must be non-negative integers");
    if (fields.size() == 3 && !detail::parse_double(fields[2], e.weight))
      throw FormatError(source, lineno, "weight is not a number");
    if (!std::isfinite(e.weight)) throw FormatError(source, lineno, "non-finite weight");
    if (e.src == e.dst) throw FormatError(source, lineno, "self-loop on node " + std::to_string(e.src));
    n = std::max<std::size_t>(n, std::size_t{std::max(e.src, e.dst)} + 1);
    edges.push_back(e);
  }
  try {
    return Graph(n, std::move(edges), directed);
  } catch (const GraphError& err) {
    throw GraphError(source + ": " + err.what());
  }
}

inline Graph load_edge_list(const std::string& path, bool directed = false) {
  auto in = detail::open_input(path);
  return parse_edge_list(in, directed, path);
}

inline void write_edge_list(std::ostream& out, const Graph& g) {
  for (const auto& e : g.edges())
    out << e.src << '\t' << e.dst << '\t' << detail::format_double(e.weight) << '\n';
}

/// Square numeric matrix with optional node names.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // row-major n*n
  std::vector<std::string> names;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

inline DenseMatrix parse_dense_matrix(std::istream& in, const std::string& source = "<matrix>") {
  DenseMatrix m;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!detail::is_data_line(line)) continue;
    auto fields = detail::split_fields(detail::trim(line));
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (auto f : fields) {
      double x;
      if (!detail::parse_double(f, x)) {
        numeric = false;
        break;
      }
      row.push_back(x);
    }
    if (!numeric) {
      if (!first) throw FormatError(source, lineno, "non-numeric matrix entry");
      for (auto f : fields) m.names.emplace_back(detail::trim(f));
      first = false;
      continue;
    }
    first = false;
    for (double x : row)
      if (!std::isfinite(x)) throw FormatError(source, lineno, "non-finite matrix entry");
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError(source, lineno, "row length " + std::to_string(row.size()) +
                                            " differs from " + std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  m.n = rows.size();
  if (!rows.empty() && rows.front().size() != m.n)
    throw FormatError(source, lineno, "matrix is not square (" + std::to_string(m.n) + " rows, " +
                                          std::to_string(rows.front().size()) + " columns)");
  if (!m.names.empty() && m.names.size() != m.n)
    throw FormatError(source, 1, "header has " + std::to_string(m.names.size()) +
                                     " names for " + std::to_string(m.n) + " columns");
  m.values.reserve(m.n * m.n);
  for (auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
  return m;
}

inline DenseMatrix load_dense_matrix(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_dense_matrix(in, path);
}

inline constexpr double kSymmetryTolerance = 1e-9;

/// Builds an undirected graph from the upper triangle; zero entries are
/// dropped. With zero_diagonal the diagonal is ignored, otherwise a non-zero
/// diagonal entry is rejected as a self-loop.
inline Graph graph_from_dense(const DenseMatrix& m, bool zero_diagonal = true) {
  for (std::size_t i = 0; i < m.n; ++i) {
    if (!zero_diagonal && m(i, i) != 0.0)
      throw GraphError("self-loop: non-zero diagonal entry at row " + std::to_string(i));
    for (std::size_t j = i + 1; j < m.n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > kSymmetryTolerance)
        throw GraphError("matrix is asymmetric at (" + std::to_string(i) + ", " +
                         std::to_string(j) + ")");
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = i + 1; j < m.n; ++j)
      if (m(i, j) != 0.0)
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), m(i, j)});
  Graph g(m.n, std::move(edges), false);
  g.set_names(m.names);
  return g;
}

inline Graph from_dense_matrix(const std::string& path, bool zero_diagonal = true) {
  auto m = load_dense_matrix(path);
  try {
    return graph_from_dense(m, zero_diagonal);
  } catch (const GraphError& err) {
    throw GraphError(path + ": " + err.what());
  }
}

inline void write_partition(std::ostream& out, const Partition& p) {
  for (NodeId v = 0; v < p.num_nodes(); ++v) out << v << '\t' << p[v] << '\n';
}

inline void write_cover(std::ostream& out, const Cover& c) {
  for (NodeId v = 0; v < c.num_nodes(); ++v) {
    out << v << '\t';
    auto m = c[v];
    for (std::size_t i = 0; i < m.size(); ++i) out << (i ? "," : "") << m[i];
    out << '\n';
  }
}

namespace detail {

/// Rows of `node<TAB>payload`; every node in [0, n) must appear exactly once.
inline std::vector<std::string> read_node_rows(std::istream& in, const std::string& source) {
  std::vector<std::string> payload;
  std::vector<bool> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!is_data_line(line)) continue;
    auto fields = split_fields(trim(line));
    if (fields.size() != 2) throw FormatError(source, lineno, "expected node<TAB>community");
    NodeId v;
    if (!parse_uint(fields[0], v)) throw FormatError(source, lineno, "bad node id");
    if (v >= payload.size()) {
      payload.resize(std::size_t{v} + 1);
      seen.resize(std::size_t{v} + 1, false);
    }
    if (seen[v]) throw FormatError(source, lineno, "node " + std::to_string(v) + " listed twice");
    seen[v] = true;
    payload[v] = std::string(trim(fields[1]));
  }
  for (std::size_t v = 0; v < seen.size(); ++v)
    if (!seen[v]) throw FormatError(source, lineno, "node " + std::to_string(v) + " missing");
  return payload;
}

}  // namespace detail

inline Partition read_partition(std::istream& in, const std::string& source = "<partition>") {
  auto rows = detail::read_node_rows(in, source);
  std::vector<CommunityId> labels(rows.size());
  for (std::size_t v = 0; v < rows.size(); ++v)
    if (!detail::parse_uint(rows[v], labels[v]))
      throw FormatError(source, 0, "bad community id for node " + std::to_string(v));
  try {
    return Partition::from_dense(labels);
  } catch (const Error&) {
    return Partition::from_labels(labels);
  }
}

inline Cover read_cover(std::istream& in, const std::string& source = "<cover>") {
  auto rows = detail::read_node_rows(in, source);
  std::vector<std::vector<CommunityId>> m(rows.size());
  for (std::size_t v = 0; v < rows.size(); ++v) {
    for (auto f : detail::split_fields(rows[v], ',')) {
      CommunityId c;
      if (!detail::parse_uint(f, c))
        throw FormatError(source, 0, "bad community list for node " + std::to_string(v));
      m[v].push_back(c);
    }
  }
  return Cover(std::move(m));
}

inline void save_partition(const std::string& path, const Partition& p) {
  auto out = detail::open_output(path);
  write_partition(out, p);
  if (!out) throw IoError("write failed: " + path);
}

inline void save_cover(const std::string& path, const Cover& c) {
  auto out = detail::open_output(path);
  write_cover(out, c);
  if (!out) throw IoError("write failed: " + path);
}

inline Partition load_partition(const std::string& path) {
  auto in = detail::open_input(path);
  return read_partition(in, path);
}

inline Cover load_cover(const std::string& path) {
  auto in = detail::open_input(path);
  return read_cover(in, path);
}

}  // namespace speakeasy
