#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace speakeasy {

using NodeId = std::uint32_t;
using CommunityId = std::uint32_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

struct Edge {
  NodeId src;
  NodeId dst;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  NodeId node;
  double weight;
};

/// Immutable sparse weighted graph over dense node ids [0, n).
///
/// Undirected graphs store each unordered pair once in edges() and expose it
/// from both endpoints through in_neighbors(). Directed graphs expose only
/// sources of incoming edges, since labels flow along edge direction.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n, std::vector<Edge> edges, bool directed = false)
      : n_(n), edges_(std::move(edges)), directed_(directed) {
    validate();
    build_adjacency();
  }

  std::size_t num_nodes() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  bool directed() const noexcept { return directed_; }
  std::span<const Edge> edges() const noexcept { return edges_; }

  std::span<const Neighbor> in_neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }

  std::size_t in_degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

  /// Optional external names, one per node (empty when the input had none).
  const std::vector<std::string>& names() const noexcept { return names_; }

  void set_names(std::vector<std::string> names) {
    if (!names.empty() && names.size() != n_)
      throw GraphError("name table has " + std::to_string(names.size()) +
                       " entries for " + std::to_string(n_) + " nodes");
    names_ = std::move(names);
  }

 private:
  void validate() const {
    for (const auto& e : edges_) {
      if (e.src >= n_ || e.dst >= n_)
        throw GraphError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                         ") references a node outside [0, " + std::to_string(n_) + ")");
      if (e.src == e.dst) throw GraphError("self-loop on node " + std::to_string(e.src));
      if (!std::isfinite(e.weight))
        throw GraphError("non-finite weight on edge (" + std::to_string(e.src) + ", " +
                         std::to_string(e.dst) + ")");
    }
    if (directed_) return;
    std::vector<std::uint64_t> keys;
    keys.reserve(edges_.size());
    for (const auto& e : edges_) {
      auto [lo, hi] = std::minmax(e.src, e.dst);
      keys.push_back((std::uint64_t{lo} << 32) | hi);
    }
    std::sort(keys.begin(), keys.end());
    auto dup = std::adjacent_find(keys.begin(), keys.end());
    if (dup != keys.end())
      throw GraphError("duplicate undirected edge (" + std::to_string(*dup >> 32) + ", " +
                       std::to_string(*dup & 0xffffffffu) + ")");
  }

  void build_adjacency() {
    offsets_.assign(n_ + 1, 0);
    for (const auto& e : edges_) {
      ++offsets_[e.dst + 1];
      if (!directed_) ++offsets_[e.src + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    adjacency_.resize(offsets_[n_]);
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& e : edges_) {
      adjacency_[cursor[e.dst]++] = {e.src, e.weight};
      if (!directed_) adjacency_[cursor[e.src]++] = {e.dst, e.weight};
    }
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  bool directed_ = false;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> adjacency_;
  std::vector<std::string> names_;
};

/// Total assignment of nodes to disjoint communities with dense ids.
class Partition {
 public:
  Partition() = default;

  /// Relabels arbitrary labels to dense ids in order of first appearance.
  template <typename Label>
  static Partition from_labels(std::span<const Label> labels) {
    Partition p;
    p.assignment_.resize(labels.size());
    std::unordered_map<Label, CommunityId> dense;
    dense.reserve(labels.size());
    for (std::size_t v = 0; v < labels.size(); ++v) {
      auto [it, inserted] = dense.try_emplace(labels[v], static_cast<CommunityId>(dense.size()));
      p.assignment_[v] = it->second;
    }
    p.num_communities_ = dense.size();
    return p;
  }

  template <typename Label>
  static Partition from_labels(const std::vector<Label>& labels) {
    return from_labels(std::span<const Label>(labels));
  }

  /// Adopts an assignment whose ids must already be dense in [0, k).
  static Partition from_dense(std::vector<CommunityId> assignment) {
    Partition p;
    std::size_t k = 0;
    for (auto c : assignment) k = std::max<std::size_t>(k, std::size_t{c} + 1);
    std::vector<bool> used(k, false);
    for (auto c : assignment) used[c] = true;
    if (std::find(used.begin(), used.end(), false) != used.end())
      throw Error("partition community ids are not dense");
    p.assignment_ = std::move(assignment);
    p.num_communities_ = k;
    return p;
  }

  std::size_t num_nodes() const noexcept { return assignment_.size(); }
  std::size_t num_communities() const noexcept { return num_communities_; }
  CommunityId operator[](NodeId v) const { return assignment_[v]; }
  std::span<const CommunityId> assignment() const noexcept { return assignment_; }

  /// Members of each community, ascending.
  std::vector<std::vector<NodeId>> communities() const {
    std::vector<std::vector<NodeId>> out(num_communities_);
    for (NodeId v = 0; v < assignment_.size(); ++v) out[assignment_[v]].push_back(v);
    return out;
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<CommunityId> assignment_;
  std::size_t num_communities_ = 0;
};

/// Assignment of every node to one or more communities.
class Cover {
 public:
  Cover() = default;

  explicit Cover(std::vector<std::vector<CommunityId>> memberships)
      : memberships_(std::move(memberships)) {
    for (std::size_t v = 0; v < memberships_.size(); ++v) {
      auto& m = memberships_[v];
      if (m.empty()) throw Error("node " + std::to_string(v) + " has no community in cover");
      std::sort(m.begin(), m.end());
      m.erase(std::unique(m.begin(), m.end()), m.end());
    }
  }

  static Cover from_partition(const Partition& p) {
    std::vector<std::vector<CommunityId>> m(p.num_nodes());
    for (NodeId v = 0; v < p.num_nodes(); ++v) m[v] = {p[v]};
    return Cover(std::move(m));
  }

  std::size_t num_nodes() const noexcept { return memberships_.size(); }
  std::span<const CommunityId> operator[](NodeId v) const { return memberships_[v]; }
  bool is_multi(NodeId v) const { return memberships_[v].size() >= 2; }

  std::size_t num_communities() const {
    std::size_t k = 0;
    for (const auto& m : memberships_)
      if (!m.empty()) k = std::max<std::size_t>(k, std::size_t{m.back()} + 1);
    return k;
  }

  /// Member lists indexed by community id; ids that are never used stay empty.
  std::vector<std::vector<NodeId>> communities() const {
    std::vector<std::vector<NodeId>> out(num_communities());
    for (NodeId v = 0; v < memberships_.size(); ++v)
      for (auto c : memberships_[v]) out[c].push_back(v);
    return out;
  }

  /// True when every node has exactly one community.
  bool is_disjoint() const {
    return std::all_of(memberships_.begin(), memberships_.end(),
                       [](const auto& m) { return m.size() == 1; });
  }

  friend bool operator==(const Cover&, const Cover&) = default;

 private:
  std::vector<std::vector<CommunityId>> memberships_;
};

struct Subgraph {
  Graph graph;
  /// old id -> new id; only selected nodes are present.
  std::unordered_map<NodeId, NodeId> remap;
  /// new id -> old id.
  std::vector<NodeId> original;
};

/// Keeps exactly the edges with both endpoints selected; new ids follow
/// ascending old id.
inline Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
  std::vector<NodeId> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (!sorted.empty() && sorted.back() >= g.num_nodes())
    throw GraphError("node " + std::to_string(sorted.back()) + " out of range for subgraph");

  std::vector<std::int64_t> to_new(g.num_nodes(), -1);
  Subgraph out;
  out.original = sorted;
  for (NodeId i = 0; i < sorted.size(); ++i) {
    to_new[sorted[i]] = i;
    out.remap.emplace(sorted[i], i);
  }
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) {
    if (to_new[e.src] >= 0 && to_new[e.dst] >= 0)
      edges.push_back({static_cast<NodeId>(to_new[e.src]), static_cast<NodeId>(to_new[e.dst]),
                       e.weight});
  }
  out.graph = Graph(sorted.size(), std::move(edges), g.directed());
  if (!g.names().empty()) {
    std::vector<std::string> names;
    names.reserve(sorted.size());
    for (auto v : sorted) names.push_back(g.names()[v]);
    out.graph.set_names(std::move(names));
  }
  return out;
}

inline Subgraph induced_subgraph(const Graph& g, const std::vector<NodeId>& nodes) {
  return induced_subgraph(g, std::span<const NodeId>(nodes));
}

}  // namespace speakeasy
