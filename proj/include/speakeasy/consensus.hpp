#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "speakeasy/graph.hpp"
#include "speakeasy/io.hpp"
#include "speakeasy/labelprop.hpp"
#include "speakeasy/metrics.hpp"
#include "speakeasy/parallel.hpp"
#include "speakeasy/random.hpp"

namespace speakeasy {

/// R partitions of one node set, in seed-index order.
struct PartitionEnsemble {
  std::vector<Partition> partitions;
  std::vector<std::uint64_t> seeds;

  std::size_t size() const noexcept { return partitions.size(); }
};

/// Seed of replicate i under master seed s.
inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t index) {
  return mix_seed(master, index);
}

inline PartitionEnsemble replicate(const Graph& g, const EngineParams& p, std::size_t replicates,
                                   int jobs = 1) {
  if (replicates < 1) throw Error("replicate count must be >= 1");
  p.validate();
  PartitionEnsemble e;
  e.partitions.resize(replicates);
  e.seeds.resize(replicates);
  for (std::size_t i = 0; i < replicates; ++i) e.seeds[i] = replicate_seed(p.seed, i);
  parallel_for(replicates, jobs, [&](std::size_t i) {
    EngineParams q = p;
    q.seed = e.seeds[i];
    e.partitions[i] = run(g, q);
  });
  return e;
}

/// Index of the member with the highest mean ARI against all other members
/// (lowest index on ties; means within 1e-12 count as tied).
inline std::size_t representative_index(const PartitionEnsemble& e, int jobs = 1) {
  const std::size_t r = e.size();
  if (r == 0) throw Error("empty ensemble");
  if (r == 1) return 0;
  for (const auto& p : e.partitions)
    if (p.num_nodes() != e.partitions.front().num_nodes())
      throw Error("ensemble partitions cover different node sets");
  std::vector<double> pairwise(r * r, 0.0);
  parallel_for(r, jobs, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < r; ++j) pairwise[i * r + j] = ari(e.partitions[i], e.partitions[j]);
  });
  std::size_t best = 0;
  double best_mean = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < r; ++j)
      if (j != i) sum += pairwise[std::min(i, j) * r + std::max(i, j)];
    const double mean = sum / static_cast<double>(r - 1);
    if (i == 0 || mean > best_mean + 1e-12) {
      best = i;
      best_mean = mean;
    }
  }
  return best;
}

inline Partition representative_partition(const PartitionEnsemble& e, int jobs = 1) {
  return e.partitions[representative_index(e, jobs)];
}

/// Symmetric n x n counts of how many ensemble members co-cluster each pair.
class CoOccurrenceMatrix {
 public:
  CoOccurrenceMatrix() = default;
  CoOccurrenceMatrix(std::size_t n, std::uint32_t replicates)
      : n_(n), replicates_(replicates), counts_(n * n, 0) {}

  std::size_t num_nodes() const noexcept { return n_; }
  std::uint32_t replicates() const noexcept { return replicates_; }
  std::uint32_t operator()(NodeId i, NodeId j) const { return counts_[std::size_t{i} * n_ + j]; }
  std::uint32_t& at(NodeId i, NodeId j) { return counts_[std::size_t{i} * n_ + j]; }

  /// counts / R.
  double fraction(NodeId i, NodeId j) const {
    return static_cast<double>((*this)(i, j)) / static_cast<double>(replicates_);
  }

  /// Adds one partition's co-clustered pairs (including the diagonal).
  void accumulate(const Partition& p) {
    for (const auto& members : p.communities())
      for (auto a : members)
        for (auto b : members) ++at(a, b);
  }

  friend bool operator==(const CoOccurrenceMatrix&, const CoOccurrenceMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::uint32_t replicates_ = 0;
  std::vector<std::uint32_t> counts_;
};

inline CoOccurrenceMatrix co_occurrence(const PartitionEnsemble& e) {
  if (e.size() == 0) throw Error("empty ensemble");
  CoOccurrenceMatrix c(e.partitions.front().num_nodes(), static_cast<std::uint32_t>(e.size()));
  for (const auto& p : e.partitions) {
    if (p.num_nodes() != c.num_nodes()) throw Error("ensemble partitions cover different node sets");
    c.accumulate(p);
  }
  return c;
}

/// Dense TSV with a `# R=<replicates>` header line.
inline void write_cooccurrence(std::ostream& out, const CoOccurrenceMatrix& c) {
  out << "# R=" << c.replicates() << '\n';
  for (NodeId i = 0; i < c.num_nodes(); ++i) {
    for (NodeId j = 0; j < c.num_nodes(); ++j) out << (j ? "\t" : "") << c(i, j);
    out << '\n';
  }
}

inline CoOccurrenceMatrix read_cooccurrence(std::istream& in, const std::string& source = "<cooccurrence>") {
  std::string line;
  std::size_t lineno = 0;
  std::uint32_t replicates = 0;
  std::vector<std::vector<std::uint32_t>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim(line);
    if (t.starts_with("# R=")) {
      if (!detail::parse_uint(t.substr(4), replicates)) throw FormatError(source, lineno, "bad R header");
      continue;
    }
    if (!detail::is_data_line(t)) continue;
    std::vector<std::uint32_t> row;
    for (auto f : detail::split_fields(t)) {
      std::uint32_t x;
      if (!detail::parse_uint(f, x)) throw FormatError(source, lineno, "bad count");
      row.push_back(x);
    }
    rows.push_back(std::move(row));
  }
  if (replicates == 0) throw FormatError(source, lineno, "missing '# R=' header");
  CoOccurrenceMatrix c(rows.size(), replicates);
  for (NodeId i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw FormatError(source, i + 1, "matrix is not square");
    for (NodeId j = 0; j < rows.size(); ++j) c.at(i, j) = rows[i][j];
  }
  return c;
}

/// Cover anchored on the representative partition: node v joins every
/// representative community whose mean co-occurrence fraction with v (v
/// itself excluded) reaches 1 / max_communities, and always keeps its own.
inline Cover multi_community_nodes(const CoOccurrenceMatrix& c, const Partition& rep, int max_communities) {
  if (max_communities < 1) throw Error("max communities must be >= 1");
  if (rep.num_nodes() != c.num_nodes()) throw Error("co-occurrence and partition node sets differ");
  const std::size_t n = c.num_nodes(), k = rep.num_communities();
  std::vector<std::uint64_t> community_size(k, 0);
  for (NodeId v = 0; v < n; ++v) ++community_size[rep[v]];

  std::vector<std::vector<CommunityId>> memberships(n);
  std::vector<std::uint64_t> sum(k);
  for (NodeId v = 0; v < n; ++v) {
    std::fill(sum.begin(), sum.end(), 0);
    for (NodeId u = 0; u < n; ++u)
      if (u != v) sum[rep[u]] += c(v, u);
    for (CommunityId cid = 0; cid < k; ++cid) {
      if (cid == rep[v]) {
        memberships[v].push_back(cid);
        continue;
      }
      // sum / (R * size) >= 1 / max, kept in integers to avoid boundary rounding.
      const std::uint64_t others = community_size[cid];
      if (sum[cid] * static_cast<std::uint64_t>(max_communities) >=
          std::uint64_t{c.replicates()} * others)
        memberships[v].push_back(cid);
    }
  }
  return Cover(std::move(memberships));
}

/// Representative partition of R replicate runs.
inline Partition consensus_partition(const Graph& g, const EngineParams& p, std::size_t replicates,
                                     int jobs = 1) {
  return representative_partition(replicate(g, p, replicates, jobs), jobs);
}

/// Iterative refinement: level 1 is the consensus partition of g; each later
/// level re-clusters every community of size >= 2 on its induced subgraph.
/// Community ids stay dense, ordered by parent community then sub-community.
inline std::vector<Partition> subcluster(const Graph& g, const EngineParams& p, int depth,
                                         std::size_t replicates, int jobs = 1) {
  if (depth < 1) throw Error("subcluster depth must be >= 1");
  std::vector<Partition> levels;
  levels.push_back(consensus_partition(g, p, replicates, jobs));
  for (int level = 1; level < depth; ++level) {
    const auto parents = levels.back().communities();
    std::vector<CommunityId> next(g.num_nodes());
    CommunityId next_id = 0;
    for (std::size_t c = 0; c < parents.size(); ++c) {
      const auto& members = parents[c];
      if (members.size() < 2) {
        for (auto v : members) next[v] = next_id;
        ++next_id;
        continue;
      }
      auto sub = induced_subgraph(g, members);
      EngineParams q = p;
      q.seed = mix_seed(p.seed, {static_cast<std::uint64_t>(level), c});
      auto part = consensus_partition(sub.graph, q, replicates, jobs);
      for (NodeId i = 0; i < sub.original.size(); ++i) next[sub.original[i]] = next_id + part[i];
      next_id += static_cast<CommunityId>(part.num_communities());
    }
    levels.push_back(Partition::from_dense(std::move(next)));
  }
  return levels;
}

}  // namespace speakeasy
