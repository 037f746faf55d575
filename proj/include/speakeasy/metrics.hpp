#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "speakeasy/graph.hpp"

namespace speakeasy {

/// Sparse contingency table between two partitions of the same node set.
struct ContingencyTable {
  struct Cell {
    CommunityId row;
    CommunityId col;
    std::uint64_t count;
  };

  std::vector<Cell> cells;  // non-zero cells, sorted by (row, col)
  std::vector<std::uint64_t> row_sums;
  std::vector<std::uint64_t> col_sums;
  std::uint64_t total = 0;

  std::uint64_t at(CommunityId r, CommunityId c) const {
    auto it = std::lower_bound(cells.begin(), cells.end(), std::pair{r, c},
                               [](const Cell& x, const std::pair<CommunityId, CommunityId>& key) {
                                 return std::pair{x.row, x.col} < key;
                               });
    return it != cells.end() && it->row == r && it->col == c ? it->count : 0;
  }
};

namespace detail {

inline void require_same_nodes(std::size_t a, std::size_t b) {
  if (a != b)
    throw Error("node-set mismatch: " + std::to_string(a) + " vs " + std::to_string(b) + " nodes");
}

inline double choose2(std::uint64_t x) { return 0.5 * static_cast<double>(x) * (static_cast<double>(x) - 1.0); }

/// a = pairs together in both, p = together in P, q = together in Q, m = all pairs.
struct PairCounts {
  double both = 0, in_p = 0, in_q = 0, all = 0;
};

}  // namespace detail

inline ContingencyTable contingency(const Partition& p, const Partition& q) {
  detail::require_same_nodes(p.num_nodes(), q.num_nodes());
  ContingencyTable t;
  t.total = p.num_nodes();
  t.row_sums.assign(p.num_communities(), 0);
  t.col_sums.assign(q.num_communities(), 0);
  std::vector<std::uint64_t> keys(p.num_nodes());
  for (NodeId v = 0; v < p.num_nodes(); ++v) {
    keys[v] = (std::uint64_t{p[v]} << 32) | q[v];
    ++t.row_sums[p[v]];
    ++t.col_sums[q[v]];
  }
  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    t.cells.push_back({static_cast<CommunityId>(keys[i] >> 32),
                       static_cast<CommunityId>(keys[i] & 0xffffffffu), j - i});
    i = j;
  }
  return t;
}

namespace detail {

inline PairCounts pair_counts(const ContingencyTable& t) {
  PairCounts pc;
  for (const auto& c : t.cells) pc.both += choose2(c.count);
  for (auto r : t.row_sums) pc.in_p += choose2(r);
  for (auto c : t.col_sums) pc.in_q += choose2(c);
  pc.all = choose2(t.total);
  return pc;
}

inline double entropy(const std::vector<std::uint64_t>& sizes, double n) {
  double h = 0.0;
  for (auto s : sizes)
    if (s) {
      const double p = static_cast<double>(s) / n;
      h -= p * std::log(p);
    }
  return h;
}

}  // namespace detail

/// Normalized mutual information, 2 I(P;Q) / (H(P) + H(Q)).
inline double nmi(const Partition& p, const Partition& q) {
  auto t = contingency(p, q);
  const double n = static_cast<double>(t.total);
  const double hp = detail::entropy(t.row_sums, n);
  const double hq = detail::entropy(t.col_sums, n);
  if (hp + hq == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& c : t.cells) {
    const double nij = static_cast<double>(c.count);
    mi += nij / n * std::log(n * nij / (static_cast<double>(t.row_sums[c.row]) * t.col_sums[c.col]));
  }
  return std::clamp(2.0 * mi / (hp + hq), 0.0, 1.0);
}

/// Hubert-Arabie adjusted Rand index. Can be slightly negative.
inline double ari(const Partition& p, const Partition& q) {
  auto pc = detail::pair_counts(contingency(p, q));
  if (pc.all == 0.0) return 1.0;
  const double expected = pc.in_p * pc.in_q / pc.all;
  const double max_index = 0.5 * (pc.in_p + pc.in_q);
  if (max_index == expected) return 1.0;
  return (pc.both - expected) / (max_index - expected);
}

inline double rand_index(const Partition& p, const Partition& q) {
  auto pc = detail::pair_counts(contingency(p, q));
  if (pc.all == 0.0) return 1.0;
  return (pc.all - pc.in_p - pc.in_q + 2.0 * pc.both) / pc.all;
}

/// Pair-counting Jaccard index.
inline double jaccard_index(const Partition& p, const Partition& q) {
  auto pc = detail::pair_counts(contingency(p, q));
  const double denom = pc.in_p + pc.in_q - pc.both;
  return denom == 0.0 ? 1.0 : pc.both / denom;
}

/// Best-match F-measure averaged over both directions.
inline double f_measure(const Partition& p, const Partition& q) {
  auto t = contingency(p, q);
  if (t.total == 0) return 1.0;
  std::vector<double> best_row(t.row_sums.size(), 0.0), best_col(t.col_sums.size(), 0.0);
  for (const auto& c : t.cells) {
    const double f = 2.0 * static_cast<double>(c.count) /
                     static_cast<double>(t.row_sums[c.row] + t.col_sums[c.col]);
    best_row[c.row] = std::max(best_row[c.row], f);
    best_col[c.col] = std::max(best_col[c.col], f);
  }
  double fp = 0.0, fq = 0.0;
  for (std::size_t i = 0; i < best_row.size(); ++i) fp += static_cast<double>(t.row_sums[i]) * best_row[i];
  for (std::size_t j = 0; j < best_col.size(); ++j) fq += static_cast<double>(t.col_sums[j]) * best_col[j];
  const double n = static_cast<double>(t.total);
  return 0.5 * (fp / n + fq / n);
}

/// Normalized van Dongen distance; 0 for identical partitions.
inline double nvd(const Partition& p, const Partition& q) {
  auto t = contingency(p, q);
  if (t.total == 0) return 0.0;
  std::vector<std::uint64_t> max_row(t.row_sums.size(), 0), max_col(t.col_sums.size(), 0);
  for (const auto& c : t.cells) {
    max_row[c.row] = std::max(max_row[c.row], c.count);
    max_col[c.col] = std::max(max_col[c.col], c.count);
  }
  std::uint64_t s = 0;
  for (auto x : max_row) s += x;
  for (auto x : max_col) s += x;
  return 1.0 - static_cast<double>(s) / (2.0 * static_cast<double>(t.total));
}

enum class QualityKind { Q, Qds };

struct QualityScore {
  double value;
  QualityKind kind;
};

namespace detail {

/// Community-level aggregates over the positive-weight undirected subgraph.
struct CommunityWeights {
  double total = 0.0;                     // m
  std::vector<double> internal;           // e_c
  std::vector<double> degree;             // d_c
  std::vector<double> size;               // n_c
  std::unordered_map<std::uint64_t, double> between;  // e_{c,c'} keyed (lo, hi)
};

inline CommunityWeights community_weights(const Graph& g, const Partition& p, bool with_between) {
  require_same_nodes(g.num_nodes(), p.num_nodes());
  if (g.directed()) throw Error("modularity requires an undirected graph");
  CommunityWeights cw;
  const auto k = p.num_communities();
  cw.internal.assign(k, 0.0);
  cw.degree.assign(k, 0.0);
  cw.size.assign(k, 0.0);
  for (NodeId v = 0; v < p.num_nodes(); ++v) cw.size[p[v]] += 1.0;
  for (const auto& e : g.edges()) {
    if (e.weight <= 0.0) continue;
    cw.total += e.weight;
    const auto a = p[e.src], b = p[e.dst];
    cw.degree[a] += e.weight;
    cw.degree[b] += e.weight;
    if (a == b) {
      cw.internal[a] += e.weight;
    } else if (with_between) {
      auto [lo, hi] = std::minmax(a, b);
      cw.between[(std::uint64_t{lo} << 32) | hi] += e.weight;
    }
  }
  if (cw.total == 0.0) throw Error("modularity undefined: graph has no positive-weight edges");
  return cw;
}

}  // namespace detail

/// Newman modularity on the positive-weight subgraph.
inline double modularity_q(const Graph& g, const Partition& p) {
  auto cw = detail::community_weights(g, p, false);
  const double m = cw.total;
  double q = 0.0;
  for (std::size_t c = 0; c < cw.internal.size(); ++c) {
    const double share = cw.degree[c] / (2.0 * m);
    q += cw.internal[c] / m - share * share;
  }
  return q;
}

/// Modularity density with split penalty on the positive-weight subgraph.
/// Singleton communities have internal density 0.
inline double modularity_density_qds(const Graph& g, const Partition& p) {
  auto cw = detail::community_weights(g, p, true);
  const double m = cw.total;
  const auto k = cw.internal.size();
  std::vector<double> density(k, 0.0), split(k, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    if (cw.size[c] > 1.0) density[c] = 2.0 * cw.internal[c] / (cw.size[c] * (cw.size[c] - 1.0));
  for (const auto& [key, w] : cw.between) {
    const auto a = static_cast<std::size_t>(key >> 32), b = static_cast<std::size_t>(key & 0xffffffffu);
    const double pair_density = w / (cw.size[a] * cw.size[b]);
    const double term = w / (2.0 * m) * pair_density;
    split[a] += term;
    split[b] += term;
  }
  double q = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    // 2 e_c + out_c equals the community's total degree.
    const double spread = cw.degree[c] / (2.0 * m) * density[c];
    q += cw.internal[c] / m * density[c] - spread * spread - split[c];
  }
  return q;
}

inline QualityScore quality(const Graph& g, const Partition& p, QualityKind kind) {
  return {kind == QualityKind::Q ? modularity_q(g, p) : modularity_density_qds(g, p), kind};
}

namespace detail {

struct CoverStats {
  std::vector<std::vector<NodeId>> communities;  // non-empty only
  std::vector<CommunityId> ids;                  // original id of each kept community
  std::vector<std::vector<std::uint32_t>> node_index;  // node -> kept community indices
};

inline CoverStats cover_stats(const Cover& c) {
  CoverStats s;
  auto all = c.communities();
  std::vector<std::int64_t> index(all.size(), -1);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].empty()) continue;
    index[i] = static_cast<std::int64_t>(s.communities.size());
    s.ids.push_back(static_cast<CommunityId>(i));
    s.communities.push_back(std::move(all[i]));
  }
  s.node_index.resize(c.num_nodes());
  for (NodeId v = 0; v < c.num_nodes(); ++v)
    for (auto cid : c[v]) s.node_index[v].push_back(static_cast<std::uint32_t>(index[cid]));
  return s;
}

/// Intersection sizes between every pair of communities, dense K x L.
inline std::vector<std::uint64_t> intersections(const CoverStats& a, const CoverStats& b) {
  const std::size_t cols = b.communities.size();
  std::vector<std::uint64_t> inter(a.communities.size() * cols, 0);
  for (NodeId v = 0; v < a.node_index.size(); ++v)
    for (auto i : a.node_index[v])
      for (auto j : b.node_index[v]) ++inter[i * cols + j];
  return inter;
}

inline double h_term(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

/// Normalized conditional entropy H(X|Y)_norm averaged over communities of X.
inline double lfk_conditional(const CoverStats& x, const CoverStats& y,
                              const std::vector<std::uint64_t>& inter, bool x_is_rows, double n) {
  const std::size_t kx = x.communities.size(), ky = y.communities.size();
  if (kx == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < kx; ++i) {
    const double px = static_cast<double>(x.communities[i].size()) / n;
    const double hx = h_term(px) + h_term(1.0 - px);
    if (hx == 0.0) continue;
    double best = hx;
    for (std::size_t j = 0; j < ky; ++j) {
      const double py = static_cast<double>(y.communities[j].size()) / n;
      const auto nij = x_is_rows ? inter[i * ky + j] : inter[j * kx + i];
      const double p11 = static_cast<double>(nij) / n;
      const double p10 = px - p11;
      const double p01 = py - p11;
      const double p00 = 1.0 - p11 - p10 - p01;
      const double h11 = h_term(p11), h10 = h_term(p10), h01 = h_term(p01), h00 = h_term(p00);
      if (h11 + h00 <= h01 + h10) continue;
      const double hy = h_term(py) + h_term(1.0 - py);
      best = std::min(best, h11 + h10 + h01 + h00 - hy);
    }
    sum += best / hx;
  }
  return sum / static_cast<double>(kx);
}

}  // namespace detail

/// Overlapping NMI of Lancichinetti, Fortunato and Kertesz.
inline double overlapping_nmi(const Cover& a, const Cover& b) {
  detail::require_same_nodes(a.num_nodes(), b.num_nodes());
  if (a.num_nodes() == 0) return 1.0;
  auto sa = detail::cover_stats(a);
  auto sb = detail::cover_stats(b);
  auto inter = detail::intersections(sa, sb);
  const double n = static_cast<double>(a.num_nodes());
  const double hab = detail::lfk_conditional(sa, sb, inter, true, n);
  const double hba = detail::lfk_conditional(sb, sa, inter, false, n);
  return std::clamp(1.0 - 0.5 * (hab + hba), 0.0, 1.0);
}

/// Omega index: chance-corrected agreement on the number of communities each
/// node pair shares. Equals ARI on disjoint covers.
inline double omega_index(const Cover& a, const Cover& b) {
  detail::require_same_nodes(a.num_nodes(), b.num_nodes());
  const std::size_t n = a.num_nodes();
  const double pairs = detail::choose2(n);
  if (pairs == 0.0) return 1.0;
  auto ca = a.communities(), cb = b.communities();
  std::vector<std::uint32_t> ta(n, 0), tb(n, 0);
  std::vector<double> na, nb;  // pairs sharing exactly j communities
  double agree = 0.0;
  auto bump = [](std::vector<double>& hist, std::uint32_t j) {
    if (hist.size() <= j) hist.resize(j + 1, 0.0);
    hist[j] += 1.0;
  };
  for (NodeId u = 0; u < n; ++u) {
    for (auto c : a[u])
      for (auto v : ca[c])
        if (v > u) ++ta[v];
    for (auto c : b[u])
      for (auto v : cb[c])
        if (v > u) ++tb[v];
    for (NodeId v = u + 1; v < n; ++v) {
      bump(na, ta[v]);
      bump(nb, tb[v]);
      if (ta[v] == tb[v]) agree += 1.0;
      ta[v] = tb[v] = 0;
    }
  }
  double expected = 0.0;
  for (std::size_t j = 0; j < std::min(na.size(), nb.size()); ++j) expected += na[j] * nb[j];
  expected /= pairs * pairs;
  const double observed = agree / pairs;
  if (expected == 1.0) return 1.0;
  return (observed - expected) / (1.0 - expected);
}

namespace detail {

/// For each community of x, the community of y with the highest Jaccard
/// overlap (ties to the lower id). Returns original y ids.
inline std::vector<CommunityId> best_jaccard_match(const CoverStats& x, const CoverStats& y,
                                                   const std::vector<std::uint64_t>& inter,
                                                   bool x_is_rows) {
  const std::size_t kx = x.communities.size(), ky = y.communities.size();
  std::vector<CommunityId> match(kx, 0);
  for (std::size_t i = 0; i < kx; ++i) {
    double best = -1.0;
    for (std::size_t j = 0; j < ky; ++j) {
      const auto nij = static_cast<double>(x_is_rows ? inter[i * ky + j] : inter[j * kx + i]);
      const double jac =
          nij / (static_cast<double>(x.communities[i].size() + y.communities[j].size()) - nij);
      if (jac > best) {
        best = jac;
        match[i] = y.ids[j];
      }
    }
  }
  return match;
}

/// Fraction of multi-community nodes of x whose mapped community set equals
/// their set in y; nullopt when x has no multi-community nodes.
inline std::optional<double> multi_agreement(const Cover& x, const Cover& y, const CoverStats& sx,
                                             const std::vector<CommunityId>& match) {
  std::size_t multi = 0, correct = 0;
  for (NodeId v = 0; v < x.num_nodes(); ++v) {
    if (!x.is_multi(v)) continue;
    ++multi;
    if (!y.is_multi(v)) continue;
    std::vector<CommunityId> mapped;
    for (auto i : sx.node_index[v]) mapped.push_back(match[i]);
    std::sort(mapped.begin(), mapped.end());
    mapped.erase(std::unique(mapped.begin(), mapped.end()), mapped.end());
    auto target = y[v];
    if (std::equal(mapped.begin(), mapped.end(), target.begin(), target.end())) ++correct;
  }
  if (multi == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(multi);
}

}  // namespace detail

/// F-score over multi-community nodes: a node counts as correct when it is
/// multi-community in both covers and its community set maps exactly onto
/// the other cover's set under best-Jaccard community matching.
inline double f_multi(const Cover& pred, const Cover& truth) {
  detail::require_same_nodes(pred.num_nodes(), truth.num_nodes());
  auto sp = detail::cover_stats(pred);
  auto st = detail::cover_stats(truth);
  auto inter = detail::intersections(sp, st);
  auto pred_to_truth = detail::best_jaccard_match(sp, st, inter, true);
  auto truth_to_pred = detail::best_jaccard_match(st, sp, inter, false);
  auto precision = detail::multi_agreement(pred, truth, sp, pred_to_truth);
  auto recall = detail::multi_agreement(truth, pred, st, truth_to_pred);
  if (!precision && !recall) return 1.0;
  const double p = precision.value_or(0.0), r = recall.value_or(0.0);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

}  // namespace speakeasy
