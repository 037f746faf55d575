#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "speakeasy/graph.hpp"
#include "speakeasy/random.hpp"

namespace speakeasy {

class InfeasibleSpec : public Error {
 public:
  using Error::Error;
};

/// Parameters of a planted-community network in the LFR style.
struct BenchmarkSpec {
  std::size_t n = 1000;
  double avg_degree = 15.0;
  int max_degree = 50;
  double gamma_degree = 2.0;    // degree-sequence exponent
  double beta_community = 1.0;  // community-size exponent
  double mu = 0.1;
  double overlap_fraction = 0.0;
  int om = 1;
  int min_community_size = 10;
  int max_community_size = 100;
  std::uint64_t seed = 0;

  /// Memberships per overlapping node only matter when om >= 2.
  std::size_t num_overlapping() const {
    return om >= 2 ? static_cast<std::size_t>(std::llround(overlap_fraction * static_cast<double>(n))) : 0;
  }

  void validate() const {
    if (n < 2) throw InfeasibleSpec("n must be at least 2");
    if (!(mu >= 0.0 && mu <= 1.0)) throw InfeasibleSpec("mu must lie in [0, 1]");
    if (!(overlap_fraction >= 0.0 && overlap_fraction <= 1.0))
      throw InfeasibleSpec("overlap fraction must lie in [0, 1]");
    if (om < 1) throw InfeasibleSpec("om must be >= 1");
    if (max_degree < 1 || static_cast<std::size_t>(max_degree) >= n)
      throw InfeasibleSpec("max degree must lie in [1, n)");
    if (!(avg_degree >= 1.0 && avg_degree <= max_degree))
      throw InfeasibleSpec("average degree must lie in [1, max degree]");
    if (min_community_size < 2 || min_community_size > max_community_size)
      throw InfeasibleSpec("community size bounds must satisfy 2 <= min <= max");
    if (static_cast<std::size_t>(max_community_size) > n)
      throw InfeasibleSpec("max community size exceeds n");
    if (gamma_degree < 0.0 || beta_community < 0.0) throw InfeasibleSpec("exponents must be >= 0");
  }
};

struct BenchmarkStats {
  double realized_mu = 0.0;
  double mean_degree = 0.0;
  std::size_t num_communities = 0;
};

struct Benchmark {
  Graph graph;
  Cover truth;
  BenchmarkStats stats;
};

/// Fraction of edges whose endpoints share no true community.
inline double realized_mixing(const Graph& g, const Cover& truth) {
  if (truth.num_nodes() != g.num_nodes()) throw Error("truth cover does not match graph");
  if (g.num_edges() == 0) return 0.0;
  std::size_t between = 0;
  for (const auto& e : g.edges()) {
    auto a = truth[e.src], b = truth[e.dst];
    std::vector<CommunityId> shared;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(shared));
    if (shared.empty()) ++between;
  }
  return static_cast<double>(between) / static_cast<double>(g.num_edges());
}

namespace detail {

/// Integral of x^-g over [a, b].
inline double power_integral(double g, double a, double b) {
  if (std::abs(g - 1.0) < 1e-12) return std::log(b / a);
  return (std::pow(b, 1.0 - g) - std::pow(a, 1.0 - g)) / (1.0 - g);
}

inline double power_law_mean(double g, double a, double b) {
  return power_integral(g - 1.0, a, b) / power_integral(g, a, b);
}

/// Inverse-CDF draw from a continuous power law x^-g on [a, b).
inline double sample_power_law(double g, double a, double b, Rng& rng) {
  const double u = uniform_real(rng);
  if (std::abs(g - 1.0) < 1e-12) return a * std::pow(b / a, u);
  const double lo = std::pow(a, 1.0 - g), hi = std::pow(b, 1.0 - g);
  return std::pow(lo + u * (hi - lo), 1.0 / (1.0 - g));
}

/// Lower cutoff giving the requested mean for a power law truncated at kmax.
inline double solve_min_degree(double g, double mean, double kmax) {
  double lo = 1.0, hi = kmax;
  if (power_law_mean(g, lo, kmax) > mean)
    throw InfeasibleSpec("average degree is below the smallest attainable mean for this exponent");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (power_law_mean(g, mid, kmax) < mean ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::uint64_t edge_key(NodeId a, NodeId b) {
  auto [lo, hi] = std::minmax(a, b);
  return (std::uint64_t{lo} << 32) | hi;
}

/// Random stub matching with rejection plus a bounded edge-swap repair.
/// Returns the number of stubs that could not be placed.
template <typename Allowed>
std::size_t wire_stubs(std::vector<NodeId> stubs, Allowed allowed,
                       std::unordered_set<std::uint64_t>& existing, std::vector<Edge>& out,
                       Rng& rng, int sweeps) {
  const std::size_t layer_begin = out.size();
  auto ok = [&](NodeId u, NodeId v) {
    return u != v && allowed(u, v) && !existing.contains(edge_key(u, v));
  };
  auto add = [&](NodeId u, NodeId v) {
    existing.insert(edge_key(u, v));
    out.push_back({std::min(u, v), std::max(u, v), 1.0});
  };
  for (int sweep = 0; sweep <= sweeps && stubs.size() >= 2; ++sweep) {
    shuffle(stubs.begin(), stubs.end(), rng);
    std::vector<NodeId> pending;
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
      const NodeId u = stubs[i], v = stubs[i + 1];
      if (ok(u, v)) {
        add(u, v);
        continue;
      }
      // Swap with an existing edge (x, y) of this layer: (u, x) + (v, y).
      bool placed = false;
      const std::size_t layer_size = out.size() - layer_begin;
      for (int attempt = 0; attempt < 64 && layer_size > 0 && !placed; ++attempt) {
        const std::size_t idx = layer_begin + uniform_index(rng, layer_size);
        auto [x, y, w] = out[idx];
        if (uniform_index(rng, 2)) std::swap(x, y);
        if (u == x || v == y || edge_key(u, x) == edge_key(v, y)) continue;
        if (!ok(u, x) || !ok(v, y)) continue;
        existing.erase(edge_key(x, y));
        out[idx] = out.back();
        out.pop_back();
        add(u, x);
        add(v, y);
        placed = true;
      }
      if (!placed) {
        pending.push_back(u);
        pending.push_back(v);
      }
    }
    if (stubs.size() % 2) pending.push_back(stubs.back());
    stubs = std::move(pending);
  }
  return stubs.size();
}

struct Slot {
  NodeId node;
  int degree;  // internal stubs this membership must host
};

/// Havel-Hakimi realization of a community's internal degrees followed by
/// degree-preserving double-edge swaps to randomize it. Pairs already in
/// `existing` (from another shared community) are never duplicated.
/// Returns the number of stubs that could not be placed.
inline std::size_t wire_community(const std::vector<NodeId>& members, const std::vector<int>& degrees,
                                  std::unordered_set<std::uint64_t>& existing, std::vector<Edge>& out,
                                  Rng& rng, int swaps_per_edge) {
  const std::size_t layer_begin = out.size();
  std::vector<std::pair<int, NodeId>> residual;
  for (std::size_t i = 0; i < members.size(); ++i)
    if (degrees[i] > 0) residual.emplace_back(degrees[i], members[i]);
  shuffle(residual.begin(), residual.end(), rng);
  std::size_t unplaced = 0;
  while (!residual.empty()) {
    std::stable_sort(residual.begin(), residual.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    auto [need, u] = residual.front();
    residual.erase(residual.begin());
    for (auto& [d, v] : residual) {
      if (need == 0) break;
      if (d == 0 || existing.contains(edge_key(u, v))) continue;
      existing.insert(edge_key(u, v));
      out.push_back({std::min(u, v), std::max(u, v), 1.0});
      --d;
      --need;
    }
    unplaced += static_cast<std::size_t>(need);
    std::erase_if(residual, [](const auto& r) { return r.first == 0; });
  }

  const std::size_t layer_size = out.size() - layer_begin;
  if (layer_size < 2) return unplaced;
  const std::size_t swaps = static_cast<std::size_t>(swaps_per_edge) * layer_size;
  for (std::size_t s = 0; s < swaps; ++s) {
    const std::size_t i = layer_begin + uniform_index(rng, layer_size);
    const std::size_t j = layer_begin + uniform_index(rng, layer_size);
    if (i == j) continue;
    auto [a, b, wa] = out[i];
    auto [c, d, wc] = out[j];
    if (uniform_index(rng, 2)) std::swap(c, d);
    // (a, b), (c, d) -> (a, d), (c, b)
    if (a == d || c == b) continue;
    if (existing.contains(edge_key(a, d)) || existing.contains(edge_key(c, b))) continue;
    existing.erase(edge_key(a, b));
    existing.erase(edge_key(c, d));
    existing.insert(edge_key(a, d));
    existing.insert(edge_key(c, b));
    out[i] = {std::min(a, d), std::max(a, d), 1.0};
    out[j] = {std::min(c, b), std::max(c, b), 1.0};
  }
  return unplaced;
}

}  // namespace detail

namespace detail {

inline Benchmark generate_attempt(const BenchmarkSpec& spec, Rng& rng) {
  constexpr int kRewiringSweeps = 100;
  constexpr int kSwapsPerEdge = 10;
  const std::size_t n = spec.n;

  // Degree sequence.
  const double kmin = solve_min_degree(spec.gamma_degree, spec.avg_degree, spec.max_degree);
  std::vector<int> degree(n);
  for (auto& k : degree) {
    const double x = sample_power_law(spec.gamma_degree, kmin, spec.max_degree, rng);
    k = std::clamp(static_cast<int>(std::lround(x)), 1, spec.max_degree);
  }

  // Overlapping nodes and community capacity.
  const std::size_t n_overlap = spec.num_overlapping();
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  shuffle(order.begin(), order.end(), rng);
  std::vector<int> memberships(n, 1);
  for (std::size_t i = 0; i < n_overlap; ++i) memberships[order[i]] = spec.om;
  const std::size_t target = n + n_overlap * static_cast<std::size_t>(spec.om - 1);

  std::vector<int> sizes;
  std::size_t total = 0;
  while (total < target) {
    const double x = sample_power_law(spec.beta_community, spec.min_community_size,
                                      spec.max_community_size + 1.0, rng);
    const int s = std::clamp(static_cast<int>(x), spec.min_community_size, spec.max_community_size);
    sizes.push_back(s);
    total += static_cast<std::size_t>(s);
  }
  int deficit = static_cast<int>(total - target);
  sizes.back() -= deficit;
  deficit = 0;
  if (sizes.back() < spec.min_community_size) {
    deficit = spec.min_community_size - sizes.back();
    sizes.back() = spec.min_community_size;
  }
  while (deficit > 0) {
    auto it = std::max_element(sizes.begin(), sizes.end());
    if (*it <= spec.min_community_size)
      throw InfeasibleSpec("community sizes cannot tile n within the size bounds");
    --*it;
    --deficit;
  }
  if (sizes.size() < static_cast<std::size_t>(spec.om))
    throw InfeasibleSpec("fewer communities than memberships per overlapping node");

  // Internal degree split evenly over a node's memberships.
  std::vector<int> internal(n), external(n);
  std::vector<Slot> slots;
  slots.reserve(target);
  for (NodeId v = 0; v < n; ++v) {
    internal[v] = static_cast<int>(std::lround((1.0 - spec.mu) * degree[v]));
    external[v] = degree[v] - internal[v];
    const int m = memberships[v];
    for (int j = 0; j < m; ++j) slots.push_back({v, internal[v] / m + (j < internal[v] % m ? 1 : 0)});
  }
  shuffle(slots.begin(), slots.end(), rng);
  std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.degree > b.degree; });

  // Largest internal degrees first: eligible community sets are nested, so
  // greedy placement succeeds whenever a placement exists.
  const std::size_t k = sizes.size();
  std::vector<std::vector<NodeId>> members(k);
  std::vector<std::vector<int>> member_degree(k);
  std::vector<std::vector<CommunityId>> cover(n);
  for (const auto& slot : slots) {
    std::uint64_t free_total = 0;
    auto eligible = [&](std::size_t c) {
      return sizes[c] > slot.degree && members[c].size() < static_cast<std::size_t>(sizes[c]) &&
             std::find(cover[slot.node].begin(), cover[slot.node].end(), c) == cover[slot.node].end();
    };
    for (std::size_t c = 0; c < k; ++c)
      if (eligible(c)) free_total += sizes[c] - members[c].size();
    if (free_total == 0)
      throw InfeasibleSpec("no community with free capacity can host internal degree " +
                           std::to_string(slot.degree));
    auto pick = uniform_index(rng, free_total);
    for (std::size_t c = 0; c < k; ++c) {
      if (!eligible(c)) continue;
      const auto cap = sizes[c] - members[c].size();
      if (pick < cap) {
        members[c].push_back(slot.node);
        member_degree[c].push_back(slot.degree);
        cover[slot.node].push_back(static_cast<CommunityId>(c));
        break;
      }
      pick -= cap;
    }
  }
  for (auto& m : cover) std::sort(m.begin(), m.end());

  std::unordered_set<std::uint64_t> existing;
  existing.reserve(n * spec.max_degree);
  std::vector<Edge> edges;

  // Internal layer, one community at a time.
  for (std::size_t c = 0; c < k; ++c) {
    auto& deg = member_degree[c];
    const int stub_total = std::accumulate(deg.begin(), deg.end(), 0);
    if (stub_total % 2) {
      // Drop one stub of a random holder; moving it to the external layer
      // would leak mixing into mu = 0 specs.
      std::vector<std::size_t> holders;
      for (std::size_t i = 0; i < deg.size(); ++i)
        if (deg[i] > 0) holders.push_back(i);
      --deg[holders[uniform_index(rng, holders.size())]];
    }
    const auto left = wire_community(members[c], deg, existing, edges, rng, kSwapsPerEdge);
    if (left)
      throw InfeasibleSpec("community " + std::to_string(c) + " of size " + std::to_string(sizes[c]) +
                           " cannot host its internal degrees (" + std::to_string(left) +
                           " stubs unplaced)");
  }

  // External layer: endpoints must share no community.
  std::vector<NodeId> stubs;
  for (NodeId v = 0; v < n; ++v) stubs.insert(stubs.end(), external[v], v);
  if (stubs.size() % 2) stubs.erase(stubs.begin() + uniform_index(rng, stubs.size()));
  auto disjoint = [&](NodeId u, NodeId v) {
    const auto& a = cover[u];
    const auto& b = cover[v];
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] == b[j]) return false;
      a[i] < b[j] ? ++i : ++j;
    }
    return true;
  };
  const auto left = wire_stubs(std::move(stubs), disjoint, existing, edges, rng, kRewiringSweeps);
  if (left)
    throw InfeasibleSpec("cannot place " + std::to_string(left) +
                         " between-community stubs without multi-edges");

  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return std::pair{a.src, a.dst} < std::pair{b.src, b.dst}; });
  Benchmark out;
  out.graph = Graph(n, std::move(edges), false);
  out.truth = Cover(std::move(cover));
  out.stats.realized_mu = realized_mixing(out.graph, out.truth);
  out.stats.mean_degree = 2.0 * static_cast<double>(out.graph.num_edges()) / static_cast<double>(n);
  out.stats.num_communities = k;
  return out;
}

}  // namespace detail

/// Generates a planted-community graph and its ground-truth cover.
/// Deterministic in spec (including seed); retries a bounded number of times
/// from the same stream before reporting infeasibility.
inline Benchmark generate(const BenchmarkSpec& spec) {
  constexpr int kAttempts = 10;
  spec.validate();
  Rng rng(mix_seed(spec.seed, 0x62656e6368ULL));
  std::string last_error;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    try {
      return detail::generate_attempt(spec, rng);
    } catch (const InfeasibleSpec& e) {
      last_error = e.what();
    }
  }
  throw InfeasibleSpec("infeasible benchmark spec after " + std::to_string(kAttempts) +
                       " attempts: " + last_error);
}

}  // namespace speakeasy
