#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "speakeasy/graph.hpp"
#include "speakeasy/random.hpp"

namespace speakeasy {

/// Labels live in the node-id space: every label is the id of the node that
/// carried it at initialization.
using Label = NodeId;

struct EngineParams {
  int num_history_labels = 5;
  int max_iterations = 50;
  /// Consecutive iterations without any label change required to stop.
  int patience = 5;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_history_labels < 1) throw Error("num_history_labels must be >= 1");
    if (max_iterations < 1) throw Error("max_iterations must be >= 1");
    if (patience < 1) throw Error("patience must be >= 1");
  }
};

/// Relative frequency of every label across all history buffers, indexed by
/// label. Counts are unweighted.
class LabelFrequencyTable {
 public:
  LabelFrequencyTable() = default;
  explicit LabelFrequencyTable(std::size_t label_space) : freq_(label_space, 0.0) {}

  double operator[](Label l) const { return freq_[l]; }
  double& operator[](Label l) { return freq_[l]; }
  std::size_t size() const noexcept { return freq_.size(); }
  std::span<const double> values() const noexcept { return freq_; }

 private:
  std::vector<double> freq_;
};

/// Per-node history buffers of exactly H labels.
///
/// All buffers rotate in lockstep (every node appends once per step), so a
/// single ring head is shared: the oldest entry of every buffer sits at slot
/// `head`, the newest at `head - 1`.
class EngineState {
 public:
  EngineState() = default;

  EngineState(std::size_t num_nodes, int history, std::uint64_t seed)
      : n_(num_nodes), h_(history), slots_(num_nodes * history), seed_(seed), rng_(seed) {}

  /// Builds a state from explicit buffers listed oldest to newest.
  static EngineState from_buffers(const std::vector<std::vector<Label>>& buffers,
                                  std::uint64_t seed = 0) {
    const int h = buffers.empty() ? 1 : static_cast<int>(buffers.front().size());
    EngineState s(buffers.size(), h, seed);
    for (std::size_t v = 0; v < buffers.size(); ++v) {
      if (static_cast<int>(buffers[v].size()) != h)
        throw Error("all history buffers must have the same length");
      for (int j = 0; j < h; ++j) s.slots_[v * h + j] = buffers[v][j];
    }
    return s;
  }

  std::size_t num_nodes() const noexcept { return n_; }
  int history() const noexcept { return h_; }
  int iteration() const noexcept { return iteration_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Buffer contents in storage order (not chronological); fine for tallies.
  std::span<const Label> raw(NodeId v) const {
    return {slots_.data() + std::size_t{v} * h_, static_cast<std::size_t>(h_)};
  }

  /// Buffer contents oldest to newest.
  std::vector<Label> buffer(NodeId v) const {
    std::vector<Label> out(h_);
    for (int j = 0; j < h_; ++j) out[j] = slots_[std::size_t{v} * h_ + (head_ + j) % h_];
    return out;
  }

  Label latest(NodeId v) const { return slots_[std::size_t{v} * h_ + (head_ + h_ - 1) % h_]; }

  std::vector<Label> latest_labels() const {
    std::vector<Label> out(n_);
    for (NodeId v = 0; v < n_; ++v) out[v] = latest(v);
    return out;
  }

  /// Evicts the oldest entry of every buffer and appends `labels[v]`.
  void append_all(std::span<const Label> labels) {
    for (NodeId v = 0; v < n_; ++v) slots_[std::size_t{v} * h_ + head_] = labels[v];
    head_ = (head_ + 1) % h_;
    ++iteration_;
  }

  Rng& rng() noexcept { return rng_; }

  friend bool operator==(const EngineState& a, const EngineState& b) {
    if (a.n_ != b.n_ || a.h_ != b.h_ || a.iteration_ != b.iteration_) return false;
    for (NodeId v = 0; v < a.n_; ++v)
      if (a.buffer(v) != b.buffer(v)) return false;
    return true;
  }

 private:
  friend EngineState init_state(const Graph&, const EngineParams&);

  std::size_t n_ = 0;
  int h_ = 1;
  std::vector<Label> slots_;
  int head_ = 0;
  int iteration_ = 0;
  std::uint64_t seed_ = 0;
  Rng rng_;
};

/// Own id first, then H-1 initial labels of uniformly drawn in-neighbors.
/// Nodes without in-neighbors pad with their own id.
inline EngineState init_state(const Graph& g, const EngineParams& p) {
  p.validate();
  const int h = p.num_history_labels;
  EngineState s(g.num_nodes(), h, p.seed);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    auto nbrs = g.in_neighbors(v);
    Label* buf = s.slots_.data() + std::size_t{v} * h;
    buf[0] = v;
    for (int j = 1; j < h; ++j)
      buf[j] = nbrs.empty() ? v : nbrs[uniform_index(s.rng_, nbrs.size())].node;
  }
  return s;
}

inline LabelFrequencyTable global_label_frequencies(const EngineState& s) {
  LabelFrequencyTable f(s.num_nodes());
  std::vector<std::uint64_t> counts(s.num_nodes(), 0);
  for (NodeId v = 0; v < s.num_nodes(); ++v)
    for (Label l : s.raw(v)) ++counts[l];
  const double total = static_cast<double>(s.num_nodes()) * s.history();
  for (Label l = 0; l < counts.size(); ++l)
    if (counts[l]) f[l] = static_cast<double>(counts[l]) / total;
  return f;
}

namespace detail {

/// Reusable per-thread accumulator for neighbor label tallies.
struct LabelTally {
  std::vector<double> actual;
  std::vector<char> seen;
  std::vector<Label> touched;

  explicit LabelTally(std::size_t label_space) : actual(label_space, 0.0), seen(label_space, 0) {}
};

constexpr double kTieTolerance = 1e-10;

/// Weighted count of every label over v's in-neighbor buffers.
inline void accumulate(NodeId v, const EngineState& s, const Graph& g, LabelTally& tally) {
  for (const auto& [u, w] : g.in_neighbors(v)) {
    for (Label l : s.raw(u)) {
      if (!tally.seen[l]) {
        tally.seen[l] = 1;
        tally.touched.push_back(l);
      }
      tally.actual[l] += w;
    }
  }
}

inline void reset(LabelTally& tally) {
  for (Label l : tally.touched) {
    tally.actual[l] = 0.0;
    tally.seen[l] = 0;
  }
  tally.touched.clear();
}

inline Label select_label(NodeId v, const EngineState& s, const LabelFrequencyTable& f,
                          const Graph& g, LabelTally& tally) {
  auto nbrs = g.in_neighbors(v);
  if (nbrs.empty()) return s.latest(v);
  accumulate(v, s, g, tally);

  const double scale = static_cast<double>(nbrs.size()) * s.history();
  Label best = tally.touched.front();
  double best_score = 0.0;
  std::uint64_t ties = 0;
  for (Label l : tally.touched) {
    const double score = tally.actual[l] - f[l] * scale;
    const double tol = kTieTolerance * (1.0 + std::abs(best_score));
    if (ties == 0 || score > best_score + tol) {
      best = l;
      best_score = score;
      ties = 1;
    } else if (score >= best_score - tol) {
      // Reservoir draw keeps the choice uniform over all maximal labels.
      ++ties;
      auto bits = mix_seed(s.seed(), {static_cast<std::uint64_t>(s.iteration()), v, ties});
      if (unit_interval(bits) * static_cast<double>(ties) < 1.0) best = l;
    }
  }

  reset(tally);
  return best;
}

}  // namespace detail

/// Candidate labels of v with their weighted neighbor counts, in first-seen
/// order.
inline std::vector<std::pair<Label, double>> actual_label_weights(NodeId v, const EngineState& s,
                                                                  const Graph& g) {
  detail::LabelTally tally(s.num_nodes());
  detail::accumulate(v, s, g, tally);
  std::vector<std::pair<Label, double>> out;
  for (Label l : tally.touched) out.emplace_back(l, tally.actual[l]);
  return out;
}

/// Picks the neighbor label whose weighted count most exceeds the count
/// expected from its global frequency. Isolated nodes keep their latest label.
inline Label select_label(NodeId v, const EngineState& s, const LabelFrequencyTable& f,
                          const Graph& g) {
  detail::LabelTally tally(s.num_nodes());
  return detail::select_label(v, s, f, g, tally);
}

/// One simultaneous update of every node against a single frequency table
/// computed from the pre-step buffers. Returns the number of nodes whose
/// appended label differs from their previous latest label.
inline std::size_t step(EngineState& s, const Graph& g, detail::LabelTally& tally) {
  const auto f = global_label_frequencies(s);
  std::vector<Label> next(s.num_nodes());
  std::size_t changed = 0;
  for (NodeId v = 0; v < s.num_nodes(); ++v) {
    next[v] = detail::select_label(v, s, f, g, tally);
    if (next[v] != s.latest(v)) ++changed;
  }
  s.append_all(next);
  return changed;
}

inline std::size_t step(EngineState& s, const Graph& g) {
  detail::LabelTally tally(s.num_nodes());
  return step(s, g, tally);
}

struct RunResult {
  Partition partition;
  int iterations = 0;
  bool converged = false;
};

inline RunResult run_detailed(const Graph& g, const EngineParams& p) {
  auto s = init_state(g, p);
  detail::LabelTally tally(g.num_nodes());
  RunResult r;
  int quiet = 0;
  while (r.iterations < p.max_iterations) {
    const auto changed = step(s, g, tally);
    ++r.iterations;
    quiet = changed == 0 ? quiet + 1 : 0;
    if (quiet >= p.patience) {
      r.converged = true;
      break;
    }
  }
  r.partition = Partition::from_labels(s.latest_labels());
  return r;
}

/// Clusters g; each node ends in the community of its most recent label.
inline Partition run(const Graph& g, const EngineParams& p) { return run_detailed(g, p).partition; }

}  // namespace speakeasy
