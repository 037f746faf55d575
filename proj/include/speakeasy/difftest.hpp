#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "speakeasy/consensus.hpp"
#include "speakeasy/io.hpp"
#include "speakeasy/metrics.hpp"
#include "speakeasy/parallel.hpp"
#include "speakeasy/random.hpp"

namespace speakeasy {

/// Per-subject connectivity matrices of one cohort, all over the same nodes.
struct CohortData {
  std::string label;
  std::vector<DenseMatrix> subjects;

  std::size_t dimension() const { return subjects.empty() ? 0 : subjects.front().n; }

  void validate() const {
    if (subjects.empty()) throw Error("cohort '" + label + "' has no subjects");
    for (const auto& s : subjects)
      if (s.n != subjects.front().n)
        throw Error("cohort '" + label + "': subject matrices differ in dimension (" +
                    std::to_string(s.n) + " vs " + std::to_string(subjects.front().n) + ")");
  }
};

inline DenseMatrix mean_matrix(const std::vector<const DenseMatrix*>& subjects) {
  DenseMatrix m;
  m.n = subjects.front()->n;
  m.names = subjects.front()->names;
  m.values.assign(m.n * m.n, 0.0);
  for (const auto* s : subjects) {
    if (s->n != m.n) throw Error("subject matrices differ in dimension");
    for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] += s->values[i];
  }
  for (auto& x : m.values) x /= static_cast<double>(subjects.size());
  return m;
}

struct CohortClustering {
  Partition representative;
  CoOccurrenceMatrix co;
};

namespace detail {

inline CohortClustering cluster_mean(const std::vector<const DenseMatrix*>& subjects,
                                     const EngineParams& p, std::size_t replicates, int jobs) {
  auto g = graph_from_dense(mean_matrix(subjects), true);
  auto e = replicate(g, p, replicates, jobs);
  return {representative_partition(e, jobs), co_occurrence(e)};
}

/// Null rounds only need the co-occurrence, not a representative.
inline CoOccurrenceMatrix mean_cooccurrence(const std::vector<const DenseMatrix*>& subjects,
                                            const EngineParams& p, std::size_t replicates) {
  return co_occurrence(replicate(graph_from_dense(mean_matrix(subjects), true), p, replicates, 1));
}

inline std::uint64_t content_hash(const DenseMatrix& m) {
  std::uint64_t h = splitmix64(m.n);
  for (double x : m.values) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x));
  return h;
}

inline std::vector<const DenseMatrix*> pointers(const CohortData& c) {
  std::vector<const DenseMatrix*> out;
  for (const auto& s : c.subjects) out.push_back(&s);
  return out;
}

}  // namespace detail

/// Clusters the element-wise mean of a cohort's matrices R times.
inline CohortClustering cohort_cooccurrence(const CohortData& c, const EngineParams& p,
                                            std::size_t replicates, int jobs = 1) {
  c.validate();
  return detail::cluster_mean(detail::pointers(c), p, replicates, jobs);
}

/// Mean co-occurrence fraction over unordered member pairs of each reference
/// cluster; singleton clusters score 1.
inline std::vector<double> cluster_stat(const Partition& ref, const CoOccurrenceMatrix& co) {
  if (ref.num_nodes() != co.num_nodes()) throw Error("reference partition and co-occurrence differ in size");
  std::vector<double> out;
  for (const auto& members : ref.communities()) {
    if (members.size() < 2) {
      out.push_back(1.0);
      continue;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j) sum += co.fraction(members[i], members[j]);
    out.push_back(sum / (0.5 * static_cast<double>(members.size() * (members.size() - 1))));
  }
  return out;
}

/// Mean co-occurrence fraction between members of every pair of reference
/// clusters (diagonal: within-cluster pairs, as in cluster_stat).
inline std::vector<double> inter_cluster_stat(const Partition& ref, const CoOccurrenceMatrix& co) {
  const auto groups = ref.communities();
  const std::size_t k = groups.size();
  std::vector<double> out(k * k, 0.0);
  auto within = cluster_stat(ref, co);
  for (std::size_t a = 0; a < k; ++a) {
    out[a * k + a] = within[a];
    for (std::size_t b = a + 1; b < k; ++b) {
      double sum = 0.0;
      for (auto u : groups[a])
        for (auto v : groups[b]) sum += co.fraction(u, v);
      out[a * k + b] = out[b * k + a] =
          sum / static_cast<double>(groups[a].size() * groups[b].size());
    }
  }
  return out;
}

struct ClusterDiff {
  CommunityId cluster = 0;
  std::size_t size = 0;
  double stat_a = 0.0;
  double stat_b = 0.0;
  double observed_delta = 0.0;  // stat_b - stat_a
  double null_mean = 0.0;
  double null_sd = 0.0;
  double p_value = 1.0;
};

struct DiffReport {
  std::vector<ClusterDiff> clusters;
  /// k x k row-major change (b - a) of between-cluster co-occurrence.
  std::vector<double> inter_cluster_change;
  double partition_nmi = 0.0;
  std::size_t permutations = 0;
  std::size_t replicates = 0;
  std::size_t null_replicates = 0;
  CohortClustering a;
  CohortClustering b;
};

struct DiffOptions {
  std::size_t replicates = 100;
  std::size_t permutations = 1000;
  /// 0 selects max(20, replicates / 2).
  std::size_t null_replicates = 0;
  int jobs = 1;

  std::size_t resolved_null_replicates() const {
    return null_replicates ? null_replicates : std::max<std::size_t>(20, replicates / 2);
  }
};

/// Two-sided label-permutation test of per-cluster co-occurrence change
/// between cohorts, with cohort a's representative clusters as reference.
/// Both cohorts of a round share an engine seed; null rounds derive their
/// shuffle and engine seeds from the master seed and the round index.
inline DiffReport permutation_test(const CohortData& a, const CohortData& b, const EngineParams& p,
                                   const DiffOptions& opt) {
  if (opt.permutations < 1) throw Error("permutation count must be >= 1");
  a.validate();
  b.validate();
  if (a.dimension() != b.dimension())
    throw Error("cohorts differ in matrix dimension (" + std::to_string(a.dimension()) + " vs " +
                std::to_string(b.dimension()) + ")");

  DiffReport report;
  report.permutations = opt.permutations;
  report.replicates = opt.replicates;
  report.null_replicates = opt.resolved_null_replicates();
  report.a = cohort_cooccurrence(a, p, opt.replicates, opt.jobs);
  report.b = cohort_cooccurrence(b, p, opt.replicates, opt.jobs);
  const Partition& ref = report.a.representative;
  report.partition_nmi = nmi(report.a.representative, report.b.representative);

  const auto stat_a = cluster_stat(ref, report.a.co);
  const auto stat_b = cluster_stat(ref, report.b.co);
  const std::size_t k = stat_a.size();
  {
    auto ia = inter_cluster_stat(ref, report.a.co);
    auto ib = inter_cluster_stat(ref, report.b.co);
    report.inter_cluster_change.resize(k * k);
    for (std::size_t i = 0; i < k * k; ++i) report.inter_cluster_change[i] = ib[i] - ia[i];
  }

  // Pool in content order so the null does not depend on which cohort is
  // called a or b.
  std::vector<const DenseMatrix*> pooled = detail::pointers(a);
  for (const auto& s : b.subjects) pooled.push_back(&s);
  std::stable_sort(pooled.begin(), pooled.end(), [](const DenseMatrix* x, const DenseMatrix* y) {
    return detail::content_hash(*x) < detail::content_hash(*y);
  });
  const std::size_t size_a = a.subjects.size();

  std::vector<double> null_delta(opt.permutations * k);
  parallel_for(opt.permutations, opt.jobs, [&](std::size_t round) {
    const auto round_seed = mix_seed(p.seed, {0x6e756c6cULL, round});
    Rng rng(round_seed);
    auto order = pooled;
    shuffle(order.begin(), order.end(), rng);
    std::vector<const DenseMatrix*> pa(order.begin(), order.begin() + size_a);
    std::vector<const DenseMatrix*> pb(order.begin() + size_a, order.end());
    EngineParams q = p;
    q.seed = mix_seed(round_seed, 1);
    auto sa = cluster_stat(ref, detail::mean_cooccurrence(pa, q, report.null_replicates));
    auto sb = cluster_stat(ref, detail::mean_cooccurrence(pb, q, report.null_replicates));
    for (std::size_t c = 0; c < k; ++c) null_delta[round * k + c] = sb[c] - sa[c];
  });

  const auto sizes = ref.communities();
  constexpr double kTieTolerance = 1e-12;
  for (std::size_t c = 0; c < k; ++c) {
    ClusterDiff d;
    d.cluster = static_cast<CommunityId>(c);
    d.size = sizes[c].size();
    d.stat_a = stat_a[c];
    d.stat_b = stat_b[c];
    d.observed_delta = stat_b[c] - stat_a[c];
    double sum = 0.0, sq = 0.0;
    std::size_t extreme = 0;
    for (std::size_t r = 0; r < opt.permutations; ++r) {
      const double x = null_delta[r * k + c];
      sum += x;
      sq += x * x;
      if (std::abs(x) >= std::abs(d.observed_delta) - kTieTolerance) ++extreme;
    }
    const double np = static_cast<double>(opt.permutations);
    d.null_mean = sum / np;
    d.null_sd = opt.permutations > 1 ? std::sqrt(std::max(0.0, (sq - np * d.null_mean * d.null_mean) / (np - 1.0))) : 0.0;
    d.p_value = static_cast<double>(1 + extreme) / (1.0 + np);
    report.clusters.push_back(d);
  }
  return report;
}

}  // namespace speakeasy
