// speakeasy: command-line front end for clustering, consensus, evaluation,
// benchmark generation and cohort difference testing.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "speakeasy/benchgen.hpp"
#include "speakeasy/consensus.hpp"
#include "speakeasy/difftest.hpp"
#include "speakeasy/io.hpp"
#include "speakeasy/labelprop.hpp"
#include "speakeasy/metrics.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace speakeasy;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EngineFlags {
  int history = 5;
  int max_iterations = 50;
  int patience = 5;
  std::uint64_t seed = 0;
  int jobs = 1;

  EngineParams params() const {
    EngineParams p;
    p.num_history_labels = history;
    p.max_iterations = max_iterations;
    p.patience = patience;
    p.seed = seed;
    return p;
  }

  // jobs is left out on purpose: output bytes must not depend on it.
  json to_json() const {
    return {{"num_history_labels", history}, {"max_iterations", max_iterations},
            {"patience", patience}, {"seed", seed}};
  }
};

void add_engine_flags(CLI::App* app, EngineFlags& f) {
  app->add_option("-H,--history", f.history, "history labels per node")->capture_default_str();
  app->add_option("-T,--max-iterations", f.max_iterations, "iteration cap")->capture_default_str();
  app->add_option("--patience", f.patience, "quiet iterations required to stop")->capture_default_str();
  app->add_option("--seed", f.seed, "master seed")->capture_default_str();
  app->add_option("--jobs", f.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

struct GraphInput {
  std::string edges;
  std::string matrix;
  bool directed = false;

  void add(CLI::App* app, bool required) {
    auto* grp = app->add_option_group("input", "graph source");
    grp->add_option("--edges", edges, "edge list TSV (src, dst[, weight])");
    grp->add_option("--matrix", matrix, "dense matrix TSV");
    grp->require_option(required ? 1 : 0, 1);
    app->add_flag("--directed", directed, "read the edge list as directed");
  }

  bool given() const { return !edges.empty() || !matrix.empty(); }

  Graph load() const {
    if (!edges.empty()) return load_edge_list(edges, directed);
    return from_dense_matrix(matrix);
  }

  json to_json() const {
    json j;
    if (!edges.empty()) j["edges"] = edges;
    if (!matrix.empty()) j["matrix"] = matrix;
    j["directed"] = directed;
    return j;
  }
};

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json seed_list(std::uint64_t master, std::size_t count) {
  json a = json::array();
  for (std::size_t i = 0; i < count; ++i) a.push_back(replicate_seed(master, i));
  return a;
}

std::string level_name(int level) { return "partition_level" + std::to_string(level) + ".tsv"; }

// ---------------------------------------------------------------- cluster

struct ClusterCmd {
  GraphInput input;
  EngineFlags engine;
  std::string out = ".";

  void setup(CLI::App* app) {
    input.add(app, true);
    add_engine_flags(app, engine);
    app->add_option("--out", out, "output directory")->capture_default_str();
  }

  void run() const {
    auto g = input.load();
    auto result = run_detailed(g, engine.params());
    auto dir = prepare_out(out);
    save_partition((dir / "partition.tsv").string(), result.partition);
    json cfg = {{"subcommand", "cluster"}, {"input", input.to_json()}, {"engine", engine.to_json()},
                {"iterations", result.iterations}, {"converged", result.converged},
                {"communities", result.partition.num_communities()}};
    write_json(dir / "runconfig.json", cfg);
  }
};

// -------------------------------------------------------------- consensus

struct ConsensusCmd {
  GraphInput input;
  EngineFlags engine;
  std::size_t replicates = 100;
  bool overlap = false;
  int max_communities = 5;
  int depth = 1;
  std::string out = ".";

  void setup(CLI::App* app) {
    input.add(app, true);
    add_engine_flags(app, engine);
    app->add_option("-R,--replicates", replicates, "replicate runs")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_flag("--overlap", overlap, "also write a cover with multi-community nodes");
    app->add_option("--max-communities", max_communities, "membership threshold is 1/this")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--subcluster-depth", depth, "levels of iterative refinement")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--out", out, "output directory")->capture_default_str();
  }

  void run() const {
    auto g = input.load();
    const auto p = engine.params();
    auto ensemble = replicate(g, p, replicates, engine.jobs);
    const auto rep_index = representative_index(ensemble, engine.jobs);
    const auto& rep = ensemble.partitions[rep_index];
    auto co = co_occurrence(ensemble);

    auto dir = prepare_out(out);
    save_partition((dir / "partition.tsv").string(), rep);
    {
      std::ostringstream s;
      write_cooccurrence(s, co);
      write_text(dir / "cooccurrence.tsv", s.str());
    }
    if (overlap) save_cover((dir / "cover.tsv").string(), multi_community_nodes(co, rep, max_communities));
    json levels = json::array();
    if (depth > 1) {
      auto parts = subcluster(g, p, depth, replicates, engine.jobs);
      for (std::size_t l = 0; l < parts.size(); ++l) {
        save_partition((dir / level_name(static_cast<int>(l) + 1)).string(), parts[l]);
        levels.push_back({{"file", level_name(static_cast<int>(l) + 1)},
                          {"communities", parts[l].num_communities()}});
      }
    }

    json cfg = {{"subcommand", "consensus"}, {"input", input.to_json()}, {"engine", engine.to_json()},
                {"replicates", replicates}, {"overlap", overlap}, {"max_communities", max_communities},
                {"subcluster_depth", depth}, {"replicate_seeds", seed_list(p.seed, replicates)},
                {"representative_index", rep_index}, {"communities", rep.num_communities()}};
    if (depth > 1) cfg["levels"] = levels;
    write_json(dir / "runconfig.json", cfg);
  }
};

// ------------------------------------------------------------------- eval

struct EvalCmd {
  std::string pred, truth;
  bool cover = false;
  GraphInput input;

  void setup(CLI::App* app) {
    app->add_option("--pred", pred, "predicted partition or cover TSV")->required();
    app->add_option("--truth", truth, "reference partition or cover TSV")->required();
    app->add_flag("--cover", cover, "compare as covers even if both are disjoint");
    input.add(app, false);
  }

  void run() const {
    auto p = load_cover(pred);
    auto t = load_cover(truth);
    if (p.num_nodes() != t.num_nodes())
      throw Error("node sets differ: " + pred + " has " + std::to_string(p.num_nodes()) + " nodes, " +
                  truth + " has " + std::to_string(t.num_nodes()));
    json j;
    if (!cover && p.is_disjoint() && t.is_disjoint()) {
      auto pp = load_partition(pred), tp = load_partition(truth);
      j["nmi"] = nmi(pp, tp);
      j["ari"] = ari(pp, tp);
      j["ri"] = rand_index(pp, tp);
      j["ji"] = jaccard_index(pp, tp);
      j["f"] = f_measure(pp, tp);
      j["nvd"] = nvd(pp, tp);
      if (input.given()) {
        auto g = input.load();
        if (g.num_nodes() != pp.num_nodes())
          throw Error("graph has " + std::to_string(g.num_nodes()) + " nodes, partition has " +
                      std::to_string(pp.num_nodes()));
        j["q"] = modularity_q(g, pp);
        j["qds"] = modularity_density_qds(g, pp);
      }
    } else {
      j["onmi"] = overlapping_nmi(p, t);
      j["omega"] = omega_index(p, t);
      j["fmulti"] = f_multi(p, t);
    }
    std::cout << j.dump(2) << '\n';
  }
};

// ------------------------------------------------------------------ bench

struct Sweep {
  std::vector<double> values;
};

Sweep parse_sweep(const std::string& text) {
  auto eq = text.find('=');
  if (eq == std::string::npos || text.substr(0, eq) != "mu")
    throw UsageError("--sweep expects mu=start:stop:step");
  std::vector<double> parts;
  std::stringstream ss(text.substr(eq + 1));
  for (std::string item; std::getline(ss, item, ':');) {
    double x;
    if (!detail::parse_double(item, x)) throw UsageError("--sweep: bad number '" + item + "'");
    parts.push_back(x);
  }
  if (parts.size() != 3 || !(parts[2] > 0) || parts[1] < parts[0])
    throw UsageError("--sweep expects mu=start:stop:step with step > 0 and stop >= start");
  const auto count = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
  Sweep s;
  // Rounded so 0.1 + 2 * 0.1 prints as 0.3.
  for (std::size_t i = 0; i < count; ++i)
    s.values.push_back(std::round((parts[0] + static_cast<double>(i) * parts[2]) * 1e12) / 1e12);
  return s;
}

std::string csv_number(std::optional<double> v) { return v ? detail::format_double(*v) : ""; }

struct BenchCmd {
  BenchmarkSpec spec;
  std::string sweep;
  std::size_t instances = 1;
  bool self_test = false;
  EngineFlags engine;
  std::size_t replicates = 100;
  int max_communities = 5;
  std::string out = ".";

  void setup(CLI::App* app) {
    app->add_option("-n", spec.n, "nodes")->capture_default_str();
    app->add_option("-k,--avg-degree", spec.avg_degree, "mean degree")->capture_default_str();
    app->add_option("--kmax", spec.max_degree, "maximum degree")->capture_default_str();
    app->add_option("--gamma", spec.gamma_degree, "degree exponent")->capture_default_str();
    app->add_option("--beta", spec.beta_community, "community size exponent")->capture_default_str();
    app->add_option("--mu", spec.mu, "mixing parameter")->capture_default_str();
    app->add_option("--om", spec.om, "memberships per overlapping node")->capture_default_str();
    app->add_option("--overlap-fraction", spec.overlap_fraction, "fraction of overlapping nodes")
        ->capture_default_str();
    app->add_option("--min-community", spec.min_community_size)->capture_default_str();
    app->add_option("--max-community", spec.max_community_size)->capture_default_str();
    app->add_option("--sweep", sweep, "mu=start:stop:step");
    app->add_option("--instances", instances, "instances per mu value")->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_flag("--self-test", self_test, "cluster every instance and write selftest.csv");
    add_engine_flags(app, engine);
    app->add_option("-R,--replicates", replicates, "replicates for --self-test")->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--max-communities", max_communities, "cover threshold for --self-test")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--out", out, "output directory")->capture_default_str();
  }

  void run() const {
    std::vector<double> mus = sweep.empty() ? std::vector<double>{spec.mu} : parse_sweep(sweep).values;
    auto dir = prepare_out(out);
    std::ostringstream csv;
    csv << "mu,instance,realized_mu,communities,nmi,ari,f,nvd,onmi,omega,fmulti\n";
    json runs = json::array();

    for (std::size_t si = 0; si < mus.size(); ++si) {
      for (std::size_t inst = 0; inst < instances; ++inst) {
        BenchmarkSpec s = spec;
        s.mu = mus[si];
        s.seed = mix_seed(engine.seed, {si, inst});
        auto b = generate(s);
        const std::string stem = "bench_s" + std::to_string(si) + "_i" + std::to_string(inst);
        {
          std::ostringstream e;
          write_edge_list(e, b.graph);
          write_text(dir / (stem + ".edges.tsv"), e.str());
        }
        save_cover((dir / (stem + ".truth.tsv")).string(), b.truth);
        json side = {{"spec",
                      {{"n", s.n}, {"avg_degree", s.avg_degree}, {"max_degree", s.max_degree},
                       {"gamma", s.gamma_degree}, {"beta", s.beta_community}, {"mu", s.mu},
                       {"om", s.om}, {"overlap_fraction", s.overlap_fraction},
                       {"min_community", s.min_community_size}, {"max_community", s.max_community_size},
                       {"seed", s.seed}}},
                     {"realized",
                      {{"mu", b.stats.realized_mu}, {"mean_degree", b.stats.mean_degree},
                       {"communities", b.stats.num_communities}, {"edges", b.graph.num_edges()},
                       {"overlapping_nodes", s.num_overlapping()}}}};
        write_json(dir / (stem + ".json"), side);
        runs.push_back({{"stem", stem}, {"mu", s.mu}, {"instance", inst}, {"seed", s.seed}});

        if (self_test) {
          EngineParams p = engine.params();
          p.seed = mix_seed(engine.seed, {0x73656c66ULL, si, inst});
          auto ensemble = replicate(b.graph, p, replicates, engine.jobs);
          auto rep = representative_partition(ensemble, engine.jobs);
          auto cover = b.truth.is_disjoint() ? Cover::from_partition(rep)
                                             : multi_community_nodes(co_occurrence(ensemble), rep, max_communities);
          std::optional<double> vnmi, vari, vf, vnvd;
          if (b.truth.is_disjoint()) {
            std::vector<CommunityId> t(b.truth.num_nodes());
            for (NodeId v = 0; v < t.size(); ++v) t[v] = b.truth[v][0];
            auto tp = Partition::from_labels(t);
            vnmi = nmi(rep, tp);
            vari = ari(rep, tp);
            vf = f_measure(rep, tp);
            vnvd = nvd(rep, tp);
          }
          csv << detail::format_double(s.mu) << ',' << inst << ',' << detail::format_double(b.stats.realized_mu)
              << ',' << rep.num_communities() << ',' << csv_number(vnmi) << ',' << csv_number(vari) << ','
              << csv_number(vf) << ',' << csv_number(vnvd) << ','
              << detail::format_double(overlapping_nmi(cover, b.truth)) << ','
              << detail::format_double(omega_index(cover, b.truth)) << ','
              << detail::format_double(f_multi(cover, b.truth)) << '\n';
        }
      }
    }
    if (self_test) write_text(dir / "selftest.csv", csv.str());

    json cfg = {{"subcommand", "bench"}, {"sweep", sweep.empty() ? json(nullptr) : json(sweep)},
                {"instances", instances}, {"seed", engine.seed}, {"self_test", self_test}, {"runs", runs}};
    if (self_test)
      cfg["clustering"] = {{"engine", engine.to_json()}, {"replicates", replicates},
                           {"max_communities", max_communities}};
    write_json(dir / "runconfig.json", cfg);
  }
};

// ------------------------------------------------------------------- diff

struct ManifestError : Error {
  ManifestError(const std::string& path, const std::string& what) : Error(path + ": " + what) {}
};

CohortData load_cohort(const json& j, const std::string& where, const fs::path& base) {
  if (!j.is_object()) throw ManifestError(where, "expected an object");
  if (!j.contains("label")) throw ManifestError(where + ".label", "missing");
  if (!j["label"].is_string()) throw ManifestError(where + ".label", "expected a string");
  if (!j.contains("subjects")) throw ManifestError(where + ".subjects", "missing");
  const auto& subjects = j["subjects"];
  if (!subjects.is_array()) throw ManifestError(where + ".subjects", "expected an array");
  if (subjects.empty()) throw ManifestError(where + ".subjects", "no subjects listed");
  CohortData c;
  c.label = j["label"].get<std::string>();
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto at = where + ".subjects[" + std::to_string(i) + "]";
    if (!subjects[i].is_string()) throw ManifestError(at, "expected a file path string");
    fs::path p(subjects[i].get<std::string>());
    if (p.is_relative()) p = base / p;
    c.subjects.push_back(load_dense_matrix(p.string()));
  }
  return c;
}

std::pair<CohortData, CohortData> load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ManifestError("$", std::string("invalid JSON in ") + path + ": " + e.what());
  }
  if (!j.is_object()) throw ManifestError("$", "expected an object");
  if (!j.contains("cohorts")) throw ManifestError("$.cohorts", "missing");
  const auto& cohorts = j["cohorts"];
  if (!cohorts.is_array()) throw ManifestError("$.cohorts", "expected an array");
  if (cohorts.size() != 2) throw ManifestError("$.cohorts", "expected exactly 2 cohorts, found " + std::to_string(cohorts.size()));
  const auto base = fs::path(path).parent_path();
  return {load_cohort(cohorts[0], "$.cohorts[0]", base), load_cohort(cohorts[1], "$.cohorts[1]", base)};
}

json partition_json(const Partition& p) {
  json a = json::array();
  for (NodeId v = 0; v < p.num_nodes(); ++v) a.push_back(p[v]);
  return a;
}

struct DiffCmd {
  std::string manifest;
  EngineFlags engine;
  std::size_t replicates = 100;
  std::size_t permutations = 1000;
  std::size_t null_replicates = 0;
  std::string out = ".";

  void setup(CLI::App* app) {
    app->add_option("--manifest", manifest, "JSON listing two cohorts of matrix files")->required();
    add_engine_flags(app, engine);
    app->add_option("-R,--replicates", replicates, "replicates per observed cohort")->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--permutations", permutations, "label permutations")->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--null-replicates", null_replicates, "replicates per null cohort (default max(20, R/2))");
    app->add_option("--out", out, "output directory")->capture_default_str();
  }

  void run() const {
    auto [a, b] = load_manifest(manifest);
    DiffOptions opt;
    opt.replicates = replicates;
    opt.permutations = permutations;
    opt.null_replicates = null_replicates;
    opt.jobs = engine.jobs;
    auto report = permutation_test(a, b, engine.params(), opt);

    auto dir = prepare_out(out);
    json clusters = json::array();
    for (const auto& c : report.clusters)
      clusters.push_back({{"cluster", c.cluster}, {"size", c.size}, {"stat_a", c.stat_a},
                          {"stat_b", c.stat_b}, {"delta", c.observed_delta}, {"null_mean", c.null_mean},
                          {"null_sd", c.null_sd}, {"p_value", c.p_value}});
    const std::size_t k = report.clusters.size();
    json inter = json::array();
    for (std::size_t i = 0; i < k; ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < k; ++j) row.push_back(report.inter_cluster_change[i * k + j]);
      inter.push_back(row);
    }
    json rep = {{"cohort_a", a.label}, {"cohort_b", b.label}, {"subjects_a", a.subjects.size()},
                {"subjects_b", b.subjects.size()}, {"permutations", report.permutations},
                {"replicates", report.replicates}, {"null_replicates", report.null_replicates},
                {"partition_nmi", report.partition_nmi}, {"clusters", clusters},
                {"inter_cluster_change", inter},
                {"reference_partition", partition_json(report.a.representative)},
                {"partition_b", partition_json(report.b.representative)}};
    write_json(dir / "diff_report.json", rep);
    for (auto [name, cc] : {std::pair{"a", &report.a}, std::pair{"b", &report.b}}) {
      std::ostringstream s;
      write_cooccurrence(s, cc->co);
      write_text(dir / (std::string("cooccurrence_") + name + ".tsv"), s.str());
    }

    json cfg = {{"subcommand", "diff"}, {"manifest", manifest}, {"engine", engine.to_json()},
                {"replicates", replicates}, {"permutations", permutations},
                {"null_replicates", report.null_replicates},
                {"replicate_seeds", seed_list(engine.seed, replicates)}};
    write_json(dir / "runconfig.json", cfg);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SpeakEasy label-propagation community detection"};
  app.require_subcommand(1);

  ClusterCmd cluster;
  ConsensusCmd consensus;
  EvalCmd eval;
  BenchCmd bench;
  DiffCmd diff;
  cluster.setup(app.add_subcommand("cluster", "single clustering run"));
  consensus.setup(app.add_subcommand("consensus", "replicate runs, representative partition, co-occurrence"));
  eval.setup(app.add_subcommand("eval", "compare a prediction against ground truth"));
  bench.setup(app.add_subcommand("bench", "generate planted-community benchmark graphs"));
  diff.setup(app.add_subcommand("diff", "permutation test between two cohorts"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("cluster")) cluster.run();
    else if (app.got_subcommand("consensus")) consensus.run();
    else if (app.got_subcommand("eval")) eval.run();
    else if (app.got_subcommand("bench")) bench.run();
    else if (app.got_subcommand("diff")) diff.run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
