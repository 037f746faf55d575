#include <gtest/gtest.h>

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "cohort_model.hpp"
#include "speakeasy/benchgen.hpp"
#include "test_helpers.hpp"

using namespace testing_support;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string err;
  std::string out;
};

Outcome cli(const TempDir& dir, const std::string& args) {
  const auto out = dir.file("stdout.txt"), err = dir.file("stderr.txt");
  const std::string cmd = std::string("cd '") + dir.path().string() + "' && '" + SPEAKEASY_CLI_PATH + "' " +
                          args + " >'" + out + "' 2>'" + err + "'";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

std::string two_triangles() { return "0\t1\n1\t2\n0\t2\n3\t4\n4\t5\n3\t5\n2\t3\n"; }

std::string two_cliques_with_bridge() {
  std::string s;
  for (int base : {0, 10})
    for (int i = 0; i < 10; ++i)
      for (int j = i + 1; j < 10; ++j) s += std::to_string(base + i) + "\t" + std::to_string(base + j) + "\n";
  return s + "9\t10\n";
}

std::string matrix_text(const speakeasy::DenseMatrix& m) {
  std::string s;
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = 0; j < m.n; ++j) s += (j ? "\t" : "") + speakeasy::detail::format_double(m(i, j));
    s += "\n";
  }
  return s;
}

}  // namespace

TEST(Cli, ClusterIsReproducible) {
  TempDir d;
  d.write("g.tsv", two_triangles());
  ASSERT_EQ(cli(d, "cluster --edges g.tsv --seed 7 --out r1").code, 0);
  ASSERT_EQ(cli(d, "cluster --edges g.tsv --seed 7 --out r2").code, 0);
  for (auto f : {"partition.tsv", "runconfig.json"})
    EXPECT_EQ(slurp(d.file(std::string("r1/") + f)), slurp(d.file(std::string("r2/") + f))) << f;
  auto cfg = nlohmann::json::parse(slurp(d.file("r1/runconfig.json")));
  EXPECT_EQ(cfg["engine"]["seed"], 7);
  EXPECT_EQ(cfg["engine"]["num_history_labels"], 5);
  EXPECT_EQ(cfg["engine"]["max_iterations"], 50);
}

TEST(Cli, ClusterAcceptsDenseMatrix) {
  TempDir d;
  d.write("m.tsv", "a\tb\tc\n0\t1\t0\n1\t0\t1\n0\t1\t0\n");
  auto o = cli(d, "cluster --matrix m.tsv --out r");
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(speakeasy::load_partition(d.file("r/partition.tsv")).num_nodes(), 3u);
}

TEST(Cli, MissingInputNamesPath) {
  TempDir d;
  auto o = cli(d, "cluster --edges no_such_graph.tsv");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("no_such_graph.tsv"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  TempDir d;
  d.write("g.tsv", two_triangles());
  EXPECT_EQ(cli(d, "cluster").code, 2);
  EXPECT_EQ(cli(d, "cluster --edges g.tsv --matrix g.tsv").code, 2);
  EXPECT_EQ(cli(d, "cluster --edges g.tsv --bogus").code, 2);
  EXPECT_EQ(cli(d, "").code, 2);
  EXPECT_EQ(cli(d, "consensus --edges g.tsv -R 0").code, 2);
  EXPECT_EQ(cli(d, "bench --sweep sigma=1:2:1").code, 2);
}

TEST(Cli, HelpForEverySubcommand) {
  TempDir d;
  EXPECT_EQ(cli(d, "--help").code, 0);
  for (auto sub : {"cluster", "consensus", "eval", "bench", "diff"}) {
    auto o = cli(d, std::string(sub) + " --help");
    EXPECT_EQ(o.code, 0) << sub;
    EXPECT_NE(o.out.find("--"), std::string::npos) << sub;
  }
}

TEST(Cli, RuntimeErrorExitsOne) {
  TempDir d;
  d.write("bad.tsv", "0\tx\n");
  auto o = cli(d, "cluster --edges bad.tsv");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("bad.tsv:1"), std::string::npos);
}

TEST(Cli, ConsensusWritesCoverAndCooccurrence) {
  TempDir d;
  d.write("g.tsv", two_cliques_with_bridge());
  auto o = cli(d, "consensus --edges g.tsv -R 20 --overlap --max-communities 5 --out r");
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(fs::exists(d.file("r/cover.tsv")));
  EXPECT_TRUE(fs::exists(d.file("r/partition.tsv")));
  auto co_in = std::ifstream(d.file("r/cooccurrence.tsv"));
  EXPECT_EQ(speakeasy::read_cooccurrence(co_in).replicates(), 20u);
  auto cfg = nlohmann::json::parse(slurp(d.file("r/runconfig.json")));
  EXPECT_EQ(cfg["replicate_seeds"].size(), 20u);
  EXPECT_EQ(cfg["max_communities"], 5);
}

TEST(Cli, ConsensusDefaults) {
  TempDir d;
  d.write("g.tsv", two_triangles());
  ASSERT_EQ(cli(d, "consensus --edges g.tsv --out r").code, 0);
  auto cfg = nlohmann::json::parse(slurp(d.file("r/runconfig.json")));
  EXPECT_EQ(cfg["replicates"], 100);
  EXPECT_EQ(cfg["max_communities"], 5);
  EXPECT_EQ(cfg["engine"]["patience"], 5);
  EXPECT_FALSE(fs::exists(d.file("r/cover.tsv")));
}

TEST(Cli, SingleReplicateIsTheSingleRun) {
  TempDir d;
  d.write("g.tsv", two_cliques_with_bridge());
  ASSERT_EQ(cli(d, "consensus --edges g.tsv -R 1 --seed 11 --out r").code, 0);
  auto g = speakeasy::load_edge_list(d.file("g.tsv"));
  speakeasy::EngineParams p;
  p.seed = speakeasy::replicate_seed(11, 0);
  EXPECT_EQ(speakeasy::load_partition(d.file("r/partition.tsv")), speakeasy::run(g, p));
}

TEST(Cli, SubclusterDepthWritesOneFilePerLevel) {
  TempDir d;
  d.write("g.tsv", two_cliques_with_bridge());
  ASSERT_EQ(cli(d, "consensus --edges g.tsv -R 5 --subcluster-depth 3 --out r").code, 0);
  for (int l = 1; l <= 3; ++l) EXPECT_TRUE(fs::exists(d.file("r/partition_level" + std::to_string(l) + ".tsv")));
  EXPECT_FALSE(fs::exists(d.file("r/partition_level4.tsv")));
}

TEST(Cli, EvalIdenticalPartitions) {
  TempDir d;
  d.write("p.tsv", "0\t0\n1\t0\n2\t1\n3\t1\n");
  auto o = cli(d, "eval --pred p.tsv --truth p.tsv");
  ASSERT_EQ(o.code, 0) << o.err;
  auto j = nlohmann::json::parse(o.out);
  EXPECT_EQ(j["nmi"], 1.0);
  EXPECT_EQ(j["nvd"], 0.0);
  for (auto k : {"ari", "ri", "ji", "f"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_FALSE(j.contains("q"));
  EXPECT_FALSE(j.contains("onmi"));
}

TEST(Cli, EvalWithGraphAddsModularity) {
  TempDir d;
  d.write("g.tsv", two_triangles());
  d.write("p.tsv", "0\t0\n1\t0\n2\t0\n3\t1\n4\t1\n5\t1\n");
  auto o = cli(d, "eval --pred p.tsv --truth p.tsv --edges g.tsv");
  ASSERT_EQ(o.code, 0) << o.err;
  auto j = nlohmann::json::parse(o.out);
  EXPECT_NEAR(j["q"].get<double>(), 5.0 / 14.0, 1e-12);
  EXPECT_TRUE(j.contains("qds"));
}

TEST(Cli, EvalCovers) {
  TempDir d;
  d.write("a.tsv", "0\t0\n1\t0,1\n2\t1\n");
  d.write("b.tsv", "0\t0\n1\t0\n2\t1\n");
  auto o = cli(d, "eval --pred a.tsv --truth b.tsv");
  ASSERT_EQ(o.code, 0) << o.err;
  auto j = nlohmann::json::parse(o.out);
  for (auto k : {"onmi", "omega", "fmulti"}) EXPECT_TRUE(j.contains(k)) << k;
  for (auto k : {"nmi", "ari", "ri", "ji", "f", "nvd"}) EXPECT_FALSE(j.contains(k)) << k;
}

TEST(Cli, EvalNodeMismatchFails) {
  TempDir d;
  d.write("a.tsv", "0\t0\n1\t0\n");
  d.write("b.tsv", "0\t0\n1\t0\n2\t1\n");
  EXPECT_EQ(cli(d, "eval --pred a.tsv --truth b.tsv").code, 1);
}

TEST(Cli, BenchWritesGraphTruthAndSidecar) {
  TempDir d;
  auto o = cli(d, "bench -n 1000 -k 15 --kmax 50 --mu 0.1 --seed 3 --out b");
  ASSERT_EQ(o.code, 0) << o.err;
  auto side = nlohmann::json::parse(slurp(d.file("b/bench_s0_i0.json")));
  EXPECT_NEAR(side["realized"]["mu"].get<double>(), 0.1, 0.02);
  EXPECT_EQ(side["spec"]["n"], 1000);
  auto g = speakeasy::load_edge_list(d.file("b/bench_s0_i0.edges.tsv"));
  auto truth = speakeasy::load_cover(d.file("b/bench_s0_i0.truth.tsv"));
  EXPECT_EQ(truth.num_nodes(), 1000u);
  EXPECT_NEAR(speakeasy::realized_mixing(g, truth), side["realized"]["mu"].get<double>(), 1e-12);
}

TEST(Cli, BenchOverlapFraction) {
  TempDir d;
  ASSERT_EQ(cli(d, "bench -n 1000 -k 15 --kmax 50 --mu 0.1 --om 2 --overlap-fraction 0.1 --out b").code, 0);
  auto truth = speakeasy::load_cover(d.file("b/bench_s0_i0.truth.tsv"));
  std::size_t multi = 0;
  for (speakeasy::NodeId v = 0; v < truth.num_nodes(); ++v) multi += truth.is_multi(v);
  EXPECT_EQ(multi, 100u);
}

TEST(Cli, BenchSweepSelfTestRows) {
  TempDir d;
  auto o = cli(d,
               "bench -n 120 -k 8 --kmax 20 --min-community 10 --max-community 30 "
               "--sweep mu=0.1:0.3:0.1 --instances 2 --self-test -R 3 --out b");
  ASSERT_EQ(o.code, 0) << o.err;
  auto csv = slurp(d.file("b/selftest.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 2);
  EXPECT_EQ(csv.rfind("mu,instance,", 0), 0u);
  EXPECT_NE(csv.find("\n0.3,1,"), std::string::npos);
  EXPECT_TRUE(fs::exists(d.file("b/bench_s2_i1.edges.tsv")));
}

TEST(Cli, BenchInfeasibleSpecFails) {
  TempDir d;
  auto o = cli(d, "bench -n 50 -k 15 --kmax 60");
  EXPECT_EQ(o.code, 1);
  EXPECT_FALSE(o.err.empty());
}

class CliDiff : public ::testing::Test {
 protected:
  void SetUp() override {
    BlockModel m;
    m.block_sizes = {6, 6};
    m.within = {0.8, 0.8};
    m.noise = 0.1;
    speakeasy::Rng rng(8);
    for (int s = 0; s < 3; ++s) dir_.write("s" + std::to_string(s) + ".tsv", matrix_text(draw_subject(m, rng)));
  }

  TempDir dir_;
};

TEST_F(CliDiff, IdenticalCohortsGiveUnitP) {
  dir_.write("m.json", R"({"cohorts": [{"label": "ctl", "subjects": ["s0.tsv", "s1.tsv", "s2.tsv"]},
                                       {"label": "pd", "subjects": ["s0.tsv", "s1.tsv", "s2.tsv"]}]})");
  auto o = cli(dir_, "diff --manifest m.json -R 10 --permutations 20 --out r");
  ASSERT_EQ(o.code, 0) << o.err;
  auto rep = nlohmann::json::parse(slurp(dir_.file("r/diff_report.json")));
  ASSERT_FALSE(rep["clusters"].empty());
  for (auto& c : rep["clusters"]) EXPECT_EQ(c["p_value"], 1.0);
  EXPECT_EQ(rep["null_replicates"], 20);
  EXPECT_TRUE(fs::exists(dir_.file("r/cooccurrence_a.tsv")));
  EXPECT_TRUE(fs::exists(dir_.file("r/cooccurrence_b.tsv")));
}

TEST_F(CliDiff, DefaultPermutationCount) {
  dir_.write("m.json", R"({"cohorts": [{"label": "a", "subjects": ["s0.tsv"]}, {"label": "b", "subjects": ["s1.tsv"]}]})");
  ASSERT_EQ(cli(dir_, "diff --manifest m.json -R 1 --null-replicates 1 --out r").code, 0);
  auto rep = nlohmann::json::parse(slurp(dir_.file("r/diff_report.json")));
  EXPECT_EQ(rep["permutations"], 1000);
}

TEST_F(CliDiff, MalformedManifestNamesJsonPath) {
  dir_.write("m1.json", R"({"cohorts": [{"label": "a", "subjects": ["s0.tsv", 3]}, {"label": "b", "subjects": ["s1.tsv"]}]})");
  auto o = cli(dir_, "diff --manifest m1.json");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("$.cohorts[0].subjects[1]"), std::string::npos) << o.err;

  dir_.write("m2.json", R"({"cohorts": [{"label": "a", "subjects": ["s0.tsv"]}]})");
  o = cli(dir_, "diff --manifest m2.json");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("$.cohorts"), std::string::npos) << o.err;

  dir_.write("m3.json", R"({"cohorts": [{"subjects": ["s0.tsv"]}, {"label": "b", "subjects": ["s1.tsv"]}]})");
  o = cli(dir_, "diff --manifest m3.json");
  EXPECT_NE(o.err.find("$.cohorts[0].label"), std::string::npos) << o.err;

  dir_.write("m4.json", "{not json");
  o = cli(dir_, "diff --manifest m4.json");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("$"), std::string::npos) << o.err;
}

TEST(Cli, OutputIndependentOfJobs) {
  TempDir d;
  d.write("g.tsv", two_cliques_with_bridge());
  ASSERT_EQ(cli(d, "consensus --edges g.tsv -R 12 --overlap --subcluster-depth 2 --jobs 1 --out j1").code, 0);
  ASSERT_EQ(cli(d, "consensus --edges g.tsv -R 12 --overlap --subcluster-depth 2 --jobs 8 --out j8").code, 0);
  for (auto& entry : fs::directory_iterator(d.path() / "j1")) {
    const auto name = entry.path().filename().string();
    EXPECT_EQ(slurp(entry.path().string()), slurp(d.file("j8/" + name))) << name;
  }
}
