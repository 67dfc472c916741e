#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "rrcn/graph.h"
#include "rrcn/rng.h"
#include "rrcn/synthetic.h"

namespace fs = std::filesystem;

namespace rrcn {
namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("rrcn_graph_test_" + std::to_string(::getpid()) + "_" +
                                         std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

User MUser(UserId id) { return {id, Side::kM, {0}}; }
User FUser(UserId id) { return {id, Side::kF, {0}}; }

TEST(GraphTest, MinimalReciprocalGraph) {
  TempDir dir;
  WriteFile(dir.path() / "users.csv", "user_id,side,attr_0\n1,M,0\n2,F,1\n");
  WriteFile(dir.path() / "edges.csv", "src_id,dst_id\n1,2\n2,1\n");
  const auto g = LoadGraph(dir.path() / "users.csv", dir.path() / "edges.csv");
  ASSERT_EQ(g.ReciprocalPairs().size(), 1u);
  EXPECT_EQ(g.ReciprocalPairs()[0], (std::pair<UserId, UserId>{1, 2}));
}

TEST(GraphTest, SameSideEdgeIsASideViolation) {
  TempDir dir;
  WriteFile(dir.path() / "users.csv", "user_id,side,attr_0\n1,M,0\n2,M,1\n");
  WriteFile(dir.path() / "edges.csv", "src_id,dst_id\n1,2\n");
  try {
    LoadGraph(dir.path() / "users.csv", dir.path() / "edges.csv");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("side violation"), std::string::npos) << e.what();
  }
  EXPECT_THROW(AttributedBipartiteGraph({"a"}, {MUser(1), MUser(2)}, {{1, 2}}), DataError);
}

TEST(GraphTest, MalformedRowsReportTheLine) {
  TempDir dir;
  WriteFile(dir.path() / "users.csv", "user_id,side,attr_0\n1,M,0\n2,F\n");
  WriteFile(dir.path() / "edges.csv", "src_id,dst_id\n");
  try {
    LoadGraph(dir.path() / "users.csv", dir.path() / "edges.csv");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
}

TEST(GraphTest, EdgeToUnknownUserIsRejected) {
  TempDir dir;
  WriteFile(dir.path() / "users.csv", "user_id,side,attr_0\n1,M,0\n2,F,0\n");
  WriteFile(dir.path() / "edges.csv", "src_id,dst_id\n1,9\n");
  EXPECT_THROW(LoadGraph(dir.path() / "users.csv", dir.path() / "edges.csv"), DataError);
}

TEST(GraphTest, SelfLoopsAndDuplicatesAreRejected) {
  EXPECT_THROW(AttributedBipartiteGraph({"a"}, {MUser(1), FUser(2)}, {{1, 1}}), DataError);
  EXPECT_THROW(AttributedBipartiteGraph({"a"}, {MUser(1), FUser(2)}, {{1, 2}, {1, 2}}), DataError);
}

TEST(GraphTest, SixUserFixtureKeepsAllSevenEdges) {
  TempDir dir;
  WriteFile(dir.path() / "users.csv",
            "user_id,side,attr_0,attr_1\n1,M,0,1\n2,M,1,0\n3,M,2,2\n4,F,0,0\n5,F,1,1\n6,F,2,0\n");
  const std::string edges = "src_id,dst_id\n1,4\n4,1\n2,5\n5,3\n6,1\n3,6\n6,3\n";
  WriteFile(dir.path() / "edges.csv", edges);
  const auto g = LoadGraph(dir.path() / "users.csv", dir.path() / "edges.csv");
  const auto lines = std::count(edges.begin(), edges.end(), '\n') - 1;
  EXPECT_EQ(static_cast<long>(g.edges().size()), lines);
  EXPECT_EQ(g.edges().size(), 7u);
  EXPECT_EQ(g.ReciprocalPairs().size(), 2u);
  EXPECT_EQ(g.vocab_sizes(), (std::vector<int>{3, 3}));
}

TEST(InteractionSetsTest, OneWayMessage) {
  const AttributedBipartiteGraph g({"a"}, {MUser(1), FUser(2)}, {{1, 2}});
  EXPECT_EQ(DeriveInteractionSets(g, 1).preferred, (std::vector<UserId>{2}));
  EXPECT_TRUE(DeriveInteractionSets(g, 1).repulsive.empty());
  EXPECT_TRUE(DeriveInteractionSets(g, 2).preferred.empty());
  EXPECT_EQ(DeriveInteractionSets(g, 2).repulsive, (std::vector<UserId>{1}));
}

TEST(InteractionSetsTest, ReciprocalPairIsPreferredOnBothSides) {
  const AttributedBipartiteGraph g({"a"}, {MUser(1), FUser(2)}, {{1, 2}, {2, 1}});
  for (UserId u : {1, 2}) {
    const auto s = DeriveInteractionSets(g, u);
    EXPECT_EQ(s.preferred, (std::vector<UserId>{u == 1 ? 2 : 1}));
    EXPECT_TRUE(s.repulsive.empty());
  }
}

TEST(InteractionSetsTest, UnknownUserIsAnError) {
  const AttributedBipartiteGraph g({"a"}, {MUser(1), FUser(2)}, {});
  EXPECT_THROW(DeriveInteractionSets(g, 7), DataError);
}

// Brute-force double loop over the edge list.
InteractionSets BruteForceSets(const AttributedBipartiteGraph& g, UserId u) {
  std::set<UserId> p, n;
  for (const Edge& e : g.edges())
    if (e.src == u) p.insert(e.dst);
  for (const Edge& e : g.edges()) {
    if (e.dst != u) continue;
    bool back = false;
    for (const Edge& r : g.edges()) back = back || (r.src == u && r.dst == e.src);
    if (!back) n.insert(e.src);
  }
  return {{p.begin(), p.end()}, {n.begin(), n.end()}};
}

AttributedBipartiteGraph RandomGraph(std::size_t per_side, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<User> users;
  for (std::size_t i = 0; i < 2 * per_side; ++i) {
    users.push_back({static_cast<UserId>(i), i < per_side ? Side::kM : Side::kF,
                     {static_cast<int>(UniformIndex(rng, 3)), static_cast<int>(UniformIndex(rng, 2))}});
  }
  std::vector<Edge> edges;
  for (std::size_t m = 0; m < per_side; ++m)
    for (std::size_t f = per_side; f < 2 * per_side; ++f) {
      if (Uniform01(rng) < density) edges.push_back({static_cast<UserId>(m), static_cast<UserId>(f)});
      if (Uniform01(rng) < density) edges.push_back({static_cast<UserId>(f), static_cast<UserId>(m)});
    }
  return AttributedBipartiteGraph({"a", "b"}, std::move(users), std::move(edges));
}

TEST(InteractionSetsTest, FiveUserFixtureMatchesExhaustiveScan) {
  const AttributedBipartiteGraph g({"a"}, {MUser(1), MUser(2), FUser(3), FUser(4), FUser(5)},
                                   {{1, 3}, {3, 1}, {1, 4}, {5, 1}, {4, 2}, {2, 5}, {5, 2}, {3, 2}});
  EXPECT_EQ(DeriveInteractionSets(g, 1).preferred, (std::vector<UserId>{3, 4}));
  EXPECT_EQ(DeriveInteractionSets(g, 1).repulsive, (std::vector<UserId>{5}));
  EXPECT_EQ(DeriveInteractionSets(g, 2).repulsive, (std::vector<UserId>{3, 4}));
  for (UserId u = 1; u <= 5; ++u) {
    const auto want = BruteForceSets(g, u);
    const auto got = DeriveInteractionSets(g, u);
    EXPECT_EQ(got.preferred, want.preferred) << u;
    EXPECT_EQ(got.repulsive, want.repulsive) << u;
  }
}

TEST(InteractionSetsTest, FiftyUserRandomGraphMatchesDoubleLoop) {
  const auto g = RandomGraph(25, 0.15, 5);
  for (const User& u : g.users()) {
    const auto want = BruteForceSets(g, u.id);
    const auto got = DeriveInteractionSets(g, u.id);
    EXPECT_EQ(got.preferred, want.preferred) << u.id;
    EXPECT_EQ(got.repulsive, want.repulsive) << u.id;
    std::vector<UserId> both;
    std::set_intersection(got.preferred.begin(), got.preferred.end(), got.repulsive.begin(),
                          got.repulsive.end(), std::back_inserter(both));
    EXPECT_TRUE(both.empty());
    for (UserId v : got.preferred) EXPECT_NE(g.user(v).side, u.side);
    for (UserId v : got.repulsive) EXPECT_NE(g.user(v).side, u.side);
  }
}

AttributedBipartiteGraph TenReciprocalPairs() {
  std::vector<User> users;
  std::vector<Edge> edges;
  for (UserId i = 0; i < 12; ++i) {
    users.push_back(MUser(i));
    users.push_back(FUser(100 + i));
  }
  for (UserId i = 0; i < 10; ++i) {
    edges.push_back({i, 100 + i});
    edges.push_back({100 + i, i});
  }
  for (UserId i = 0; i < 12; ++i) edges.push_back({i, 100 + (i + 1) % 12});
  return AttributedBipartiteGraph({"a"}, std::move(users), std::move(edges));
}

TEST(PairDatasetTest, TenReciprocalPairsGiveTwentyBalancedPairs) {
  const auto split = BuildPairDataset(TenReciprocalPairs(), 3);
  EXPECT_EQ(split.train.pairs.size(), 16u);
  EXPECT_EQ(split.test.pairs.size(), 4u);
  auto positives = [](const PairDataset& d) {
    return std::count_if(d.pairs.begin(), d.pairs.end(), [](const LabeledPair& p) { return p.label == 1; });
  };
  EXPECT_EQ(positives(split.train), 8);
  EXPECT_EQ(positives(split.test), 2);
  EXPECT_EQ(split.train.split, SplitTag::kTrain);
  EXPECT_EQ(split.test.split, SplitTag::kTest);
}

TEST(PairDatasetTest, SameSeedGivesByteIdenticalFiles) {
  const auto g = RandomGraph(20, 0.2, 9);
  TempDir dir;
  SavePairs(BuildPairDataset(g, 42).train, dir.path() / "a.csv");
  SavePairs(BuildPairDataset(g, 42).train, dir.path() / "b.csv");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_FALSE(slurp(dir.path() / "a.csv").empty());
  EXPECT_EQ(slurp(dir.path() / "a.csv"), slurp(dir.path() / "b.csv"));
  EXPECT_EQ(BuildPairDataset(g, 42).test, BuildPairDataset(g, 42).test);
  EXPECT_NE(BuildPairDataset(g, 42).train, BuildPairDataset(g, 43).train);
}

TEST(PairDatasetTest, LabelsFollowReciprocityAndSplitsAreDisjoint) {
  const auto g = RandomGraph(25, 0.2, 13);
  const auto split = BuildPairDataset(g, 8);
  std::set<std::pair<UserId, UserId>> train_keys;
  std::size_t pos = 0, neg = 0;
  for (const auto& p : split.train.pairs) train_keys.emplace(p.m, p.f);
  for (const PairDataset* d : {&split.train, &split.test}) {
    for (const auto& p : d->pairs) {
      EXPECT_EQ(g.user(p.m).side, Side::kM);
      EXPECT_EQ(g.user(p.f).side, Side::kF);
      EXPECT_EQ(p.label == 1, g.has_edge(p.m, p.f) && g.has_edge(p.f, p.m));
      (p.label ? pos : neg)++;
    }
  }
  for (const auto& p : split.test.pairs) EXPECT_EQ(train_keys.count({p.m, p.f}), 0u);
  EXPECT_EQ(pos, neg);
  EXPECT_EQ(pos, g.ReciprocalPairs().size());
  const double expect_train = 0.8 * static_cast<double>(pos);
  std::size_t train_pos = 0;
  for (const auto& p : split.train.pairs) train_pos += p.label;
  EXPECT_LE(std::abs(static_cast<double>(train_pos) - expect_train), 1.0);
}

TEST(PairDatasetTest, FallsBackToEdgeFreePairs) {
  // Every edge is reciprocated, so negatives must come from edge-free pairs.
  const AttributedBipartiteGraph g({"a"}, {MUser(1), MUser(2), FUser(3), FUser(4)}, {{1, 3}, {3, 1}});
  const auto split = BuildPairDataset(g, 1);
  std::vector<LabeledPair> all = split.train.pairs;
  all.insert(all.end(), split.test.pairs.begin(), split.test.pairs.end());
  ASSERT_EQ(all.size(), 2u);
  for (const auto& p : all) {
    if (p.label == 0) EXPECT_FALSE(g.has_edge(p.m, p.f) || g.has_edge(p.f, p.m));
  }
}

TEST(PairDatasetTest, NoReciprocalLinksIsAnError) {
  const AttributedBipartiteGraph g({"a"}, {MUser(1), FUser(2)}, {{1, 2}});
  EXPECT_THROW(BuildPairDataset(g, 1), DataError);
}

TEST(GraphIoTest, SaveThenLoadRoundTrips) {
  const auto g = RandomGraph(10, 0.3, 17);
  TempDir dir;
  SaveGraph(g, dir.path() / "users.csv", dir.path() / "edges.csv");
  const auto back = LoadGraph(dir.path() / "users.csv", dir.path() / "edges.csv");
  EXPECT_EQ(back, g);
  EXPECT_EQ(back.attribute_names(), g.attribute_names());
}

SyntheticSpec SmallSpec() {
  SyntheticSpec spec;
  spec.num_attributes = 4;
  spec.vocab_sizes = {2, 2, 2, 2};
  spec.users_per_side = 300;
  spec.candidate_pairs = 60000;
  spec.base_probability = 0.3;
  spec.seed = 4;
  return spec;
}

TEST(SyntheticTest, ZeroStrengthGivesBaseSquaredReciprocity) {
  SyntheticSpec spec = SmallSpec();
  spec.rules = {{{0, 1}, {1, 1}, RuleEffect::kPrefer, 0.0}, {{2}, {0}, RuleEffect::kRepulse, 0.0}};
  const auto data = GenerateSynthetic(spec);
  ASSERT_GE(data.events.size(), 50000u);
  const double n = static_cast<double>(data.events.size());
  const double rate = static_cast<double>(data.graph.ReciprocalPairs().size()) / n;
  const double p = spec.base_probability * spec.base_probability;
  EXPECT_LT(std::abs(rate - p), 3.0 * std::sqrt(p * (1 - p) / n)) << rate << " vs " << p;
}

TEST(SyntheticTest, FullStrengthPreferRuleRepliesAtTheClamp) {
  SyntheticSpec spec = SmallSpec();
  spec.rules = {{{1, 3}, {1, 0}, RuleEffect::kPrefer, 1.0}};
  const auto data = GenerateSynthetic(spec);
  std::size_t trials = 0, replies = 0;
  for (const auto& ev : data.events) {
    if (!ev.messaged || !spec.rules[0].Matches(data.graph.user(ev.initiator))) continue;
    ++trials;
    replies += ev.replied;
  }
  ASSERT_GT(trials, 1000u);
  const double rate = static_cast<double>(replies) / static_cast<double>(trials);
  EXPECT_LT(std::abs(rate - 0.98), 3.0 * std::sqrt(0.98 * 0.02 / static_cast<double>(trials))) << rate;
}

TEST(SyntheticTest, EmptyPopulationIsNotAnError) {
  SyntheticSpec spec = SmallSpec();
  spec.users_per_side = 0;
  const auto data = GenerateSynthetic(spec);
  EXPECT_TRUE(data.graph.users().empty());
  EXPECT_TRUE(data.graph.edges().empty());
}

TEST(SyntheticTest, RejectsInvalidRules) {
  SyntheticSpec spec = SmallSpec();
  spec.rules = {{{0, 0}, {1, 1}, RuleEffect::kPrefer, 0.5}};
  EXPECT_THROW(GenerateSynthetic(spec), std::invalid_argument);
  spec.rules = {{{0}, {1}, RuleEffect::kPrefer, 1.5}};
  EXPECT_THROW(GenerateSynthetic(spec), std::invalid_argument);
  spec.rules = {{{7}, {1}, RuleEffect::kPrefer, 0.5}};
  EXPECT_THROW(GenerateSynthetic(spec), std::invalid_argument);
}

TEST(SyntheticTest, ResponseProbabilityIsShiftedAndClamped) {
  const User u{1, Side::kM, {1, 0, 1, 1}};
  const PlantedRule prefer{{0, 2}, {1, 1}, RuleEffect::kPrefer, 0.4};
  const PlantedRule repulse{{1}, {0}, RuleEffect::kRepulse, 0.6};
  EXPECT_DOUBLE_EQ(ResponseProbability(0.3, {prefer}, u), 0.7);
  EXPECT_DOUBLE_EQ(ResponseProbability(0.3, {repulse}, u), 0.02);
  EXPECT_DOUBLE_EQ(ResponseProbability(0.3, {prefer, repulse}, u), 0.3 + 0.4 - 0.6);
  EXPECT_DOUBLE_EQ(ResponseProbability(0.9, {prefer}, u), 0.98);
}

TEST(SyntheticTest, SameSeedSameGraphAndRulesRoundTripThroughJson) {
  SyntheticSpec spec = SmallSpec();
  spec.candidate_pairs = 2000;
  spec.rules = {{{0, 2, 3}, {1, 0, 1}, RuleEffect::kPrefer, 0.8}, {{1}, {1}, RuleEffect::kRepulse, 0.5}};
  EXPECT_EQ(GenerateSynthetic(spec).graph, GenerateSynthetic(spec).graph);
  EXPECT_EQ(RulesFromJson(RulesToJson(spec.rules)), spec.rules);
  const SyntheticSpec back = SyntheticSpecFromJson(SyntheticSpecToJson(spec));
  EXPECT_EQ(back.rules, spec.rules);
  EXPECT_EQ(back.users_per_side, spec.users_per_side);
}

}  // namespace
}  // namespace rrcn
