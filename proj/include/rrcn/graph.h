#ifndef RRCN_GRAPH_H_
#define RRCN_GRAPH_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rrcn {

using UserId = std::int64_t;

enum class Side { kM, kF };

char SideChar(Side side);

// Raised for malformed input files and graph invariant violations.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct User {
  UserId id = 0;
  Side side = Side::kM;
  // One categorical code per attribute slot.
  std::vector<int> attributes;

  bool operator==(const User&) const = default;
};

struct Edge {
  UserId src = 0;
  UserId dst = 0;

  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

// Two-sided user graph with directed message edges. Immutable once built.
// Every edge crosses sides; self-loops and duplicates are rejected.
class AttributedBipartiteGraph {
 public:
  AttributedBipartiteGraph() = default;
  AttributedBipartiteGraph(std::vector<std::string> attribute_names, std::vector<User> users,
                           std::vector<Edge> edges);

  std::size_t num_attributes() const { return attribute_names_.size(); }
  const std::vector<std::string>& attribute_names() const { return attribute_names_; }
  // Per-slot vocabulary size: one past the largest code seen in the slot.
  const std::vector<int>& vocab_sizes() const { return vocab_sizes_; }

  const std::vector<User>& users() const { return users_; }
  // Sorted by (src, dst).
  const std::vector<Edge>& edges() const { return edges_; }

  bool contains(UserId id) const { return index_.count(id) > 0; }
  const User& user(UserId id) const;
  bool has_edge(UserId src, UserId dst) const;
  bool is_reciprocal(UserId a, UserId b) const { return has_edge(a, b) && has_edge(b, a); }

  // Sorted ids.
  const std::vector<UserId>& out_neighbors(UserId id) const;
  const std::vector<UserId>& in_neighbors(UserId id) const;

  // Reciprocal pairs as (M user, F user), sorted.
  std::vector<std::pair<UserId, UserId>> ReciprocalPairs() const;
  std::vector<UserId> UsersOnSide(Side side) const;

  // Index of an attribute by name; throws DataError if unknown.
  std::size_t AttributeIndex(const std::string& name) const;

  bool operator==(const AttributedBipartiteGraph& other) const {
    return attribute_names_ == other.attribute_names_ && users_ == other.users_ &&
           edges_ == other.edges_;
  }

 private:
  std::size_t IndexOf(UserId id) const;

  std::vector<std::string> attribute_names_;
  std::vector<int> vocab_sizes_;
  std::vector<User> users_;
  std::vector<Edge> edges_;
  std::unordered_map<UserId, std::size_t> index_;
  std::vector<std::vector<UserId>> out_;
  std::vector<std::vector<UserId>> in_;
};

struct InteractionSets {
  // Users u messaged.
  std::vector<UserId> preferred;
  // Users who messaged u and were never messaged back.
  std::vector<UserId> repulsive;
};

InteractionSets DeriveInteractionSets(const AttributedBipartiteGraph& graph, UserId u);

struct LabeledPair {
  UserId m = 0;
  UserId f = 0;
  int label = 0;

  bool operator==(const LabeledPair&) const = default;
};

enum class SplitTag { kTrain, kTest };

struct PairDataset {
  std::vector<LabeledPair> pairs;
  SplitTag split = SplitTag::kTrain;

  bool operator==(const PairDataset&) const = default;
};

struct DatasetSplit {
  PairDataset train;
  PairDataset test;
};

// All reciprocal pairs as positives, an equal number of sampled negatives
// (one-directional pairs first, then edge-free pairs), split 80/20 per label.
DatasetSplit BuildPairDataset(const AttributedBipartiteGraph& graph, std::uint64_t seed);

// CSV I/O. users.csv: user_id,side,attr_0,...; edges.csv: src_id,dst_id.
AttributedBipartiteGraph LoadGraph(const std::filesystem::path& users_path,
                                   const std::filesystem::path& edges_path);
void SaveGraph(const AttributedBipartiteGraph& graph, const std::filesystem::path& users_path,
               const std::filesystem::path& edges_path);

void SavePairs(const PairDataset& data, const std::filesystem::path& path);

}  // namespace rrcn

#endif  // RRCN_GRAPH_H_
