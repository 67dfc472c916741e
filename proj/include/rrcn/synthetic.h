#ifndef RRCN_SYNTHETIC_H_
#define RRCN_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"

#include "rrcn/graph.h"

namespace rrcn {

enum class RuleEffect { kPrefer, kRepulse };

// Ground-truth attribute pattern. A user matches when its code at every
// listed attribute equals the paired code.
struct PlantedRule {
  std::vector<std::size_t> attrs;
  std::vector<int> codes;
  RuleEffect effect = RuleEffect::kPrefer;
  double strength = 0.0;

  bool Matches(const User& user) const;
  bool operator==(const PlantedRule&) const = default;
};

struct SyntheticSpec {
  std::size_t num_attributes = 16;
  // One entry per attribute slot.
  std::vector<int> vocab_sizes;
  std::size_t users_per_side = 0;
  // Distinct (M, F) pairs offered an interaction.
  std::size_t candidate_pairs = 0;
  double base_probability = 0.3;
  std::vector<PlantedRule> rules;
  std::uint64_t seed = 1;

  // Throws std::invalid_argument on an inconsistent spec.
  void Validate() const;
};

// One simulated candidate interaction: the initiator messages the target
// with a probability set by the target's attributes, and the target replies
// with a probability set by the initiator's attributes.
struct InteractionEvent {
  UserId initiator = 0;
  UserId target = 0;
  bool messaged = false;
  bool replied = false;
};

struct SyntheticData {
  AttributedBipartiteGraph graph;
  std::vector<PlantedRule> ground_truth;
  std::vector<InteractionEvent> events;
};

// Base probability shifted by +strength for each matching prefer rule and
// -strength for each matching repulse rule, clamped to [0.02, 0.98].
double ResponseProbability(double base, const std::vector<PlantedRule>& rules, const User& judged);

// M users get ids [0, n), F users [n, 2n).
SyntheticData GenerateSynthetic(const SyntheticSpec& spec);

nlohmann::json RulesToJson(const std::vector<PlantedRule>& rules);
std::vector<PlantedRule> RulesFromJson(const nlohmann::json& j);
SyntheticSpec SyntheticSpecFromJson(const nlohmann::json& j);
nlohmann::json SyntheticSpecToJson(const SyntheticSpec& spec);

// Writes users.csv, edges.csv and ground_truth.json into `dir`.
void WriteSyntheticData(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace rrcn

#endif  // RRCN_SYNTHETIC_H_
