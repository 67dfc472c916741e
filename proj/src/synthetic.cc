#include "rrcn/synthetic.h"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "rrcn/rng.h"

namespace rrcn {

bool PlantedRule::Matches(const User& user) const {
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (user.attributes[attrs[i]] != codes[i]) return false;
  }
  return true;
}

void SyntheticSpec::Validate() const {
  if (num_attributes == 0) throw std::invalid_argument("synthetic spec: L must be positive");
  if (vocab_sizes.size() != num_attributes) {
    throw std::invalid_argument("synthetic spec: need one vocab size per attribute");
  }
  for (int v : vocab_sizes) {
    if (v <= 0) throw std::invalid_argument("synthetic spec: vocab sizes must be positive");
  }
  if (!(base_probability >= 0.0 && base_probability <= 1.0)) {
    throw std::invalid_argument("synthetic spec: base probability must lie in [0, 1]");
  }
  for (const PlantedRule& r : rules) {
    if (r.attrs.empty() || r.attrs.size() > 4) {
      throw std::invalid_argument("synthetic spec: rules cover 1 to 4 attributes");
    }
    if (r.codes.size() != r.attrs.size()) {
      throw std::invalid_argument("synthetic spec: rule needs one code per attribute");
    }
    std::unordered_set<std::size_t> seen;
    for (std::size_t i = 0; i < r.attrs.size(); ++i) {
      if (r.attrs[i] >= num_attributes || !seen.insert(r.attrs[i]).second) {
        throw std::invalid_argument("synthetic spec: rule attributes must be distinct and < L");
      }
      if (r.codes[i] < 0 || r.codes[i] >= vocab_sizes[r.attrs[i]]) {
        throw std::invalid_argument("synthetic spec: rule code outside slot vocabulary");
      }
    }
    if (!(r.strength >= 0.0 && r.strength <= 1.0)) {
      throw std::invalid_argument("synthetic spec: rule strength must lie in [0, 1]");
    }
  }
}

double ResponseProbability(double base, const std::vector<PlantedRule>& rules, const User& judged) {
  double p = base;
  for (const PlantedRule& r : rules) {
    if (!r.Matches(judged)) continue;
    p += r.effect == RuleEffect::kPrefer ? r.strength : -r.strength;
  }
  return std::clamp(p, 0.02, 0.98);
}

SyntheticData GenerateSynthetic(const SyntheticSpec& spec) {
  spec.Validate();
  Rng rng(spec.seed);
  const std::size_t n = spec.users_per_side;
  const std::size_t L = spec.num_attributes;

  std::vector<std::string> names;
  for (std::size_t a = 0; a < L; ++a) names.push_back("attr_" + std::to_string(a));

  std::vector<User> users;
  users.reserve(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    User u;
    u.id = static_cast<UserId>(i);
    u.side = i < n ? Side::kM : Side::kF;
    u.attributes.resize(L);
    for (std::size_t a = 0; a < L; ++a) {
      u.attributes[a] = static_cast<int>(UniformIndex(rng, static_cast<std::size_t>(spec.vocab_sizes[a])));
    }
    users.push_back(std::move(u));
  }

  // Distinct candidate (m, f) pairs.
  const std::size_t total = n * n;
  const std::size_t wanted = std::min(spec.candidate_pairs, total);
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  candidates.reserve(wanted);
  if (wanted * 2 > total) {
    for (std::size_t m = 0; m < n; ++m)
      for (std::size_t f = 0; f < n; ++f) candidates.emplace_back(m, n + f);
    Shuffle(candidates, rng);
    candidates.resize(wanted);
  } else {
    std::unordered_set<std::size_t> used;
    while (candidates.size() < wanted) {
      const std::size_t m = UniformIndex(rng, n);
      const std::size_t f = UniformIndex(rng, n);
      if (used.insert(m * n + f).second) candidates.emplace_back(m, n + f);
    }
  }

  SyntheticData data;
  std::vector<Edge> edges;
  data.events.reserve(candidates.size());
  for (const auto& [m, f] : candidates) {
    const bool m_starts = Uniform01(rng) < 0.5;
    const User& initiator = users[m_starts ? m : f];
    const User& target = users[m_starts ? f : m];
    InteractionEvent ev{initiator.id, target.id, false, false};
    ev.messaged = Uniform01(rng) < ResponseProbability(spec.base_probability, spec.rules, target);
    if (ev.messaged) {
      edges.push_back({initiator.id, target.id});
      ev.replied = Uniform01(rng) < ResponseProbability(spec.base_probability, spec.rules, initiator);
      if (ev.replied) edges.push_back({target.id, initiator.id});
    }
    data.events.push_back(ev);
  }
  data.graph = AttributedBipartiteGraph(std::move(names), std::move(users), std::move(edges));
  data.ground_truth = spec.rules;
  return data;
}

nlohmann::json RulesToJson(const std::vector<PlantedRule>& rules) {
  nlohmann::json arr = nlohmann::json::array();
  for (const PlantedRule& r : rules) {
    arr.push_back({{"attrs", r.attrs},
                   {"codes", r.codes},
                   {"effect", r.effect == RuleEffect::kPrefer ? "prefer" : "repulse"},
                   {"strength", r.strength}});
  }
  return arr;
}

std::vector<PlantedRule> RulesFromJson(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("rules must be a JSON array");
  std::vector<PlantedRule> rules;
  for (const auto& item : j) {
    PlantedRule r;
    r.attrs = item.at("attrs").get<std::vector<std::size_t>>();
    r.codes = item.at("codes").get<std::vector<int>>();
    const auto effect = item.at("effect").get<std::string>();
    if (effect == "prefer") {
      r.effect = RuleEffect::kPrefer;
    } else if (effect == "repulse") {
      r.effect = RuleEffect::kRepulse;
    } else {
      throw std::invalid_argument("rule effect must be prefer or repulse, got " + effect);
    }
    r.strength = item.at("strength").get<double>();
    rules.push_back(std::move(r));
  }
  return rules;
}

SyntheticSpec SyntheticSpecFromJson(const nlohmann::json& j) {
  SyntheticSpec spec;
  spec.num_attributes = j.at("L").get<std::size_t>();
  const auto& vocab = j.at("vocab_sizes");
  if (vocab.is_number()) {
    spec.vocab_sizes.assign(spec.num_attributes, vocab.get<int>());
  } else {
    spec.vocab_sizes = vocab.get<std::vector<int>>();
  }
  spec.users_per_side = j.at("users_per_side").get<std::size_t>();
  spec.candidate_pairs = j.at("candidate_pairs").get<std::size_t>();
  spec.base_probability = j.value("base_probability", 0.3);
  spec.rules = RulesFromJson(j.value("rules", nlohmann::json::array()));
  spec.seed = j.value("seed", std::uint64_t{1});
  spec.Validate();
  return spec;
}

nlohmann::json SyntheticSpecToJson(const SyntheticSpec& spec) {
  return {{"L", spec.num_attributes},
          {"vocab_sizes", spec.vocab_sizes},
          {"users_per_side", spec.users_per_side},
          {"candidate_pairs", spec.candidate_pairs},
          {"base_probability", spec.base_probability},
          {"rules", RulesToJson(spec.rules)},
          {"seed", spec.seed}};
}

void WriteSyntheticData(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SaveGraph(data.graph, dir / "users.csv", dir / "edges.csv");
  std::ofstream out(dir / "ground_truth.json");
  if (!out) throw DataError("cannot write " + (dir / "ground_truth.json").string());
  out << RulesToJson(data.ground_truth).dump(2) << '\n';
}

}  // namespace rrcn
