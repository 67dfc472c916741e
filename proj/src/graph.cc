#include "rrcn/graph.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rrcn/rng.h"

namespace rrcn {

char SideChar(Side side) { return side == Side::kM ? 'M' : 'F'; }

AttributedBipartiteGraph::AttributedBipartiteGraph(std::vector<std::string> attribute_names,
                                                   std::vector<User> users,
                                                   std::vector<Edge> edges)
    : attribute_names_(std::move(attribute_names)),
      users_(std::move(users)),
      edges_(std::move(edges)) {
  const std::size_t L = attribute_names_.size();
  vocab_sizes_.assign(L, 1);
  for (std::size_t i = 0; i < users_.size(); ++i) {
    const User& u = users_[i];
    if (!index_.emplace(u.id, i).second) {
      throw DataError("duplicate user id " + std::to_string(u.id));
    }
    if (u.attributes.size() != L) {
      throw DataError("user " + std::to_string(u.id) + " has " +
                      std::to_string(u.attributes.size()) + " attributes, expected " +
                      std::to_string(L));
    }
    for (std::size_t a = 0; a < L; ++a) {
      if (u.attributes[a] < 0) {
        throw DataError("user " + std::to_string(u.id) + " has negative code in slot " +
                        std::to_string(a));
      }
      vocab_sizes_[a] = std::max(vocab_sizes_[a], u.attributes[a] + 1);
    }
  }
  std::sort(edges_.begin(), edges_.end());
  out_.assign(users_.size(), {});
  in_.assign(users_.size(), {});
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& edge = edges_[e];
    if (e > 0 && edges_[e - 1] == edge) {
      throw DataError("duplicate edge " + std::to_string(edge.src) + "->" + std::to_string(edge.dst));
    }
    if (edge.src == edge.dst) throw DataError("self-loop on user " + std::to_string(edge.src));
    auto s = index_.find(edge.src);
    auto d = index_.find(edge.dst);
    if (s == index_.end() || d == index_.end()) {
      throw DataError("edge " + std::to_string(edge.src) + "->" + std::to_string(edge.dst) +
                      " references an unknown user");
    }
    if (users_[s->second].side == users_[d->second].side) {
      throw DataError("side violation: edge " + std::to_string(edge.src) + "->" +
                      std::to_string(edge.dst) + " joins two " +
                      std::string(1, SideChar(users_[s->second].side)) + " users");
    }
    out_[s->second].push_back(edge.dst);
    in_[d->second].push_back(edge.src);
  }
  for (auto& v : in_) std::sort(v.begin(), v.end());
}

std::size_t AttributedBipartiteGraph::IndexOf(UserId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown user id " + std::to_string(id));
  return it->second;
}

const User& AttributedBipartiteGraph::user(UserId id) const { return users_[IndexOf(id)]; }

bool AttributedBipartiteGraph::has_edge(UserId src, UserId dst) const {
  auto it = index_.find(src);
  if (it == index_.end()) return false;
  const auto& out = out_[it->second];
  return std::binary_search(out.begin(), out.end(), dst);
}

const std::vector<UserId>& AttributedBipartiteGraph::out_neighbors(UserId id) const {
  return out_[IndexOf(id)];
}

const std::vector<UserId>& AttributedBipartiteGraph::in_neighbors(UserId id) const {
  return in_[IndexOf(id)];
}

std::vector<std::pair<UserId, UserId>> AttributedBipartiteGraph::ReciprocalPairs() const {
  std::vector<std::pair<UserId, UserId>> pairs;
  for (const Edge& e : edges_) {
    if (user(e.src).side == Side::kM && has_edge(e.dst, e.src)) pairs.emplace_back(e.src, e.dst);
  }
  return pairs;
}

std::vector<UserId> AttributedBipartiteGraph::UsersOnSide(Side side) const {
  std::vector<UserId> ids;
  for (const User& u : users_)
    if (u.side == side) ids.push_back(u.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::size_t AttributedBipartiteGraph::AttributeIndex(const std::string& name) const {
  auto it = std::find(attribute_names_.begin(), attribute_names_.end(), name);
  if (it == attribute_names_.end()) throw DataError("unknown attribute name '" + name + "'");
  return static_cast<std::size_t>(it - attribute_names_.begin());
}

InteractionSets DeriveInteractionSets(const AttributedBipartiteGraph& graph, UserId u) {
  InteractionSets sets;
  sets.preferred = graph.out_neighbors(u);
  for (UserId v : graph.in_neighbors(u)) {
    if (!graph.has_edge(u, v)) sets.repulsive.push_back(v);
  }
  return sets;
}

DatasetSplit BuildPairDataset(const AttributedBipartiteGraph& graph, std::uint64_t seed) {
  const auto positives = graph.ReciprocalPairs();
  if (positives.empty()) throw DataError("build_pair_dataset: graph has no reciprocal links");
  Rng rng(seed);

  // One-directional pairs, canonicalised to (M, F).
  std::set<std::pair<UserId, UserId>> one_way;
  for (const Edge& e : graph.edges()) {
    if (graph.has_edge(e.dst, e.src)) continue;
    if (graph.user(e.src).side == Side::kM) {
      one_way.emplace(e.src, e.dst);
    } else {
      one_way.emplace(e.dst, e.src);
    }
  }
  std::vector<std::pair<UserId, UserId>> candidates(one_way.begin(), one_way.end());
  Shuffle(candidates, rng);
  std::vector<std::pair<UserId, UserId>> negatives(
      candidates.begin(),
      candidates.begin() + static_cast<std::ptrdiff_t>(std::min(candidates.size(), positives.size())));

  if (negatives.size() < positives.size()) {
    const auto ms = graph.UsersOnSide(Side::kM);
    const auto fs = graph.UsersOnSide(Side::kF);
    const std::size_t needed = positives.size() - negatives.size();
    std::vector<std::pair<UserId, UserId>> free_pairs;
    for (UserId m : ms)
      for (UserId f : fs)
        if (!graph.has_edge(m, f) && !graph.has_edge(f, m)) free_pairs.emplace_back(m, f);
    if (free_pairs.size() < needed) {
      throw DataError("build_pair_dataset: not enough non-reciprocal pairs to balance labels");
    }
    Shuffle(free_pairs, rng);
    negatives.insert(negatives.end(), free_pairs.begin(),
                     free_pairs.begin() + static_cast<std::ptrdiff_t>(needed));
  }

  auto shuffled_positives = positives;
  Shuffle(shuffled_positives, rng);

  DatasetSplit split;
  split.train.split = SplitTag::kTrain;
  split.test.split = SplitTag::kTest;
  auto assign = [&](const std::vector<std::pair<UserId, UserId>>& pairs, int label) {
    const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(pairs.size())));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      LabeledPair p{pairs[i].first, pairs[i].second, label};
      (i < n_train ? split.train : split.test).pairs.push_back(p);
    }
  };
  assign(shuffled_positives, 1);
  assign(negatives, 0);
  Shuffle(split.train.pairs, rng);
  Shuffle(split.test.pairs, rng);
  return split;
}

namespace {

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::int64_t ParseInt(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    throw DataError(where + ": expected an integer, got '" + text + "'");
  }
  if (used != text.size()) throw DataError(where + ": expected an integer, got '" + text + "'");
  return v;
}

bool ReadLine(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

AttributedBipartiteGraph LoadGraph(const std::filesystem::path& users_path,
                                   const std::filesystem::path& edges_path) {
  std::ifstream users_in(users_path);
  if (!users_in) throw DataError("cannot open " + users_path.string());
  std::string line;
  if (!ReadLine(users_in, line)) throw DataError(users_path.string() + ": missing header");
  const auto header = SplitCsv(line);
  if (header.size() < 2 || header[0] != "user_id" || header[1] != "side") {
    throw DataError(users_path.string() + ":1: header must start with user_id,side");
  }
  std::vector<std::string> names(header.begin() + 2, header.end());
  std::vector<User> users;
  std::size_t line_no = 1;
  while (ReadLine(users_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = users_path.string() + ":" + std::to_string(line_no);
    const auto fields = SplitCsv(line);
    if (fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " columns, got " +
                      std::to_string(fields.size()));
    }
    User u;
    u.id = ParseInt(fields[0], where);
    if (fields[1] == "M") {
      u.side = Side::kM;
    } else if (fields[1] == "F") {
      u.side = Side::kF;
    } else {
      throw DataError(where + ": side must be M or F, got '" + fields[1] + "'");
    }
    for (std::size_t a = 2; a < fields.size(); ++a) {
      const auto code = ParseInt(fields[a], where);
      if (code < 0) throw DataError(where + ": negative attribute code");
      u.attributes.push_back(static_cast<int>(code));
    }
    users.push_back(std::move(u));
  }

  std::ifstream edges_in(edges_path);
  if (!edges_in) throw DataError("cannot open " + edges_path.string());
  if (!ReadLine(edges_in, line) || SplitCsv(line) != std::vector<std::string>{"src_id", "dst_id"}) {
    throw DataError(edges_path.string() + ":1: header must be src_id,dst_id");
  }
  std::unordered_map<UserId, Side> sides;
  for (const User& u : users) sides[u.id] = u.side;
  std::vector<Edge> edges;
  line_no = 1;
  while (ReadLine(edges_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = edges_path.string() + ":" + std::to_string(line_no);
    const auto fields = SplitCsv(line);
    if (fields.size() != 2) {
      throw DataError(where + ": expected 2 columns, got " + std::to_string(fields.size()));
    }
    Edge e{ParseInt(fields[0], where), ParseInt(fields[1], where)};
    auto s = sides.find(e.src);
    auto d = sides.find(e.dst);
    if (s == sides.end()) throw DataError(where + ": unknown user id " + fields[0]);
    if (d == sides.end()) throw DataError(where + ": unknown user id " + fields[1]);
    if (s->second == d->second) {
      throw DataError(where + ": side violation, both users are " +
                      std::string(1, SideChar(s->second)));
    }
    edges.push_back(e);
  }
  try {
    return AttributedBipartiteGraph(std::move(names), std::move(users), std::move(edges));
  } catch (const DataError& e) {
    throw DataError(users_path.string() + ": " + e.what());
  }
}

void SaveGraph(const AttributedBipartiteGraph& graph, const std::filesystem::path& users_path,
               const std::filesystem::path& edges_path) {
  std::ofstream users_out(users_path);
  if (!users_out) throw DataError("cannot write " + users_path.string());
  users_out << "user_id,side";
  for (const auto& name : graph.attribute_names()) users_out << ',' << name;
  users_out << '\n';
  for (const User& u : graph.users()) {
    users_out << u.id << ',' << SideChar(u.side);
    for (int code : u.attributes) users_out << ',' << code;
    users_out << '\n';
  }
  std::ofstream edges_out(edges_path);
  if (!edges_out) throw DataError("cannot write " + edges_path.string());
  edges_out << "src_id,dst_id\n";
  for (const Edge& e : graph.edges()) edges_out << e.src << ',' << e.dst << '\n';
}

void SavePairs(const PairDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "m_id,f_id,label\n";
  for (const LabeledPair& p : data.pairs) out << p.m << ',' << p.f << ',' << p.label << '\n';
}

}  // namespace rrcn
