#include "rrcn/embedding.h"

#include <cmath>

#include "rrcn/ops.h"

namespace rrcn {
namespace {

std::vector<std::size_t> Offsets(const std::vector<int>& vocab_sizes) {
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (int v : vocab_sizes) {
    if (v <= 0) throw std::invalid_argument("embedding: vocab sizes must be positive");
    offsets.push_back(total);
    total += static_cast<std::size_t>(v);
  }
  return offsets;
}

Tensor UniformTensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = UniformRange(rng, -bound, bound);
  return t;
}

}  // namespace

EmbeddingTable EmbeddingTable::Zeros(const std::vector<int>& vocab_sizes, std::size_t d) {
  EmbeddingTable table;
  table.vocab_sizes = vocab_sizes;
  table.offsets = Offsets(vocab_sizes);
  table.d = d;
  std::size_t rows = 0;
  for (int v : vocab_sizes) rows += static_cast<std::size_t>(v);
  table.weights = Tensor(Shape{rows, d});
  return table;
}

EmbeddingTable EmbeddingTable::Random(const std::vector<int>& vocab_sizes, std::size_t d, Rng& rng) {
  EmbeddingTable table = Zeros(vocab_sizes, d);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& v : table.weights.values()) v = UniformRange(rng, -bound, bound);
  return table;
}

std::vector<std::size_t> EmbeddingTable::RowsFor(const User& user) const {
  if (user.attributes.size() != vocab_sizes.size()) {
    throw DataError("embed: user " + std::to_string(user.id) + " has " +
                    std::to_string(user.attributes.size()) + " attributes, table has " +
                    std::to_string(vocab_sizes.size()) + " slots");
  }
  std::vector<std::size_t> rows(vocab_sizes.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    const int code = user.attributes[a];
    if (code < 0 || code >= vocab_sizes[a]) {
      throw DataError("embed: code " + std::to_string(code) + " out of vocabulary for slot " +
                      std::to_string(a) + " (user " + std::to_string(user.id) + ")");
    }
    rows[a] = offsets[a] + static_cast<std::size_t>(code);
  }
  return rows;
}

SoftAttentionParams SoftAttentionParams::Zeros(std::size_t L, std::size_t d, std::size_t l1) {
  return {Tensor(Shape{L * d, l1}), Tensor(Shape{l1}), Tensor(Shape{l1, 1}), Tensor(Shape{1})};
}

SoftAttentionParams SoftAttentionParams::Random(std::size_t L, std::size_t d, std::size_t l1, Rng& rng) {
  SoftAttentionParams p = Zeros(L, d, l1);
  p.w1 = UniformTensor({L * d, l1}, 1.0 / std::sqrt(static_cast<double>(L * d)), rng);
  p.w2 = UniformTensor({l1, 1}, 1.0 / std::sqrt(static_cast<double>(l1)), rng);
  return p;
}

AttentionVars BindAttention(Tape& tape, const SoftAttentionParams& params) {
  return {tape.Leaf(params.w1), tape.Leaf(params.b1), tape.Leaf(params.w2), tape.Leaf(params.b2)};
}

Var EmbedUser(Var table_var, const EmbeddingTable& table, const User& user) {
  return GatherRows(table_var, table.RowsFor(user));
}

Var EmbedMembers(Var table_var, const EmbeddingTable& table, std::span<const User* const> members) {
  if (members.empty()) throw std::invalid_argument("embed_members: empty member list");
  std::vector<std::size_t> rows;
  rows.reserve(members.size() * table.num_slots());
  for (const User* u : members) {
    const auto r = table.RowsFor(*u);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return Reshape(GatherRows(table_var, rows), Shape{members.size(), table.num_slots() * table.d});
}

Var AttentionScores(Var members, const AttentionVars& p) {
  Var hidden = Tanh(Add(MatMul(members, p.w1), p.b1));
  return Add(MatMul(hidden, p.w2), p.b2);
}

Var AttentionWeights(Var members, const AttentionVars& params) {
  return Softmax(AttentionScores(members, params), 0);
}

Var AggregateSet(Var members, Var alpha, std::size_t L, std::size_t d) {
  if (alpha.shape() != Shape{members.shape()[0], 1}) {
    throw ShapeError("aggregate_set: weights " + ShapeString(alpha.shape()) + " do not match members " +
                     ShapeString(members.shape()));
  }
  return Reshape(SumAxis(Multiply(members, alpha), 0), Shape{L, d});
}

Var EmptyAggregate(Tape& tape, std::size_t L, std::size_t d) { return tape.Leaf(Tensor(Shape{L, d})); }

Var InteractionTensor(Var chi_u, Var aggregate) {
  if (chi_u.shape() != aggregate.shape()) {
    throw ShapeError("interaction_tensor: " + ShapeString(chi_u.shape()) + " vs " +
                     ShapeString(aggregate.shape()));
  }
  return ChannelOuter(chi_u, aggregate);
}

}  // namespace rrcn
