#ifndef RRCN_EMBEDDING_H_
#define RRCN_EMBEDDING_H_

#include <span>
#include <vector>

#include "rrcn/graph.h"
#include "rrcn/rng.h"
#include "rrcn/tape.h"
#include "rrcn/tensor.h"

namespace rrcn {

// Per-slot embedding matrices stacked into one (sum of vocab) x d tensor;
// slot a occupies rows [offsets[a], offsets[a] + vocab_sizes[a]).
struct EmbeddingTable {
  std::vector<int> vocab_sizes;
  std::vector<std::size_t> offsets;
  std::size_t d = 0;
  Tensor weights;

  // Uniform in [-1/sqrt(d), 1/sqrt(d)].
  static EmbeddingTable Random(const std::vector<int>& vocab_sizes, std::size_t d, Rng& rng);
  static EmbeddingTable Zeros(const std::vector<int>& vocab_sizes, std::size_t d);

  std::size_t num_slots() const { return vocab_sizes.size(); }
  // Table rows holding the user's codes; throws DataError on a code outside
  // the slot vocabulary.
  std::vector<std::size_t> RowsFor(const User& user) const;
};

// mu = W2^T tanh(W1^T x + b1) + b2 for a flattened member x of length L*d.
struct SoftAttentionParams {
  Tensor w1;  // (L*d) x l1
  Tensor b1;  // l1
  Tensor w2;  // l1 x 1
  Tensor b2;  // 1

  static SoftAttentionParams Random(std::size_t L, std::size_t d, std::size_t l1, Rng& rng);
  static SoftAttentionParams Zeros(std::size_t L, std::size_t d, std::size_t l1);
};

struct AttentionVars {
  Var w1, b1, w2, b2;
};

AttentionVars BindAttention(Tape& tape, const SoftAttentionParams& params);

// chi: L x d.
Var EmbedUser(Var table_var, const EmbeddingTable& table, const User& user);

// Members stacked as M x (L*d), one flattened chi per row.
Var EmbedMembers(Var table_var, const EmbeddingTable& table, std::span<const User* const> members);

// Unnormalised scores mu, M x 1.
Var AttentionScores(Var members, const AttentionVars& params);
// Softmax of the scores over the member set, M x 1.
Var AttentionWeights(Var members, const AttentionVars& params);

// sum_i alpha_i * chi_i reshaped to L x d.
Var AggregateSet(Var members, Var alpha, std::size_t L, std::size_t d);
// Zero L x d aggregate for an empty member set.
Var EmptyAggregate(Tape& tape, std::size_t L, std::size_t d);

// H(i, j, l) = chi_u(i, l) * X(j, l).
Var InteractionTensor(Var chi_u, Var aggregate);

}  // namespace rrcn

#endif  // RRCN_EMBEDDING_H_
