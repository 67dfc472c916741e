#include "rrcn/model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rrcn/ops.h"

namespace rrcn {
namespace {

Tensor UniformTensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = UniformRange(rng, -bound, bound);
  return t;
}

std::vector<const User*> Members(const AttributedBipartiteGraph& graph, const std::vector<UserId>& ids,
                                 UserId excluded, bool exclude) {
  std::vector<const User*> out;
  out.reserve(ids.size());
  for (UserId id : ids)
    if (!exclude || id != excluded) out.push_back(&graph.user(id));
  return out;
}

// Aggregates of the preferred and repulsive sets of one user.
std::pair<Var, Var> AggregatePair(const RRCNModel& model, const ModelVars& vars, Tape& tape,
                                  const std::vector<const User*>& preferred,
                                  const std::vector<const User*>& repulsive, std::size_t p_slot,
                                  std::size_t n_slot) {
  const std::size_t L = model.config.L, d = model.config.d;
  const bool shared = vars.attention.size() == 1;
  const AttentionVars& ap = vars.attention[shared ? 0 : p_slot];
  const AttentionVars& an = vars.attention[shared ? 0 : n_slot];
  Var xp, xn;
  Var mp, mn;
  if (!preferred.empty()) mp = EmbedMembers(vars.embedding, model.embedding, preferred);
  if (!repulsive.empty()) mn = EmbedMembers(vars.embedding, model.embedding, repulsive);

  if (model.config.attention_norm == AttentionNorm::kJoint && mp.valid() && mn.valid()) {
    const Var scores[] = {AttentionScores(mp, ap), AttentionScores(mn, an)};
    Var alpha = Softmax(Concat(scores, 0), 0);
    std::vector<std::size_t> p_rows(preferred.size()), n_rows(repulsive.size());
    for (std::size_t i = 0; i < p_rows.size(); ++i) p_rows[i] = i;
    for (std::size_t i = 0; i < n_rows.size(); ++i) n_rows[i] = preferred.size() + i;
    xp = AggregateSet(mp, GatherRows(alpha, p_rows), L, d);
    xn = AggregateSet(mn, GatherRows(alpha, n_rows), L, d);
  } else {
    xp = mp.valid() ? AggregateSet(mp, AttentionWeights(mp, ap), L, d) : EmptyAggregate(tape, L, d);
    xn = mn.valid() ? AggregateSet(mn, AttentionWeights(mn, an), L, d) : EmptyAggregate(tape, L, d);
  }
  return {xp, xn};
}

Var PairTerm(PairOp op, Var chi, Var kappa, std::size_t L, std::size_t d) {
  switch (op) {
    case PairOp::kRowDot:
      return Reshape(RowDot(chi, kappa), Shape{1, L});
    case PairOp::kFullDot:
      return Reshape(Sum(Multiply(chi, kappa)), Shape{1, 1});
    case PairOp::kElementwise:
      return Reshape(Multiply(chi, kappa), Shape{1, L * d});
  }
  throw std::logic_error("unknown pair op");
}

}  // namespace

const char* SlotName(std::size_t slot) {
  static const char* kNames[] = {"m_preferred", "m_repulsive", "f_preferred", "f_repulsive"};
  if (slot >= kNumSlots) throw std::out_of_range("slot out of range");
  return kNames[slot];
}

RRCNModel RRCNModel::Init(const ModelConfig& config, std::vector<std::string> attribute_names,
                          const std::vector<int>& vocab_sizes) {
  config.Validate();
  if (vocab_sizes.size() != config.L || attribute_names.size() != config.L) {
    throw std::invalid_argument("model: config L=" + std::to_string(config.L) + " but the data has " +
                                std::to_string(vocab_sizes.size()) + " attributes");
  }
  const std::size_t L = config.L, d = config.d;
  Rng rng(MixSeed(config.seed, 101));
  RRCNModel m;
  m.config = config;
  m.attribute_names = std::move(attribute_names);
  m.embedding = EmbeddingTable::Random(vocab_sizes, d, rng);
  const std::size_t n_att = config.shared_attention ? 1 : kNumSlots;
  for (std::size_t i = 0; i < n_att; ++i) m.attention.push_back(SoftAttentionParams::Random(L, d, config.l1, rng));
  for (std::size_t k : config.kernel_sizes) m.kernels.push_back(KernelParams::Random(k, d, rng));
  m.wd = UniformTensor({d, 1}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  const std::size_t width = m.FeatureWidth(), hidden = config.fc_hidden;
  m.fc1_w = UniformTensor({width, hidden}, 1.0 / std::sqrt(static_cast<double>(width)), rng);
  m.fc1_b = Tensor(Shape{hidden});
  m.fc2_w = UniformTensor({hidden, 1}, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  m.fc2_b = Tensor(Shape{1});
  if (config.mode == ConvMode::kReinforced) {
    Rng policy_rng(MixSeed(config.seed, 202));
    for (std::size_t k : config.kernel_sizes) m.policies.push_back(PolicyParams::Init(L, d, k, config.l1, policy_rng));
  }
  return m;
}

std::size_t RRCNModel::FeatureWidth() const {
  switch (config.pair_op) {
    case PairOp::kRowDot:
      return kNumSlots * config.L;
    case PairOp::kFullDot:
      return kNumSlots;
    case PairOp::kElementwise:
      return kNumSlots * config.L * config.d;
  }
  throw std::logic_error("unknown pair op");
}

const SoftAttentionParams& RRCNModel::AttentionFor(std::size_t slot) const {
  return attention.size() == 1 ? attention[0] : attention.at(slot);
}

std::vector<std::pair<std::string, Tensor*>> RRCNModel::NamedParameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("embedding", &embedding.weights);
  for (std::size_t i = 0; i < attention.size(); ++i) {
    const std::string p = "attention" + std::to_string(i) + ".";
    out.emplace_back(p + "w1", &attention[i].w1);
    out.emplace_back(p + "b1", &attention[i].b1);
    out.emplace_back(p + "w2", &attention[i].w2);
    out.emplace_back(p + "b2", &attention[i].b2);
  }
  for (std::size_t i = 0; i < kernels.size(); ++i)
    out.emplace_back("kernel" + std::to_string(kernels[i].k), &kernels[i].weights);
  out.emplace_back("wd", &wd);
  out.emplace_back("fc1_w", &fc1_w);
  out.emplace_back("fc1_b", &fc1_b);
  out.emplace_back("fc2_w", &fc2_w);
  out.emplace_back("fc2_b", &fc2_b);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> RRCNModel::NamedParameters() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<RRCNModel*>(this)->NamedParameters()) out.emplace_back(name, t);
  return out;
}

bool RRCNModel::operator==(const RRCNModel& other) const {
  if (!(config == other.config) || attribute_names != other.attribute_names ||
      embedding.vocab_sizes != other.embedding.vocab_sizes || policies.size() != other.policies.size()) {
    return false;
  }
  const auto a = NamedParameters(), b = other.NamedParameters();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].first != b[i].first || !(*a[i].second == *b[i].second)) return false;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const PolicyParams &p = policies[i], &q = other.policies[i];
    if (p.k != q.k || !(p.w1 == q.w1) || !(p.b1 == q.b1) || !(p.w2 == q.w2) || p.baseline != q.baseline) return false;
  }
  return true;
}

std::vector<std::pair<std::string, Var*>> ModelVars::Named() {
  std::vector<std::pair<std::string, Var*>> out;
  out.emplace_back("embedding", &embedding);
  for (std::size_t i = 0; i < attention.size(); ++i) {
    const std::string p = "attention" + std::to_string(i) + ".";
    out.emplace_back(p + "w1", &attention[i].w1);
    out.emplace_back(p + "b1", &attention[i].b1);
    out.emplace_back(p + "w2", &attention[i].w2);
    out.emplace_back(p + "b2", &attention[i].b2);
  }
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    const std::size_t k = kernels[i].shape()[0];
    out.emplace_back("kernel" + std::to_string(k), &kernels[i]);
  }
  out.emplace_back("wd", &wd);
  out.emplace_back("fc1_w", &fc1_w);
  out.emplace_back("fc1_b", &fc1_b);
  out.emplace_back("fc2_w", &fc2_w);
  out.emplace_back("fc2_b", &fc2_b);
  return out;
}

ModelVars BindModel(Tape& tape, const RRCNModel& model) {
  ModelVars v;
  v.embedding = tape.Leaf(model.embedding.weights);
  for (const auto& a : model.attention) v.attention.push_back(BindAttention(tape, a));
  for (const auto& k : model.kernels) v.kernels.push_back(tape.Leaf(k.weights));
  v.wd = tape.Leaf(model.wd);
  v.fc1_w = tape.Leaf(model.fc1_w);
  v.fc1_b = tape.Leaf(model.fc1_b);
  v.fc2_w = tape.Leaf(model.fc2_w);
  v.fc2_b = tape.Leaf(model.fc2_b);
  return v;
}

PairForward ForwardFeatures(const RRCNModel& model, const ModelVars& vars, const AttributedBipartiteGraph& graph,
                            UserId m, UserId f, Rng& rng) {
  const ModelConfig& cfg = model.config;
  const std::size_t L = cfg.L, d = cfg.d;
  const User& um = graph.user(m);
  const User& uf = graph.user(f);
  if (um.side != Side::kM || uf.side != Side::kF) {
    throw DataError("forward_pair: expected an (M, F) pair, got (" + std::to_string(m) + ", " +
                    std::to_string(f) + ")");
  }
  Tape& tape = *vars.embedding.tape();
  Var chi_m = EmbedUser(vars.embedding, model.embedding, um);
  Var chi_f = EmbedUser(vars.embedding, model.embedding, uf);

  const InteractionSets sm = DeriveInteractionSets(graph, m);
  const InteractionSets sf = DeriveInteractionSets(graph, f);
  const bool ex = cfg.exclude_target;
  auto [x_mp, x_mn] = AggregatePair(model, vars, tape, Members(graph, sm.preferred, f, ex),
                                    Members(graph, sm.repulsive, f, ex), kMPreferred, kMRepulsive);
  auto [x_fp, x_fn] = AggregatePair(model, vars, tape, Members(graph, sf.preferred, m, ex),
                                    Members(graph, sf.repulsive, m, ex), kFPreferred, kFRepulsive);
  const Var H[kNumSlots] = {InteractionTensor(chi_m, x_mp), InteractionTensor(chi_m, x_mn),
                            InteractionTensor(chi_f, x_fp), InteractionTensor(chi_f, x_fn)};

  PairForward out;
  Var kappa[kNumSlots];
  for (std::size_t s = 0; s < kNumSlots; ++s) {
    std::vector<Var> maps;
    for (std::size_t ki = 0; ki < cfg.kernel_sizes.size(); ++ki) {
      const std::size_t k = cfg.kernel_sizes[ki];
      ConvLayerOutput conv;
      if (cfg.mode == ConvMode::kReinforced) {
        PolicySelector selector(PolicyLogits(H[s].value(), model.policies[ki]), k, rng);
        conv = ConvLayer(H[s], vars.kernels[ki], selector, cfg.channel_mode);
      } else {
        FixedPatternSelector selector(cfg.mode, L, k, cfg.dilation, &rng);
        conv = ConvLayer(H[s], vars.kernels[ki], selector, cfg.channel_mode);
      }
      maps.push_back(RowMaxPool(conv.output, cfg.pool_axis));
      out.convs.push_back({s, ki, H[s], conv.output, std::move(conv.traces)});
    }
    Var weights;
    kappa[s] = MultiDimAttention(maps, vars.wd, &weights);
    out.attention_weights.push_back(weights);
  }
  // m against what f prefers and rejects, then f against m's sets.
  const Var terms[] = {PairTerm(cfg.pair_op, chi_m, kappa[kFPreferred], L, d),
                       PairTerm(cfg.pair_op, chi_m, kappa[kFRepulsive], L, d),
                       PairTerm(cfg.pair_op, chi_f, kappa[kMPreferred], L, d),
                       PairTerm(cfg.pair_op, chi_f, kappa[kMRepulsive], L, d)};
  out.features = Concat(terms, 1);
  return out;
}

Var ScoreHead(const ModelVars& vars, Var features) {
  Var hidden = Tanh(Add(MatMul(features, vars.fc1_w), vars.fc1_b));
  return Sigmoid(Add(MatMul(hidden, vars.fc2_w), vars.fc2_b));
}

double ScorePair(const RRCNModel& model, const AttributedBipartiteGraph& graph, UserId m, UserId f, Rng& rng) {
  Tape tape;
  const ModelVars vars = BindModel(tape, model);
  PairForward fw = ForwardFeatures(model, vars, graph, m, f, rng);
  return ScoreHead(vars, fw.features).value().item();
}

}  // namespace rrcn
