#include "rrcn/policy.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "rrcn/ops.h"

namespace rrcn {
namespace {

void MaskedSoftmax(std::span<const double> logits, std::span<const char> allowed, std::span<double> out) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (allowed[i]) mx = std::max(mx, logits[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = allowed[i] ? std::exp(logits[i] - mx) : 0.0;
    total += out[i];
  }
  for (double& v : out) v /= total;
}

// Scratch weights use a negative value for entries that are out of play
// (masked or already drawn); zero means available but underflowed.
constexpr double kRemoved = -1.0;
constexpr double kTiny = 1e-250;

double Total(std::span<const double> w) {
  double total = 0.0;
  for (double v : w)
    if (v > 0) total += v;
  return total;
}

// Recomputes the available weights relative to their own largest logit.
void Rescale(std::span<const double> z, std::span<double> w) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] >= 0) mx = std::max(mx, z[i]);
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] >= 0) w[i] = std::exp(z[i] - mx);
}

// Row f holds exp(z - max_{j != f} z_j) with entry f removed, so masking
// never leaves an all-underflowed support.
std::vector<double> MaskedWeightTable(std::span<const double> z) {
  const std::size_t L = z.size();
  std::size_t top1 = 0;
  for (std::size_t i = 1; i < L; ++i)
    if (z[i] > z[top1]) top1 = i;
  std::size_t top2 = top1 == 0 ? 1 : 0;
  for (std::size_t i = 0; i < L; ++i)
    if (i != top1 && z[i] > z[top2]) top2 = i;
  std::vector<double> table(L * L);
  for (std::size_t f = 0; f < L; ++f) {
    const double mx = z[f == top1 ? top2 : top1];
    for (std::size_t i = 0; i < L; ++i) table[f * L + i] = i == f ? kRemoved : std::exp(z[i] - mx);
  }
  return table;
}

// Gradient of the sequential draw log-probability for one half (rows or
// cols), accumulated into `grad`: sum over draws of onehot(c) - p_remaining.
void AccumulateDrawGradient(std::span<const double> z, std::span<const double> table, std::size_t fixed,
                            std::span<const std::size_t> drawn, std::span<double> grad, std::span<double> scratch) {
  const std::size_t L = z.size();
  std::copy_n(table.begin() + fixed * L, L, scratch.begin());
  double total = Total(scratch);
  for (std::size_t c : drawn) {
    if (total < kTiny) {
      Rescale(z, scratch);
      total = Total(scratch);
    }
    const double inv = 1.0 / total;
    for (std::size_t i = 0; i < L; ++i)
      if (scratch[i] > 0) grad[i] -= scratch[i] * inv;
    grad[c] += 1.0;
    if (scratch[c] > 0) total -= scratch[c];
    scratch[c] = kRemoved;
  }
}

// Sequential draws without replacement from the unnormalised weights in
// `w`, which is consumed.
void DrawFromWeights(std::span<const double> z, std::span<double> w, std::size_t count, Rng& rng,
                     double& log_prob, std::vector<std::size_t>& drawn) {
  const auto support = static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [](double v) { return v >= 0; }));
  if (support < count) {
    throw std::invalid_argument("sample_action: need " + std::to_string(count) + " draws from a support of " +
                                std::to_string(support));
  }
  drawn.reserve(drawn.size() + count);
  for (std::size_t t = 0; t < count; ++t) {
    double total = Total(w);
    if (total < kTiny) {
      Rescale(z, w);
      total = Total(w);
    }
    const double u = Uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = w.size();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] <= 0) continue;
      acc += w[i];
      pick = i;
      if (u < acc) break;
    }
    log_prob += std::log(w[pick] / total);
    drawn.push_back(pick);
    w[pick] = kRemoved;
  }
}

std::size_t SlotOf(const std::vector<std::size_t>& sorted, std::size_t index) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), index);
  if (it == sorted.end() || *it != index) throw std::invalid_argument("reward: sampled index missing from trace");
  return static_cast<std::size_t>(it - sorted.begin());
}

}  // namespace

PolicyParams PolicyParams::Zeros(std::size_t L, std::size_t d, std::size_t k, std::size_t l1) {
  PolicyParams p;
  p.L = L;
  p.d = d;
  p.k = k;
  p.w1 = Tensor(Shape{L * L * d, l1});
  p.b1 = Tensor(Shape{l1});
  p.w2 = Tensor(Shape{l1, 2 * L});
  return p;
}

PolicyParams PolicyParams::Init(std::size_t L, std::size_t d, std::size_t k, std::size_t l1, Rng& rng) {
  PolicyParams p = Zeros(L, d, k, l1);
  const double bound = 1.0 / std::sqrt(static_cast<double>(L * L * d));
  for (double& v : p.w1.values()) v = UniformRange(rng, -bound, bound);
  return p;
}

std::vector<double> PolicyLogits(const Tensor& H, const PolicyParams& params) {
  const std::size_t n = params.L * params.L * params.d;
  if (H.size() != n) {
    throw ShapeError("policy_distribution: tensor " + ShapeString(H.shape()) + " does not match policy for L=" +
                     std::to_string(params.L) + ", d=" + std::to_string(params.d));
  }
  const std::size_t hidden = params.hidden();
  std::vector<double> h(params.b1.values().begin(), params.b1.values().end());
  const double* w1 = params.w1.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = H[i];
    if (x == 0.0) continue;
    const double* row = w1 + i * hidden;
    for (std::size_t j = 0; j < hidden; ++j) h[j] += x * row[j];
  }
  for (double& v : h) v = std::tanh(v);
  const std::size_t out = 2 * params.L;
  std::vector<double> logits(out, 0.0);
  for (std::size_t j = 0; j < hidden; ++j)
    for (std::size_t o = 0; o < out; ++o) logits[o] += h[j] * params.w2(j, o);
  return logits;
}

RowColDistribution MaskedDistribution(std::span<const double> logits, std::size_t x, std::size_t y) {
  if (logits.size() % 2 != 0) throw ShapeError("policy_distribution: logits must have even length");
  const std::size_t L = logits.size() / 2;
  if (x >= L || y >= L) throw std::out_of_range("policy_distribution: position out of range");
  RowColDistribution dist{std::vector<double>(L), std::vector<double>(L)};
  std::vector<char> allowed(L, 1);
  allowed[x] = 0;
  MaskedSoftmax(logits.subspan(0, L), allowed, dist.rows);
  allowed[x] = 1;
  allowed[y] = 0;
  MaskedSoftmax(logits.subspan(L, L), allowed, dist.cols);
  return dist;
}

RowColDistribution PolicyDistribution(const Tensor& H, std::size_t x, std::size_t y, const PolicyParams& params) {
  const auto logits = PolicyLogits(H, params);
  return MaskedDistribution(logits, x, y);
}

std::vector<std::size_t> SampleWithoutReplacement(std::span<const double> probs, std::size_t count, Rng& rng,
                                                  double& log_prob) {
  std::vector<double> w(probs.size()), z(probs.size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0) || !std::isfinite(probs[i])) throw std::invalid_argument("sample_action: invalid probability");
    w[i] = probs[i] > 0 ? probs[i] : kRemoved;
    if (probs[i] > 0) z[i] = std::log(probs[i]);
  }
  std::vector<std::size_t> drawn;
  DrawFromWeights(z, w, count, rng, log_prob, drawn);
  return drawn;
}

SampledAction SampleAction(const RowColDistribution& dist, std::size_t k, Rng& rng) {
  if (k < 2) throw std::invalid_argument("sample_action: k must be at least 2");
  SampledAction a;
  a.rows = SampleWithoutReplacement(dist.rows, k - 1, rng, a.log_prob);
  a.cols = SampleWithoutReplacement(dist.cols, k - 1, rng, a.log_prob);
  return a;
}

std::vector<double> LogProbLogitGradient(std::span<const double> logits, const SelectionTrace& action) {
  const std::size_t L = logits.size() / 2;
  const auto rz = logits.subspan(0, L), cz = logits.subspan(L, L);
  std::vector<double> grad(2 * L, 0.0), scratch(L);
  AccumulateDrawGradient(rz, MaskedWeightTable(rz), action.x, action.sampled_rows, std::span(grad).subspan(0, L),
                         scratch);
  AccumulateDrawGradient(cz, MaskedWeightTable(cz), action.y, action.sampled_cols, std::span(grad).subspan(L, L),
                         scratch);
  return grad;
}

PolicySelector::PolicySelector(std::vector<double> logits, std::size_t k, Rng& rng)
    : logits_(std::move(logits)), L_(logits_.size() / 2), k_(k), rng_(rng) {
  if (k < 2 || k > L_) throw std::invalid_argument("PolicySelector: need 2 <= k <= L");
  row_weights_ = MaskedWeightTable(std::span<const double>(logits_).subspan(0, L_));
  col_weights_ = MaskedWeightTable(std::span<const double>(logits_).subspan(L_, L_));
  scratch_.resize(L_);
}

SelectionTrace PolicySelector::Select(std::size_t x, std::size_t y) {
  if (x >= L_ || y >= L_) throw std::out_of_range("policy selector: position out of range");
  SelectionTrace t;
  t.x = x;
  t.y = y;
  const std::span<const double> z(logits_);
  std::copy_n(row_weights_.begin() + x * L_, L_, scratch_.begin());
  DrawFromWeights(z.subspan(0, L_), scratch_, k_ - 1, rng_, t.log_prob, t.sampled_rows);
  std::copy_n(col_weights_.begin() + y * L_, L_, scratch_.begin());
  DrawFromWeights(z.subspan(L_, L_), scratch_, k_ - 1, rng_, t.log_prob, t.sampled_cols);
  t.rows.reserve(k_);
  t.rows = t.sampled_rows;
  t.rows.push_back(x);
  std::sort(t.rows.begin(), t.rows.end());
  t.cols.reserve(k_);
  t.cols = t.sampled_cols;
  t.cols.push_back(y);
  std::sort(t.cols.begin(), t.cols.end());
  return t;
}

double ComputeReward(const SelectionTrace& trace, const Tape& tape, Var conv_output, const Tensor& kernel,
                     const Tensor& H, ChannelMode channel_mode, RewardKind kind) {
  const Tensor& g = tape.grad(conv_output);
  const std::size_t L = g.dim(0), d = g.dim(2), k = kernel.dim(0);
  if (trace.rows.size() != k || trace.cols.size() != k) {
    throw ShapeError("compute_reward: trace does not match kernel size " + std::to_string(k));
  }
  if (trace.x >= L || trace.y >= L) throw std::out_of_range("compute_reward: position out of range");
  const bool attribution = kind == RewardKind::kAttribution;
  if (attribution && H.shape() != g.shape()) throw ShapeError("compute_reward: H does not match the conv output");
  // dL/dH'(x, y, l), folded over channels in summed mode.
  const double* up = g.values().data() + (trace.x * L + trace.y) * d;
  double folded = 0.0;
  if (channel_mode == ChannelMode::kSummed)
    for (std::size_t l = 0; l < d; ++l) folded += up[l];
  const auto upstream = [&](std::size_t l) { return channel_mode == ChannelMode::kSummed ? folded : up[l]; };
  const double* w = kernel.values().data();
  const double* h = H.values().data();

  double reward = 0.0;
  // Entry (i, j) of the support, i/j being slots in the sorted rows/cols.
  const auto term = [&](std::size_t i, std::size_t j) {
    const double* wk = w + (i * k + j) * d;
    const double* hk = h + (trace.rows[i] * L + trace.cols[j]) * d;
    double s = 0.0;
    for (std::size_t l = 0; l < d; ++l) s += upstream(l) * wk[l] * (attribution ? hk[l] : 1.0);
    return s;
  };
  for (std::size_t r : trace.sampled_rows) {
    const std::size_t slot = SlotOf(trace.rows, r);
    for (std::size_t c = 0; c < k; ++c) reward += term(slot, c);
  }
  for (std::size_t col : trace.sampled_cols) {
    const std::size_t slot = SlotOf(trace.cols, col);
    for (std::size_t r = 0; r < k; ++r) reward += term(r, slot);
  }
  return reward;
}

std::size_t EpisodeBatch::num_records() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.actions.size();
  return n;
}

double EpisodeBatch::mean_reward() const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    for (double r : g.rewards) total += r;
    n += g.rewards.size();
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

void PolicyUpdate(PolicyParams& params, const EpisodeBatch& batch, const PolicyUpdateOptions& options) {
  if (batch.num_records() == 0) throw std::invalid_argument("policy_update: empty batch");
  const std::size_t L = params.L;
  const std::size_t n = L * L * params.d;
  const std::size_t G = batch.groups.size();
  for (const auto& g : batch.groups) {
    if (g.rewards.size() != g.actions.size()) throw std::invalid_argument("policy_update: one reward per action");
    for (double r : g.rewards)
      if (!std::isfinite(r)) throw NumericError("policy_update: non-finite reward");
  }

  Tensor states(Shape{G, n});
  for (std::size_t gi = 0; gi < G; ++gi) {
    const Tensor& H = batch.groups[gi].H;
    if (H.size() != n) throw ShapeError("policy_update: state " + ShapeString(H.shape()) + " does not match policy");
    std::copy(H.values().begin(), H.values().end(), states.values().begin() + gi * n);
  }

  Tape tape;
  Var x = tape.Leaf(std::move(states));
  Var w1 = tape.Leaf(params.w1);
  Var b1 = tape.Leaf(params.b1);
  Var w2 = tape.Leaf(params.w2);
  Var logits = MatMul(Tanh(Add(MatMul(x, w1), b1)), w2);  // G x 2L

  const double baseline = options.use_baseline ? params.baseline : 0.0;
  Tensor coeff(Shape{G, 2 * L});
  const Tensor& z = logits.value();
  std::vector<double> scratch(L), scratch_grad(2 * L);
  for (std::size_t gi = 0; gi < G; ++gi) {
    std::span<const double> zg = z.values().subspan(gi * 2 * L, 2 * L);
    const auto rz = zg.subspan(0, L), cz = zg.subspan(L, L);
    const auto rw = MaskedWeightTable(rz), cw = MaskedWeightTable(cz);
    std::span<double> row_coeff(&coeff(gi, 0), L), col_coeff(&coeff(gi, L), L);
    const auto& group = batch.groups[gi];
    for (std::size_t a = 0; a < group.actions.size(); ++a) {
      const double advantage = group.rewards[a] - baseline;
      if (advantage == 0.0) continue;
      // Accumulate advantage * dlogP/dz without a temporary per action.
      std::vector<double>& tmp = scratch_grad;
      std::fill(tmp.begin(), tmp.end(), 0.0);
      const SelectionTrace& t = group.actions[a];
      AccumulateDrawGradient(rz, rw, t.x, t.sampled_rows, std::span(tmp).subspan(0, L), scratch);
      AccumulateDrawGradient(cz, cw, t.y, t.sampled_cols, std::span(tmp).subspan(L, L), scratch);
      for (std::size_t o = 0; o < L; ++o) {
        row_coeff[o] += advantage * tmp[o];
        col_coeff[o] += advantage * tmp[L + o];
      }
    }
  }
  Var surrogate = Sum(Multiply(logits, tape.Leaf(std::move(coeff))));
  tape.Backward(surrogate);

  const double step = options.objective == PolicyObjective::kMinimize ? -options.rate : options.rate;
  const Tensor& gw1 = tape.grad(w1);
  const Tensor& gb1 = tape.grad(b1);
  const Tensor& gw2 = tape.grad(w2);
  if (!gw1.AllFinite() || !gb1.AllFinite() || !gw2.AllFinite()) {
    throw NumericError("policy_update: non-finite policy gradient");
  }
  auto apply = [step](Tensor& p, const Tensor& g) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += step * g[i];
  };
  apply(params.w1, gw1);
  apply(params.b1, gb1);
  apply(params.w2, gw2);
  if (options.use_baseline) {
    params.baseline = options.baseline_decay * params.baseline + (1.0 - options.baseline_decay) * batch.mean_reward();
  }
}

void WriteActionLog(std::ostream& out, const EpisodeBatch& batch) {
  for (const auto& g : batch.groups) {
    for (std::size_t a = 0; a < g.actions.size(); ++a) {
      const SelectionTrace& t = g.actions[a];
      nlohmann::json j = {{"pos", {t.x, t.y}},
                          {"rows", t.sampled_rows},
                          {"cols", t.sampled_cols},
                          {"logp", t.log_prob},
                          {"reward", g.rewards[a]}};
      out << j.dump() << '\n';
    }
  }
}

}  // namespace rrcn
