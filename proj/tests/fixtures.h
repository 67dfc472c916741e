// Helpers shared by the unit tests and the acceptance runner.
#ifndef RRCN_TESTS_FIXTURES_H_
#define RRCN_TESTS_FIXTURES_H_

#include <algorithm>
#include <array>
#include <vector>

#include "rrcn/policy.h"
#include "rrcn/rng.h"

namespace rrcn::testing {

inline Tensor RandomTensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.values()) v = UniformRange(rng, lo, hi);
  return t;
}

// 0.99 quantile of the chi-square distribution with 15 degrees of freedom:
// a statistic below it means p > 0.01.
inline constexpr double kChiSquare15At99 = 30.5779;

// Pearson statistic of 16 (row, col) supports at fixed (x, y) under the
// initial (uniform) policy, L=5, k=2.
inline double UniformSupportChiSquare(int samples, std::uint64_t seed) {
  constexpr std::size_t L = 5, x = 1, y = 3;
  Rng rng(seed);
  const PolicyParams params = PolicyParams::Init(L, 2, 2, 8, rng);
  const Tensor H = RandomTensor({L, L, 2}, rng);
  PolicySelector selector(PolicyLogits(H, params), 2, rng);
  // Non-fixed indices map to 0..3.
  auto rank = [](std::size_t i, std::size_t fixed) { return i < fixed ? i : i - 1; };
  std::array<int, 16> counts{};
  for (int s = 0; s < samples; ++s) {
    const SelectionTrace t = selector.Select(x, y);
    ++counts[rank(t.sampled_rows[0], x) * 4 + rank(t.sampled_cols[0], y)];
  }
  const double expected = samples / 16.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  return chi2;
}

// Planted bandit: L=4, k=2, fixed row 0, reward -1 whenever row 2 is drawn
// and +1 otherwise. Returns the final row distribution at the fixed cell.
inline std::vector<double> RunPlantedBandit(std::uint64_t seed, PolicyObjective objective, int updates = 500,
                                            double rate = 0.05, int actions_per_update = 8) {
  constexpr std::size_t L = 4, k = 2, x = 0;
  Rng rng(seed);
  PolicyParams params = PolicyParams::Init(L, 2, k, 8, rng);
  const Tensor H = RandomTensor({L, L, 2}, rng);
  PolicyUpdateOptions options;
  options.rate = rate;
  options.objective = objective;
  for (int u = 0; u < updates; ++u) {
    PolicySelector selector(PolicyLogits(H, params), k, rng);
    EpisodeBatch batch;
    EpisodeGroup group{H, {}, {}};
    for (int a = 0; a < actions_per_update; ++a) {
      SelectionTrace t = selector.Select(x, static_cast<std::size_t>(a) % L);
      const bool hit = std::find(t.sampled_rows.begin(), t.sampled_rows.end(), 2u) != t.sampled_rows.end();
      group.actions.push_back(std::move(t));
      group.rewards.push_back(hit ? -1.0 : 1.0);
    }
    batch.groups.push_back(std::move(group));
    PolicyUpdate(params, batch, options);
  }
  return PolicyDistribution(H, x, 0, params).rows;
}

}  // namespace rrcn::testing

#endif  // RRCN_TESTS_FIXTURES_H_
