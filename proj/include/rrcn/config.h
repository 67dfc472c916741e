#ifndef RRCN_CONFIG_H_
#define RRCN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace rrcn {

enum class ConvMode { kConventional, kDilated, kRandom, kReinforced };
// Softmax over each member set separately, or over P and N together.
enum class AttentionNorm { kPerSet, kJoint };
// Depthwise keeps one output per channel; summed broadcasts the
// channel-summed response to every channel.
enum class ChannelMode { kDepthwise, kSummed };
enum class PairOp { kRowDot, kFullDot, kElementwise };
// kRow: max over columns within each row. kColumn: max over rows.
enum class PoolAxis { kRow, kColumn };
// kMinimize descends on the expected reward; kMaximize descends on -reward.
enum class PolicyObjective { kMinimize, kMaximize };
// kGradient: loss gradient times kernel weight. kAttribution additionally
// multiplies by the selected tensor entry.
enum class RewardKind { kGradient, kAttribution };

std::string ToString(ConvMode mode);
ConvMode ParseConvMode(const std::string& text);
// Ablation label: CCNN, DCNN, RCN, RRCN.
std::string AblationLabel(ConvMode mode);

struct ModelConfig {
  std::size_t L = 16;
  std::size_t d = 8;
  std::size_t l1 = 16;
  std::vector<std::size_t> kernel_sizes = {2, 3, 4};
  ConvMode mode = ConvMode::kReinforced;
  std::size_t dilation = 2;
  std::size_t fc_hidden = 32;
  double learning_rate = 0.01;
  double policy_rate = 0.01;
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double threshold = 0.5;
  std::uint64_t seed = 1;

  AttentionNorm attention_norm = AttentionNorm::kPerSet;
  bool shared_attention = true;
  bool baseline = true;
  ChannelMode channel_mode = ChannelMode::kDepthwise;
  PairOp pair_op = PairOp::kRowDot;
  PoolAxis pool_axis = PoolAxis::kRow;
  PolicyObjective policy_objective = PolicyObjective::kMinimize;
  RewardKind reward = RewardKind::kGradient;
  // Drop the partner of the scored pair from each user's P/N sets.
  bool exclude_target = true;

  // Throws std::invalid_argument naming the offending field.
  void Validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Flat key=value text; '#' starts a comment. Unknown keys are errors.
ModelConfig ParseConfig(std::istream& in);
ModelConfig LoadConfig(const std::filesystem::path& path);
// Inverse of ParseConfig; emits every key.
std::string FormatConfig(const ModelConfig& config);
// Applies one key=value assignment.
void SetConfigValue(ModelConfig& config, const std::string& key, const std::string& value);

}  // namespace rrcn

#endif  // RRCN_CONFIG_H_
