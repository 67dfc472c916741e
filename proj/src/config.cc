#include "rrcn/config.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rrcn {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t ParseSize(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || v[0] == '-') {
    throw std::invalid_argument("config: " + key + " expects a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(n);
}

double ParseDouble(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  }
  return x;
}

bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw std::invalid_argument("config: " + key + " expects on/off, got '" + v + "'");
}

[[noreturn]] void BadChoice(const std::string& key, const std::string& v, const char* choices) {
  throw std::invalid_argument("config: " + key + " must be one of " + choices + ", got '" + v + "'");
}

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string ToString(ConvMode mode) {
  switch (mode) {
    case ConvMode::kConventional: return "conventional";
    case ConvMode::kDilated: return "dilated";
    case ConvMode::kRandom: return "random";
    case ConvMode::kReinforced: return "reinforced";
  }
  return "unknown";
}

ConvMode ParseConvMode(const std::string& text) {
  if (text == "conventional" || text == "CCNN") return ConvMode::kConventional;
  if (text == "dilated" || text == "DCNN") return ConvMode::kDilated;
  if (text == "random" || text == "RCN") return ConvMode::kRandom;
  if (text == "reinforced" || text == "RRCN") return ConvMode::kReinforced;
  BadChoice("mode", text, "conventional|dilated|random|reinforced");
}

std::string AblationLabel(ConvMode mode) {
  switch (mode) {
    case ConvMode::kConventional: return "CCNN";
    case ConvMode::kDilated: return "DCNN";
    case ConvMode::kRandom: return "RCN";
    case ConvMode::kReinforced: return "RRCN";
  }
  return "?";
}

void ModelConfig::Validate() const {
  auto positive = [](const char* name, std::size_t v) {
    if (v == 0) throw std::invalid_argument(std::string("config: ") + name + " must be positive");
  };
  positive("L", L);
  positive("d", d);
  positive("l1", l1);
  positive("dilation", dilation);
  positive("fc_hidden", fc_hidden);
  positive("batch_size", batch_size);
  if (kernel_sizes.empty()) throw std::invalid_argument("config: kernel_sizes must not be empty");
  for (std::size_t i = 0; i < kernel_sizes.size(); ++i) {
    const std::size_t k = kernel_sizes[i];
    if (k < 2 || k > 4) throw std::invalid_argument("config: kernel sizes must be in {2,3,4}");
    if (k > L) throw std::invalid_argument("config: kernel size exceeds L");
    if (std::count(kernel_sizes.begin(), kernel_sizes.end(), k) > 1) {
      throw std::invalid_argument("config: duplicate kernel size");
    }
  }
  if (!(learning_rate > 0)) throw std::invalid_argument("config: learning_rate must be positive");
  if (!(policy_rate > 0)) throw std::invalid_argument("config: policy_rate must be positive");
  if (!(threshold > 0 && threshold < 1)) throw std::invalid_argument("config: threshold must lie in (0,1)");
}

void SetConfigValue(ModelConfig& c, const std::string& key, const std::string& v) {
  if (key == "L") {
    c.L = ParseSize(key, v);
  } else if (key == "d") {
    c.d = ParseSize(key, v);
  } else if (key == "l1") {
    c.l1 = ParseSize(key, v);
  } else if (key == "kernel_sizes") {
    c.kernel_sizes.clear();
    std::istringstream is(v);
    std::string part;
    while (std::getline(is, part, ',')) c.kernel_sizes.push_back(ParseSize(key, Trim(part)));
  } else if (key == "mode") {
    c.mode = ParseConvMode(v);
  } else if (key == "dilation") {
    c.dilation = ParseSize(key, v);
  } else if (key == "fc_hidden") {
    c.fc_hidden = ParseSize(key, v);
  } else if (key == "learning_rate") {
    c.learning_rate = ParseDouble(key, v);
  } else if (key == "policy_rate") {
    c.policy_rate = ParseDouble(key, v);
  } else if (key == "epochs") {
    c.epochs = ParseSize(key, v);
  } else if (key == "batch_size") {
    c.batch_size = ParseSize(key, v);
  } else if (key == "threshold") {
    c.threshold = ParseDouble(key, v);
  } else if (key == "seed") {
    c.seed = ParseSize(key, v);
  } else if (key == "attention_norm") {
    if (v == "per_set") {
      c.attention_norm = AttentionNorm::kPerSet;
    } else if (v == "joint") {
      c.attention_norm = AttentionNorm::kJoint;
    } else {
      BadChoice(key, v, "per_set|joint");
    }
  } else if (key == "attention_sharing") {
    if (v == "shared") {
      c.shared_attention = true;
    } else if (v == "separate") {
      c.shared_attention = false;
    } else {
      BadChoice(key, v, "shared|separate");
    }
  } else if (key == "baseline") {
    c.baseline = ParseBool(key, v);
  } else if (key == "channel_mode") {
    if (v == "depthwise") {
      c.channel_mode = ChannelMode::kDepthwise;
    } else if (v == "summed") {
      c.channel_mode = ChannelMode::kSummed;
    } else {
      BadChoice(key, v, "depthwise|summed");
    }
  } else if (key == "pair_op") {
    if (v == "rowdot") {
      c.pair_op = PairOp::kRowDot;
    } else if (v == "full_dot") {
      c.pair_op = PairOp::kFullDot;
    } else if (v == "elementwise") {
      c.pair_op = PairOp::kElementwise;
    } else {
      BadChoice(key, v, "rowdot|full_dot|elementwise");
    }
  } else if (key == "pool_axis") {
    if (v == "row") {
      c.pool_axis = PoolAxis::kRow;
    } else if (v == "column") {
      c.pool_axis = PoolAxis::kColumn;
    } else {
      BadChoice(key, v, "row|column");
    }
  } else if (key == "policy_objective") {
    if (v == "minimize") {
      c.policy_objective = PolicyObjective::kMinimize;
    } else if (v == "maximize") {
      c.policy_objective = PolicyObjective::kMaximize;
    } else {
      BadChoice(key, v, "minimize|maximize");
    }
  } else if (key == "reward") {
    if (v == "gradient") {
      c.reward = RewardKind::kGradient;
    } else if (v == "attribution") {
      c.reward = RewardKind::kAttribution;
    } else {
      BadChoice(key, v, "gradient|attribution");
    }
  } else if (key == "exclude_target") {
    c.exclude_target = ParseBool(key, v);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

ModelConfig ParseConfig(std::istream& in) {
  ModelConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    SetConfigValue(c, Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
  }
  c.Validate();
  return c;
}

ModelConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  return ParseConfig(in);
}

std::string FormatConfig(const ModelConfig& c) {
  std::ostringstream os;
  os << "L=" << c.L << '\n' << "d=" << c.d << '\n' << "l1=" << c.l1 << '\n';
  os << "kernel_sizes=";
  for (std::size_t i = 0; i < c.kernel_sizes.size(); ++i) os << (i ? "," : "") << c.kernel_sizes[i];
  os << '\n';
  os << "mode=" << ToString(c.mode) << '\n';
  os << "dilation=" << c.dilation << '\n';
  os << "fc_hidden=" << c.fc_hidden << '\n';
  os << "learning_rate=" << FormatDouble(c.learning_rate) << '\n';
  os << "policy_rate=" << FormatDouble(c.policy_rate) << '\n';
  os << "epochs=" << c.epochs << '\n';
  os << "batch_size=" << c.batch_size << '\n';
  os << "threshold=" << FormatDouble(c.threshold) << '\n';
  os << "seed=" << c.seed << '\n';
  os << "attention_norm=" << (c.attention_norm == AttentionNorm::kPerSet ? "per_set" : "joint") << '\n';
  os << "attention_sharing=" << (c.shared_attention ? "shared" : "separate") << '\n';
  os << "baseline=" << (c.baseline ? "on" : "off") << '\n';
  os << "channel_mode=" << (c.channel_mode == ChannelMode::kDepthwise ? "depthwise" : "summed") << '\n';
  os << "pair_op="
     << (c.pair_op == PairOp::kRowDot ? "rowdot" : c.pair_op == PairOp::kFullDot ? "full_dot" : "elementwise")
     << '\n';
  os << "pool_axis=" << (c.pool_axis == PoolAxis::kRow ? "row" : "column") << '\n';
  os << "policy_objective=" << (c.policy_objective == PolicyObjective::kMinimize ? "minimize" : "maximize")
     << '\n';
  os << "reward=" << (c.reward == RewardKind::kGradient ? "gradient" : "attribution") << '\n';
  os << "exclude_target=" << (c.exclude_target ? "on" : "off") << '\n';
  return os.str();
}

}  // namespace rrcn
