// Command-line front end: generate, train, eval, ablate, case-study, gradcheck.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rrcn/checkpoint.h"
#include "rrcn/gradcheck.h"
#include "rrcn/synthetic.h"
#include "rrcn/train.h"

namespace fs = std::filesystem;
using namespace rrcn;

namespace {

AttributedBipartiteGraph LoadDataDir(const fs::path& dir) {
  return LoadGraph(dir / "users.csv", dir / "edges.csv");
}

std::pair<UserId, UserId> ParsePair(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("--pair expects M_ID,F_ID");
  return {std::stoll(text.substr(0, comma)), std::stoll(text.substr(comma + 1))};
}

std::pair<std::string, std::string> ParseFix(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("--fix expects ATTR_X,ATTR_Y");
  return {text.substr(0, comma), text.substr(comma + 1)};
}

void WriteJson(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reinforced random convolutional network for reciprocal link prediction"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a planted synthetic dataset");
  std::string spec_path, out_path;
  gen->add_option("--spec", spec_path, "generator spec (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out_path, "output directory")->required();

  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  std::string config_path, data_dir, log_path;
  std::vector<std::string> overrides;
  train->add_option("--config", config_path, "key=value config file")->required()->check(CLI::ExistingFile);
  train->add_option("--data", data_dir, "directory with users.csv and edges.csv")->required();
  train->add_option("--out", out_path, "checkpoint path")->required();
  train->add_option("--set", overrides, "extra key=value overrides");
  train->add_option("--log", log_path, "per-epoch log file (default stderr)");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out split");
  std::string ckpt_path;
  double threshold = -1;
  eval->add_option("--ckpt", ckpt_path, "checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data_dir, "data directory")->required();
  eval->add_option("--out", out_path, "metrics.json path; roc.csv goes alongside")->required();
  eval->add_option("--threshold", threshold, "override the configured threshold");

  auto* ablate = app.add_subcommand("ablate", "Train every mode x kernel size and tabulate");
  std::vector<std::string> modes = {"conventional", "dilated", "random", "reinforced"};
  std::vector<std::size_t> kernels = {2, 3, 4};
  std::size_t runs = 5;
  ablate->add_option("--config", config_path, "base config")->required()->check(CLI::ExistingFile);
  ablate->add_option("--data", data_dir, "data directory")->required();
  ablate->add_option("--out", out_path, "report.csv path")->required();
  ablate->add_option("--modes", modes, "modes to compare");
  ablate->add_option("--kernels", kernels, "kernel sizes to compare");
  ablate->add_option("--runs", runs, "seeds averaged for random mode");

  auto* cs = app.add_subcommand("case-study", "Show the support selected at a fixed attribute cell");
  std::string pair_text, fix_text;
  std::uint64_t seed = 1;
  cs->add_option("--ckpt", ckpt_path, "checkpoint")->required()->check(CLI::ExistingFile);
  cs->add_option("--data", data_dir, "data directory")->required();
  cs->add_option("--pair", pair_text, "M_ID,F_ID")->required();
  cs->add_option("--fix", fix_text, "ATTR_X,ATTR_Y")->required();
  cs->add_option("--out", out_path, "trace.json path")->required();
  cs->add_option("--seed", seed, "sampling seed");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every op and the pair loss");
  int trials = 5;
  gc->add_option("--trials", trials, "random points per check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      std::ifstream in(spec_path);
      const SyntheticSpec spec = SyntheticSpecFromJson(nlohmann::json::parse(in));
      const SyntheticData data = GenerateSynthetic(spec);
      WriteSyntheticData(data, out_path);
      std::cout << "wrote " << data.graph.users().size() << " users, " << data.graph.edges().size() << " edges, "
                << data.graph.ReciprocalPairs().size() << " reciprocal pairs to " << out_path << '\n';
    } else if (*train) {
      ModelConfig cfg = LoadConfig(config_path);
      for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        SetConfigValue(cfg, kv.substr(0, eq), kv.substr(eq + 1));
      }
      cfg.Validate();
      const AttributedBipartiteGraph graph = LoadDataDir(data_dir);
      const DatasetSplit split = BuildPairDataset(graph, cfg.seed);
      RRCNModel model = RRCNModel::Init(cfg, graph.attribute_names(), graph.vocab_sizes());
      std::ofstream log_file;
      if (!log_path.empty()) log_file.open(log_path);
      TrainOptions options;
      options.log = log_path.empty() ? &std::cerr : &log_file;
      Train(model, graph, split.train, options);
      SaveCheckpoint(model, out_path);
      std::cout << "trained on " << split.train.pairs.size() << " pairs; checkpoint " << out_path << '\n';
    } else if (*eval) {
      const RRCNModel model = LoadCheckpoint(ckpt_path);
      const AttributedBipartiteGraph graph = LoadDataDir(data_dir);
      const DatasetSplit split = BuildPairDataset(graph, model.config.seed);
      const Metrics m = Evaluate(model, graph, split.test, threshold >= 0 ? threshold : model.config.threshold);
      WriteJson(MetricsToJson(m), out_path);
      WriteRocCsv(m, fs::path(out_path).parent_path() / "roc.csv");
      std::cout << MetricsToJson(m).dump() << '\n';
    } else if (*ablate) {
      const ModelConfig cfg = LoadConfig(config_path);
      const AttributedBipartiteGraph graph = LoadDataDir(data_dir);
      const DatasetSplit split = BuildPairDataset(graph, cfg.seed);
      std::vector<ConvMode> parsed;
      for (const auto& m : modes) parsed.push_back(ParseConvMode(m));
      const auto rows = Ablate(cfg, graph, split, parsed, kernels, runs, &std::cerr);
      std::ofstream out(out_path);
      if (!out) throw std::runtime_error("cannot write " + out_path);
      WriteAblationCsv(out, rows);
      std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';
    } else if (*cs) {
      const RRCNModel model = LoadCheckpoint(ckpt_path);
      const AttributedBipartiteGraph graph = LoadDataDir(data_dir);
      const auto [m, f] = ParsePair(pair_text);
      const auto [ax, ay] = ParseFix(fix_text);
      const CaseStudyTrace trace = CaseStudy(model, graph, m, f, ax, ay, seed);
      WriteJson(CaseStudyToJson(trace), out_path);
      std::cout << "wrote " << trace.kernels.size() << " selections to " << out_path << '\n';
    } else if (*gc) {
      const auto start = std::chrono::steady_clock::now();
      const auto results = RunGradCheckSuite(trials);
      bool ok = true;
      for (const auto& r : results) {
        std::cout << (r.passed ? "ok   " : "FAIL ") << r.name << " max_rel_error=" << r.max_error << '\n';
        ok = ok && r.passed;
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << results.size() << " checks, " << (ok ? "all passed" : "FAILURES") << " in " << secs << " s\n";
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "rrcn: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
