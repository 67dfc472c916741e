#ifndef RRCN_METRICS_H_
#define RRCN_METRICS_H_

#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"

namespace rrcn {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Prediction is positive when score >= threshold.
ConfusionMatrix Confusion(std::span<const double> scores, std::span<const int> labels, double threshold);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double auc = 0.0;
  std::vector<RocPoint> roc;
};

// Mann-Whitney statistic with tied scores counted as 1/2. Throws
// std::invalid_argument unless both classes are present.
double AucRankStatistic(std::span<const double> scores, std::span<const int> labels);

// One point per distinct score threshold, from (0,0) to (1,1).
std::vector<RocPoint> RocCurve(std::span<const double> scores, std::span<const int> labels);
double TrapezoidArea(std::span<const RocPoint> roc);

// Precision is 0 with no positive predictions, recall 0 with no positive
// labels, F1 0 when both are 0.
Metrics ComputeMetrics(std::span<const double> scores, std::span<const int> labels, double threshold);

nlohmann::json MetricsToJson(const Metrics& m);
void WriteRocCsv(const Metrics& m, const std::filesystem::path& path);

}  // namespace rrcn

#endif  // RRCN_METRICS_H_
