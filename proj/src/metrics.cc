#include "rrcn/metrics.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace rrcn {
namespace {

void CheckInputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("metrics: " + std::to_string(scores.size()) + " scores vs " +
                                std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw std::invalid_argument("metrics: empty evaluation set");
  for (int y : labels)
    if (y != 0 && y != 1) throw std::invalid_argument("metrics: labels must be 0 or 1");
}

// Indices ordered by descending score.
std::vector<std::size_t> DescendingOrder(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

ConfusionMatrix Confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
  CheckInputs(scores, labels);
  ConfusionMatrix c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double AucRankStatistic(std::span<const double> scores, std::span<const int> labels) {
  CheckInputs(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks over tie groups.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw std::invalid_argument("auc: needs both positive and negative labels");
  const double P = static_cast<double>(positives), N = static_cast<double>(negatives);
  return (positive_rank_sum - P * (P + 1) / 2) / (P * N);
}

std::vector<RocPoint> RocCurve(std::span<const double> scores, std::span<const int> labels) {
  CheckInputs(scores, labels);
  const auto order = DescendingOrder(scores);
  const double P = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double N = static_cast<double>(labels.size()) - P;
  if (P == 0 || N == 0) throw std::invalid_argument("roc: needs both positive and negative labels");
  std::vector<RocPoint> roc{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      labels[order[j]] == 1 ? ++tp : ++fp;
      ++j;
    }
    roc.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P});
    i = j;
  }
  return roc;
}

double TrapezoidArea(std::span<const RocPoint> roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i)
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2;
  return area;
}

Metrics ComputeMetrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  const ConfusionMatrix c = Confusion(scores, labels, threshold);
  Metrics m;
  const auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / b; };
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.accuracy = ratio(c.tp + c.tn, scores.size());
  m.auc = AucRankStatistic(scores, labels);
  m.roc = RocCurve(scores, labels);
  return m;
}

nlohmann::json MetricsToJson(const Metrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"accuracy", m.accuracy}, {"auc", m.auc}};
}

void WriteRocCsv(const Metrics& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "fpr,tpr\n";
  for (const RocPoint& p : m.roc) out << p.fpr << ',' << p.tpr << '\n';
}

}  // namespace rrcn
