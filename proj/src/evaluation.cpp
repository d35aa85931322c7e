#include "cotemb/evaluation.hpp"

#include <cmath>
#include <numeric>

namespace cotemb {

double MetricsReport::metric(const std::string& metric_id) const {
  if (metric_id == "tweeteval_f1") return tweeteval_f1;
  if (metric_id == "macro_f1") return macro_f1;
  throw EvaluationError("unknown metric id: " + metric_id);
}

Eigen::Matrix3i confusion_matrix(std::span<const StanceLabel> gold,
                                 std::span<const StanceLabel> pred) {
  if (gold.size() != pred.size()) {
    throw EvaluationError("confusion_matrix: gold and pred lengths differ");
  }
  Eigen::Matrix3i m = Eigen::Matrix3i::Zero();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    m(label_index(gold[i]), label_index(pred[i])) += 1;
  }
  return m;
}

MetricsReport f1_report(std::span<const StanceLabel> gold, std::span<const StanceLabel> pred) {
  if (gold.empty()) throw EvaluationError("f1_report: empty input");
  Eigen::Matrix3i m = confusion_matrix(gold, pred);

  MetricsReport report;
  for (StanceLabel label : kLabelOrder) {
    int k = label_index(label);
    double tp = m(k, k);
    double gold_count = m.row(k).sum();
    double pred_count = m.col(k).sum();
    ClassMetrics cm;
    bool degenerate = false;
    if (pred_count > 0) {
      cm.precision = tp / pred_count;
    } else {
      degenerate = true;  // 0/0 -> 0 convention
    }
    if (gold_count > 0) {
      cm.recall = tp / gold_count;
    } else {
      degenerate = true;
    }
    if (cm.precision + cm.recall > 0) {
      cm.f1 = 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall);
    } else {
      degenerate = true;
    }
    if (degenerate) report.zero_division_classes.push_back(label);
    report.per_class[label] = cm;
    report.support[label] = static_cast<std::size_t>(gold_count);
  }
  report.tweeteval_f1 = (report.per_class[StanceLabel::Favor].f1 +
                         report.per_class[StanceLabel::Against].f1) /
                        2.0;
  report.macro_f1 = (report.per_class[StanceLabel::Favor].f1 +
                     report.per_class[StanceLabel::Against].f1 +
                     report.per_class[StanceLabel::Neutral].f1) /
                    3.0;
  return report;
}

AggregateReport aggregate(std::span<const double> values, std::string metric_id) {
  if (values.empty()) throw EvaluationError("aggregate: empty value list");
  AggregateReport report;
  report.metric_id = std::move(metric_id);
  report.per_seed_values.assign(values.begin(), values.end());
  report.mean = std::accumulate(values.begin(), values.end(), 0.0) /
                static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - report.mean) * (v - report.mean);
    report.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return report;
}

}  // namespace cotemb
