#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cotemb/corpus.hpp"

namespace cotemb {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::map<StanceLabel, ClassMetrics> per_class;
  double tweeteval_f1 = 0.0;  // mean of Favor and Against F1
  double macro_f1 = 0.0;      // mean over all three classes
  std::map<StanceLabel, std::size_t> support;
  // Classes whose precision/recall/F1 hit the 0/0 -> 0 convention.
  std::vector<StanceLabel> zero_division_classes;

  double metric(const std::string& metric_id) const;
};

/// 3x3 counts; rows are gold, columns predicted, both in the fixed label
/// order Favor, Against, Neutral.
Eigen::Matrix3i confusion_matrix(std::span<const StanceLabel> gold,
                                 std::span<const StanceLabel> pred);

MetricsReport f1_report(std::span<const StanceLabel> gold, std::span<const StanceLabel> pred);

struct AggregateReport {
  std::string metric_id;
  std::vector<double> per_seed_values;
  double mean = 0.0;
  double std_dev = 0.0;
  bool sample_std = true;  // n-1 denominator; a single value has std 0
};

AggregateReport aggregate(std::span<const double> values, std::string metric_id = "");

}  // namespace cotemb
