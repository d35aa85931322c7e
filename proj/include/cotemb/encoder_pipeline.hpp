#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cotemb/corpus.hpp"
#include "cotemb/encoder.hpp"
#include "cotemb/llm_gateway.hpp"

namespace cotemb {

enum class InputVariant { TweetOnly, CotOnly, TweetPlusCot };

std::string_view to_string(InputVariant variant);
InputVariant input_variant_from_string(std::string_view s);

struct EncoderInput {
  std::string example_id;
  std::string segment_a;
  std::optional<std::string> segment_b;  // the COT text for the pairwise variant
  InputVariant variant = InputVariant::TweetOnly;
};

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Renders the encoder input for one example under one variant. With
/// inject_topic the tweet segment becomes `Topic: <name>. Tweet: <text>`.
EncoderInput build_encoder_input(const StanceExample& example,
                                 const std::optional<CotRecord>& cot, InputVariant variant,
                                 bool inject_topic);

struct EarlyStoppingConfig {
  int patience = 2;
  std::string metric = "tweeteval_f1";
};

struct TrainConfig {
  Dataset dataset = Dataset::TweetStance;
  InputVariant variant = InputVariant::TweetOnly;
  int batch_size = 16;
  int max_epochs = 10;
  std::optional<EarlyStoppingConfig> early_stopping;
  std::optional<double> learning_rate;  // exactly one of this / lr_grid
  std::vector<double> lr_grid;
  std::uint64_t seed = 1;
  std::string encoder_name = "hashed-embed-32";
  int max_sequence_length = 256;
  int buckets = 4096;
  int dim = 32;
  double weight_decay = 0.01;

  void validate() const;
};

struct PredictionRecord {
  std::string example_id;
  StanceLabel predicted = StanceLabel::Neutral;
  Eigen::Vector3d scores = Eigen::Vector3d::Zero();  // Favor, Against, Neutral
};

struct LabeledInput {
  EncoderInput input;
  StanceLabel gold = StanceLabel::Neutral;
};

struct DataBundle {
  std::vector<LabeledInput> train;
  std::vector<LabeledInput> dev;   // may be empty (no dev split)
  std::vector<LabeledInput> test;
};

struct RunResult {
  TrainConfig config;
  std::string model_artifact;  // path, empty when no run_dir given
  std::vector<double> dev_history;
  std::vector<PredictionRecord> test_predictions;
  double chosen_lr = 0.0;
  std::size_t truncated_inputs = 0;
  std::string encoder_revision;
};

/// Patience-based stopping over a per-epoch dev metric (higher is better).
/// Strictly separate from the trainer so the contract is scriptable.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);
  /// Records one epoch's metric. Returns true when training should stop
  /// (the metric failed to improve for `patience` consecutive epochs).
  bool observe(double metric);
  int best_epoch() const { return best_epoch_; }  // 1-based; 0 = none yet
  double best_metric() const { return best_metric_; }
  int epochs_seen() const { return epoch_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int stagnant_ = 0;
  double best_metric_ = 0.0;
};

/// Best final dev metric wins; exact ties go to the smaller learning rate.
double select_best_lr(const std::vector<std::pair<double, double>>& lr_to_metric);

/// Fine-tunes the classifier per config. Requires config.learning_rate.
/// With early stopping the best-dev checkpoint is restored before test
/// predictions; without a dev split, trains for exactly max_epochs.
RunResult train(const DataBundle& data, const TrainConfig& config,
                const std::filesystem::path& run_dir = {});

/// One train() per grid value, returning the best run with chosen_lr set.
RunResult grid_search_lr(const DataBundle& data, const TrainConfig& config,
                         const std::filesystem::path& run_dir = {});

/// One independent run per seed; results ordered by seed value.
std::vector<RunResult> multi_seed_run(const DataBundle& data, const TrainConfig& config,
                                      std::vector<std::uint64_t> seeds,
                                      const std::filesystem::path& out_root = {});

/// Dev/test metric dispatch: "accuracy", "tweeteval_f1" or "macro_f1".
double compute_metric(const std::string& metric_id, std::span<const StanceLabel> gold,
                      std::span<const StanceLabel> pred);

std::vector<PredictionRecord> predict_all(const StanceClassifier& model,
                                          std::span<const LabeledInput> inputs,
                                          int max_sequence_length);

void write_predictions(const std::filesystem::path& path,
                       std::span<const PredictionRecord> predictions);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

}  // namespace cotemb
