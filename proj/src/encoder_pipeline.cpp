#include "cotemb/encoder_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "cotemb/evaluation.hpp"
#include "cotemb/tsv.hpp"

namespace cotemb {

std::string_view to_string(InputVariant variant) {
  switch (variant) {
    case InputVariant::TweetOnly: return "tweet";
    case InputVariant::CotOnly: return "cot";
    case InputVariant::TweetPlusCot: return "tweet+cot";
  }
  return "?";
}

InputVariant input_variant_from_string(std::string_view s) {
  if (s == "tweet") return InputVariant::TweetOnly;
  if (s == "cot") return InputVariant::CotOnly;
  if (s == "tweet+cot") return InputVariant::TweetPlusCot;
  throw PipelineError("unknown input variant: " + std::string(s));
}

EncoderInput build_encoder_input(const StanceExample& example,
                                 const std::optional<CotRecord>& cot, InputVariant variant,
                                 bool inject_topic) {
  if (variant != InputVariant::TweetOnly && (!cot || cot->raw_completion.empty())) {
    throw PipelineError("example " + example.example_id +
                        ": variant needs a COT record with non-empty text");
  }
  std::string tweet_segment =
      inject_topic ? "Topic: " + example.topic.display_name + ". Tweet: " + example.text
                   : example.text;
  EncoderInput input;
  input.example_id = example.example_id;
  input.variant = variant;
  switch (variant) {
    case InputVariant::TweetOnly:
      input.segment_a = std::move(tweet_segment);
      break;
    case InputVariant::CotOnly:
      input.segment_a = cot->raw_completion;
      break;
    case InputVariant::TweetPlusCot:
      input.segment_a = std::move(tweet_segment);
      input.segment_b = cot->raw_completion;
      break;
  }
  return input;
}

void TrainConfig::validate() const {
  if (batch_size <= 0) throw PipelineError("batch_size must be positive");
  if (max_epochs <= 0) throw PipelineError("max_epochs must be positive");
  if (max_sequence_length <= 0) throw PipelineError("max_sequence_length must be positive");
  if (buckets <= 0 || dim <= 0) throw PipelineError("buckets and dim must be positive");
  bool has_lr = learning_rate.has_value();
  bool has_grid = !lr_grid.empty();
  if (has_lr == has_grid) {
    throw PipelineError("exactly one of learning_rate and lr_grid must be set");
  }
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
  if (patience <= 0) throw PipelineError("early stopping patience must be positive");
}

bool EarlyStopping::observe(double metric) {
  ++epoch_;
  if (best_epoch_ == 0 || metric > best_metric_) {
    best_metric_ = metric;
    best_epoch_ = epoch_;
    stagnant_ = 0;
    return false;
  }
  ++stagnant_;
  return stagnant_ >= patience_;
}

double select_best_lr(const std::vector<std::pair<double, double>>& lr_to_metric) {
  if (lr_to_metric.empty()) throw PipelineError("select_best_lr: empty grid");
  auto sorted = lr_to_metric;
  std::sort(sorted.begin(), sorted.end());
  double best_lr = sorted.front().first;
  double best_metric = sorted.front().second;
  for (const auto& [lr, metric] : sorted) {
    if (metric > best_metric) {  // strict: earlier (smaller) lr keeps ties
      best_metric = metric;
      best_lr = lr;
    }
  }
  return best_lr;
}

double compute_metric(const std::string& metric_id, std::span<const StanceLabel> gold,
                      std::span<const StanceLabel> pred) {
  if (metric_id == "accuracy") {
    if (gold.empty()) throw PipelineError("accuracy over empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i] == pred[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(gold.size());
  }
  return f1_report(gold, pred).metric(metric_id);
}

namespace {

struct TokenizedInput {
  std::vector<int> rows_a;
  std::vector<int> rows_b;
  int gold = 0;
};

// Token budget is shared between segments; the longer segment loses tail
// tokens first so the (short, label-bearing) tweet survives.
bool truncate_pair(std::vector<int>& a, std::vector<int>& b, std::size_t max_len) {
  bool truncated = false;
  while (a.size() + b.size() > max_len) {
    truncated = true;
    if (a.size() >= b.size()) {
      a.pop_back();
    } else {
      b.pop_back();
    }
  }
  return truncated;
}

std::vector<TokenizedInput> tokenize_inputs(std::span<const LabeledInput> inputs,
                                            const TrainConfig& config,
                                            std::size_t& truncated_count) {
  std::vector<TokenizedInput> out;
  out.reserve(inputs.size());
  for (const auto& li : inputs) {
    TokenizedInput ti;
    ti.rows_a = hash_tokens(tokenize(li.input.segment_a), config.buckets);
    if (li.input.segment_b) {
      ti.rows_b = hash_tokens(tokenize(*li.input.segment_b), config.buckets);
    }
    if (truncate_pair(ti.rows_a, ti.rows_b,
                      static_cast<std::size_t>(config.max_sequence_length))) {
      ++truncated_count;
    }
    ti.gold = label_index(li.gold);
    out.push_back(std::move(ti));
  }
  return out;
}

StanceLabel argmax_label(const Eigen::Vector3d& scores) {
  StanceLabel best = kLabelOrder[0];
  double best_score = scores(0);
  for (int k = 1; k < 3; ++k) {
    if (scores(k) > best_score) {
      best_score = scores(k);
      best = kLabelOrder[k];
    }
  }
  return best;
}

std::vector<StanceLabel> predict_labels(const StanceClassifier& model,
                                        std::span<const TokenizedInput> inputs) {
  std::vector<StanceLabel> out;
  out.reserve(inputs.size());
  for (const auto& ti : inputs) {
    out.push_back(argmax_label(model.predict_proba(ti.rows_a, ti.rows_b)));
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<PredictionRecord> predict_all(const StanceClassifier& model,
                                          std::span<const LabeledInput> inputs,
                                          int max_sequence_length) {
  TrainConfig tmp;
  tmp.max_sequence_length = max_sequence_length;
  tmp.buckets = model.buckets();
  std::size_t ignored = 0;
  auto tokenized = tokenize_inputs(inputs, tmp, ignored);
  std::vector<PredictionRecord> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    PredictionRecord rec;
    rec.example_id = inputs[i].input.example_id;
    rec.scores = model.predict_proba(tokenized[i].rows_a, tokenized[i].rows_b);
    rec.predicted = argmax_label(rec.scores);
    out.push_back(std::move(rec));
  }
  return out;
}

RunResult train(const DataBundle& data, const TrainConfig& config,
                const std::filesystem::path& run_dir) {
  config.validate();
  if (!config.learning_rate) {
    throw PipelineError("train() needs learning_rate; use grid_search_lr for a grid");
  }
  if (data.train.empty()) throw PipelineError("empty training set");
  if (config.early_stopping && data.dev.empty()) {
    throw PipelineError("early stopping configured but no dev split exists");
  }

  RunResult result;
  result.config = config;
  result.chosen_lr = *config.learning_rate;

  std::size_t truncated = 0;
  auto train_inputs = tokenize_inputs(data.train, config, truncated);
  auto dev_inputs = tokenize_inputs(data.dev, config, truncated);
  auto test_inputs = tokenize_inputs(data.test, config, truncated);
  result.truncated_inputs = truncated;

  StanceClassifier model(config.encoder_name, config.buckets, config.dim, config.seed);
  result.encoder_revision = model.revision();
  AdamW opt_emb(config.buckets, config.dim, config.weight_decay);
  AdamW opt_w(3, 2 * config.dim, config.weight_decay);
  AdamW opt_b(3, 1, 0.0);  // no decay on the bias

  std::mt19937_64 rng(config.seed);
  const double lr0 = *config.learning_rate;
  const int dim = config.dim;
  const std::size_t n = train_inputs.size();
  const std::size_t batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const double total_steps =
      static_cast<double>(batches_per_epoch) * static_cast<double>(config.max_epochs);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::optional<EarlyStopping> stopper;
  if (config.early_stopping) stopper.emplace(config.early_stopping->patience);
  std::string dev_metric_id =
      config.early_stopping ? config.early_stopping->metric : std::string("tweeteval_f1");
  std::vector<StanceLabel> dev_gold;
  for (const auto& ti : dev_inputs) dev_gold.push_back(kLabelOrder[ti.gold]);

  Eigen::MatrixXd best_embeddings, best_weight;
  Eigen::Vector3d best_bias;
  bool have_best = false;

  std::ofstream epochs_log;
  if (!run_dir.empty()) {
    std::filesystem::create_directories(run_dir);
    epochs_log.open(run_dir / "epochs.jsonl");
  }

  long step = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      double inv = 1.0 / static_cast<double>(end - start);

      Eigen::MatrixXd g_emb = Eigen::MatrixXd::Zero(config.buckets, dim);
      Eigen::MatrixXd g_w = Eigen::MatrixXd::Zero(3, 2 * dim);
      Eigen::Vector3d g_b = Eigen::Vector3d::Zero();

      for (std::size_t bi = start; bi < end; ++bi) {
        const TokenizedInput& ti = train_inputs[order[bi]];
        Eigen::VectorXd x(2 * dim);
        x << model.pool(ti.rows_a), model.pool(ti.rows_b);
        Eigen::Vector3d probs = softmax(model.head_weight() * x + model.head_bias());
        epoch_loss += -std::log(std::max(probs(ti.gold), 1e-12)) * inv;

        Eigen::Vector3d dlogits = probs;
        dlogits(ti.gold) -= 1.0;
        g_w += inv * dlogits * x.transpose();
        g_b += inv * dlogits;
        Eigen::VectorXd dx = model.head_weight().transpose() * dlogits;
        if (!ti.rows_a.empty()) {
          Eigen::RowVectorXd da =
              dx.head(dim).transpose() * (inv / static_cast<double>(ti.rows_a.size()));
          for (int r : ti.rows_a) g_emb.row(r) += da;
        }
        if (!ti.rows_b.empty()) {
          Eigen::RowVectorXd db =
              dx.tail(dim).transpose() * (inv / static_cast<double>(ti.rows_b.size()));
          for (int r : ti.rows_b) g_emb.row(r) += db;
        }
      }

      double lr = lr0 * (1.0 - static_cast<double>(step) / total_steps);  // linear decay
      ++step;
      opt_emb.step(model.embeddings(), g_emb, lr);
      opt_w.step(model.head_weight(), g_w, lr);
      Eigen::MatrixXd bias = model.head_bias();
      opt_b.step(bias, g_b, lr, false);
      model.head_bias() = bias.col(0);
    }
    epoch_loss /= static_cast<double>(batches_per_epoch);

    std::optional<double> dev_metric;
    if (!dev_inputs.empty()) {
      auto dev_pred = predict_labels(model, dev_inputs);
      dev_metric = compute_metric(dev_metric_id, dev_gold, dev_pred);
      result.dev_history.push_back(*dev_metric);
    }
    if (epochs_log.is_open()) {
      nlohmann::ordered_json j;
      j["epoch"] = epoch;
      j["train_loss"] = epoch_loss;
      if (dev_metric) j["dev_" + dev_metric_id] = *dev_metric;
      epochs_log << j.dump() << "\n";
    }
    if (stopper && dev_metric) {
      bool stop = stopper->observe(*dev_metric);
      if (stopper->best_epoch() == stopper->epochs_seen()) {
        best_embeddings = model.embeddings();
        best_weight = model.head_weight();
        best_bias = model.head_bias();
        have_best = true;
      }
      if (stop) break;
    }
  }

  if (have_best) {  // restore the best-dev checkpoint
    model.embeddings() = best_embeddings;
    model.head_weight() = best_weight;
    model.head_bias() = best_bias;
  }

  result.test_predictions.reserve(test_inputs.size());
  for (std::size_t i = 0; i < test_inputs.size(); ++i) {
    PredictionRecord rec;
    rec.example_id = data.test[i].input.example_id;
    rec.scores = model.predict_proba(test_inputs[i].rows_a, test_inputs[i].rows_b);
    rec.predicted = argmax_label(rec.scores);
    result.test_predictions.push_back(std::move(rec));
  }

  if (!run_dir.empty()) {
    nlohmann::ordered_json cfg;
    cfg["dataset"] = std::string(to_string(config.dataset));
    cfg["variant"] = std::string(to_string(config.variant));
    cfg["batch_size"] = config.batch_size;
    cfg["max_epochs"] = config.max_epochs;
    if (config.early_stopping) {
      cfg["early_stopping"] = {{"patience", config.early_stopping->patience},
                               {"metric", config.early_stopping->metric}};
    }
    cfg["learning_rate"] = result.chosen_lr;
    cfg["seed"] = config.seed;
    cfg["encoder_name"] = config.encoder_name;
    cfg["encoder_revision"] = result.encoder_revision;
    cfg["max_sequence_length"] = config.max_sequence_length;
    cfg["buckets"] = config.buckets;
    cfg["dim"] = config.dim;
    cfg["weight_decay"] = config.weight_decay;
    cfg["truncated_inputs"] = result.truncated_inputs;
    std::ofstream(run_dir / "config.json") << cfg.dump(2) << "\n";

    auto model_path = run_dir / "model.bin";
    model.save(model_path);
    result.model_artifact = model_path.string();
    write_predictions(run_dir / "predictions.tsv", result.test_predictions);
  }
  return result;
}

RunResult grid_search_lr(const DataBundle& data, const TrainConfig& config,
                         const std::filesystem::path& run_dir) {
  config.validate();
  if (config.lr_grid.empty()) throw PipelineError("grid_search_lr: empty grid");
  if (data.dev.empty()) throw PipelineError("grid_search_lr needs a dev split");

  std::vector<double> grid = config.lr_grid;
  std::sort(grid.begin(), grid.end());

  std::optional<RunResult> best;
  double best_metric = 0.0;
  for (double lr : grid) {
    TrainConfig point = config;
    point.lr_grid.clear();
    point.learning_rate = lr;
    std::filesystem::path point_dir;
    if (!run_dir.empty()) {
      point_dir = run_dir / ("lr_" + format_double(lr));
    }
    RunResult run = train(data, point, point_dir);
    // The run's final dev metric: best epoch under early stopping, last
    // epoch otherwise.
    double metric = run.dev_history.empty()
                        ? 0.0
                        : (config.early_stopping
                               ? *std::max_element(run.dev_history.begin(), run.dev_history.end())
                               : run.dev_history.back());
    if (!best || metric > best_metric) {  // ties keep the smaller lr
      best_metric = metric;
      best = std::move(run);
    }
  }
  best->chosen_lr = *best->config.learning_rate;
  return std::move(*best);
}

std::vector<RunResult> multi_seed_run(const DataBundle& data, const TrainConfig& config,
                                      std::vector<std::uint64_t> seeds,
                                      const std::filesystem::path& out_root) {
  if (seeds.empty()) throw PipelineError("multi_seed_run: no seeds");
  std::sort(seeds.begin(), seeds.end());
  if (std::adjacent_find(seeds.begin(), seeds.end()) != seeds.end()) {
    throw PipelineError("multi_seed_run: seeds must be distinct");
  }
  std::vector<RunResult> results;
  for (std::uint64_t seed : seeds) {
    TrainConfig per_seed = config;
    per_seed.seed = seed;
    std::filesystem::path run_dir;
    if (!out_root.empty()) run_dir = out_root / ("seed_" + std::to_string(seed));
    if (!per_seed.lr_grid.empty()) {
      results.push_back(grid_search_lr(data, per_seed, run_dir));
    } else {
      results.push_back(train(data, per_seed, run_dir));
    }
  }
  return results;
}

void write_predictions(const std::filesystem::path& path,
                       std::span<const PredictionRecord> predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError("cannot write predictions: " + path.string());
  out << "example_id\tpredicted\tscore_favor\tscore_against\tscore_neutral\n";
  for (const auto& rec : predictions) {
    out << tsv::join({rec.example_id, std::string(to_string(rec.predicted)),
                      format_double(rec.scores(0)), format_double(rec.scores(1)),
                      format_double(rec.scores(2))})
        << "\n";
  }
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PipelineError("cannot open predictions: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw PipelineError("empty predictions file: " + path.string());
  std::vector<PredictionRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = tsv::split(line);
    if (f.size() != 5) throw PipelineError("bad predictions row in " + path.string());
    PredictionRecord rec;
    rec.example_id = f[0];
    rec.predicted = normalize_label(f[1]);
    rec.scores << std::stod(f[2]), std::stod(f[3]), std::stod(f[4]);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace cotemb
