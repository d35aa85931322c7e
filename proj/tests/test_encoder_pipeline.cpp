#include <doctest.h>

#include <filesystem>
#include <random>

#include "cotemb/encoder_pipeline.hpp"
#include "cotemb/evaluation.hpp"

using namespace cotemb;
namespace fs = std::filesystem;

namespace {

StanceExample make_example(const std::string& id, const std::string& text,
                           StanceLabel gold = StanceLabel::Neutral) {
  StanceExample ex;
  ex.example_id = id;
  ex.topic = TopicRegistry::builtin().require("AT");
  ex.text = text;
  ex.gold = gold;
  return ex;
}

CotRecord make_cot(const std::string& id, const std::string& text) {
  CotRecord rec;
  rec.example_id = id;
  rec.raw_completion = text;
  return rec;
}

// Linearly separable toy data: one distinctive keyword per class plus noise.
// The noise words cycle (7 words against a 3-class cycle) so they stay
// class-balanced and only the keyword carries signal.
DataBundle toy_bundle(int train_n = 20, int dev_n = 9, int test_n = 9) {
  const char* keywords[3] = {"alpha", "bravo", "charlie"};
  const char* noise[] = {"the", "a", "some", "tweet", "about", "things", "today"};
  auto make = [&](int i, StanceLabel label) {
    std::string text = std::string(noise[i % std::size(noise)]) + " " +
                       keywords[label_index(label)] + " " + noise[(i + 3) % std::size(noise)];
    LabeledInput li;
    li.input.example_id = "toy" + std::to_string(i);
    li.input.segment_a = text;
    li.input.variant = InputVariant::TweetOnly;
    li.gold = label;
    return li;
  };
  DataBundle bundle;
  int i = 0;
  const StanceLabel labels[] = {StanceLabel::Favor, StanceLabel::Against, StanceLabel::Neutral};
  for (int k = 0; k < train_n; ++k) bundle.train.push_back(make(i++, labels[k % 3]));
  for (int k = 0; k < dev_n; ++k) bundle.dev.push_back(make(i++, labels[k % 3]));
  for (int k = 0; k < test_n; ++k) bundle.test.push_back(make(i++, labels[k % 3]));
  return bundle;
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_epochs = 10;
  cfg.learning_rate = 0.05;
  cfg.seed = 7;
  cfg.buckets = 512;
  cfg.dim = 16;
  cfg.encoder_name = "hashed-embed-test";
  return cfg;
}

double test_accuracy(const DataBundle& bundle, const RunResult& run) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < bundle.test.size(); ++i) {
    if (run.test_predictions[i].predicted == bundle.test[i].gold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(bundle.test.size());
}

}  // namespace

TEST_CASE("build_encoder_input renders the three variants") {
  auto ex = make_example("e1", "T");
  auto cot = make_cot("e1", "Lets think. [YES] done.");

  SUBCASE("tweet only with topic injection") {
    auto input = build_encoder_input(ex, std::nullopt, InputVariant::TweetOnly, true);
    CHECK(input.segment_a == "Topic: Atheism. Tweet: T");
    CHECK(!input.segment_b.has_value());
  }
  SUBCASE("tweet only without topic injection") {
    auto input = build_encoder_input(ex, std::nullopt, InputVariant::TweetOnly, false);
    CHECK(input.segment_a == "T");
  }
  SUBCASE("cot only passes the raw completion through byte for byte") {
    auto input = build_encoder_input(ex, cot, InputVariant::CotOnly, true);
    CHECK(input.segment_a == cot.raw_completion);
    CHECK(!input.segment_b.has_value());
  }
  SUBCASE("tweet plus cot carries both segments") {
    auto input = build_encoder_input(ex, cot, InputVariant::TweetPlusCot, true);
    CHECK(input.segment_a == "Topic: Atheism. Tweet: T");
    REQUIRE(input.segment_b.has_value());
    CHECK(*input.segment_b == cot.raw_completion);
  }
  SUBCASE("missing COT for a COT-bearing variant is an error") {
    CHECK_THROWS_AS(build_encoder_input(ex, std::nullopt, InputVariant::CotOnly, false),
                    PipelineError);
    CHECK_THROWS_AS(build_encoder_input(ex, make_cot("e1", ""), InputVariant::TweetPlusCot, false),
                    PipelineError);
  }
}

TEST_CASE("golden encoder inputs for a three-example fixture") {
  auto registry = TopicRegistry::builtin();
  StanceExample hc = make_example("f1", "she has my vote");
  hc.topic = registry.require("HC");
  auto in1 = build_encoder_input(hc, std::nullopt, InputVariant::TweetOnly, true);
  CHECK(in1.segment_a == "Topic: Hillary Clinton. Tweet: she has my vote");

  auto in2 = build_encoder_input(make_example("f2", "B"), make_cot("f2", "[NO] reasoning"),
                                 InputVariant::TweetPlusCot, true);
  CHECK(in2.segment_a == "Topic: Atheism. Tweet: B");
  CHECK(*in2.segment_b == "[NO] reasoning");

  auto in3 = build_encoder_input(make_example("f3", "C"), make_cot("f3", "[NONE] text"),
                                 InputVariant::CotOnly, true);
  CHECK(in3.segment_a == "[NONE] text");
}

TEST_CASE("early stopping controller follows the scripted-metric contract") {
  // improves at epochs 1 and 2, then plateaus; patience = 2
  EarlyStopping es(2);
  CHECK(!es.observe(0.5));  // epoch 1, improvement
  CHECK(!es.observe(0.7));  // epoch 2, improvement
  CHECK(!es.observe(0.7));  // epoch 3, stagnant x1 (not strictly better)
  CHECK(es.observe(0.7));   // epoch 4, stagnant x2 -> stop
  CHECK(es.best_epoch() == 2);
  CHECK(es.best_metric() == 0.7);
  CHECK(es.epochs_seen() == 4);
}

TEST_CASE("early stopping never reports a best metric worse than observed") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    EarlyStopping es(1 + rng() % 3);
    double max_seen = 0;
    for (int epoch = 0; epoch < 12; ++epoch) {
      double metric = (rng() % 100) / 100.0;
      max_seen = std::max(max_seen, metric);
      if (es.observe(metric)) break;
    }
    CHECK(es.best_metric() == max_seen);
  }
}

TEST_CASE("lr selection takes the best metric, ties to the smaller rate") {
  CHECK(select_best_lr({{1e-3, 0.5}, {1e-4, 0.7}, {2e-5, 0.7}, {5e-5, 0.6}}) == 2e-5);
  CHECK(select_best_lr({{1e-3, 0.9}, {1e-4, 0.7}}) == 1e-3);
  CHECK(select_best_lr({{1e-4, 0.42}}) == 1e-4);
  CHECK_THROWS_AS(select_best_lr({}), PipelineError);
}

TEST_CASE("training reaches accuracy 1.0 on the separable toy set") {
  auto bundle = toy_bundle();
  auto run = train(bundle, toy_config());
  CHECK(run.test_predictions.size() == bundle.test.size());
  CHECK(test_accuracy(bundle, run) == 1.0);
}

TEST_CASE("same seed, same config: identical predictions") {
  auto bundle = toy_bundle();
  auto cfg = toy_config();
  auto a = train(bundle, cfg);
  auto b = train(bundle, cfg);
  REQUIRE(a.test_predictions.size() == b.test_predictions.size());
  for (std::size_t i = 0; i < a.test_predictions.size(); ++i) {
    CHECK(a.test_predictions[i].predicted == b.test_predictions[i].predicted);
    CHECK((a.test_predictions[i].scores - b.test_predictions[i].scores).norm() == 0.0);
  }
  CHECK(a.encoder_revision == b.encoder_revision);
}

TEST_CASE("early stopping in train() records history and restores the best checkpoint") {
  auto bundle = toy_bundle();
  auto cfg = toy_config();
  cfg.early_stopping = EarlyStoppingConfig{2, "accuracy"};
  auto run = train(bundle, cfg);
  CHECK(!run.dev_history.empty());
  CHECK(run.dev_history.size() <= static_cast<std::size_t>(cfg.max_epochs));
  // rerun with an artifact dir so the restored checkpoint can be reloaded
  auto run_dir = fs::temp_directory_path() / "cotemb_es_run";
  fs::remove_all(run_dir);
  run = train(bundle, cfg, run_dir);
  double best = *std::max_element(run.dev_history.begin(), run.dev_history.end());
  std::vector<StanceLabel> gold, pred;
  StanceClassifier model = StanceClassifier::load(run.model_artifact);
  auto restored = predict_all(model, bundle.dev, cfg.max_sequence_length);
  for (std::size_t i = 0; i < bundle.dev.size(); ++i) {
    gold.push_back(bundle.dev[i].gold);
    pred.push_back(restored[i].predicted);
  }
  CHECK(compute_metric("accuracy", gold, pred) == doctest::Approx(best));
}

TEST_CASE("without a dev split training runs exactly max_epochs") {
  auto bundle = toy_bundle();
  bundle.dev.clear();
  auto cfg = toy_config();
  cfg.max_epochs = 5;
  cfg.learning_rate = 0.15;
  auto run = train(bundle, cfg);
  CHECK(run.dev_history.empty());
  CHECK(test_accuracy(bundle, run) == 1.0);

  cfg.early_stopping = EarlyStoppingConfig{2, "accuracy"};
  CHECK_THROWS_AS(train(bundle, cfg), PipelineError);
}

TEST_CASE("train input validation") {
  auto bundle = toy_bundle();
  auto cfg = toy_config();
  SUBCASE("empty training set") {
    bundle.train.clear();
    CHECK_THROWS_AS(train(bundle, cfg), PipelineError);
  }
  SUBCASE("lr and grid are mutually exclusive") {
    cfg.lr_grid = {1e-3};
    CHECK_THROWS_AS(train(bundle, cfg), PipelineError);
    cfg.learning_rate.reset();
    cfg.lr_grid.clear();
    CHECK_THROWS_AS(train(bundle, cfg), PipelineError);
  }
}

TEST_CASE("grid search of one value is identical to train") {
  auto bundle = toy_bundle();
  auto cfg = toy_config();
  auto direct = train(bundle, cfg);

  auto grid_cfg = cfg;
  grid_cfg.learning_rate.reset();
  grid_cfg.lr_grid = {*cfg.learning_rate};
  grid_cfg.early_stopping = EarlyStoppingConfig{2, "accuracy"};
  auto direct_es = cfg;
  direct_es.early_stopping = grid_cfg.early_stopping;
  auto wanted = train(bundle, direct_es);

  auto picked = grid_search_lr(bundle, grid_cfg);
  CHECK(picked.chosen_lr == *cfg.learning_rate);
  REQUIRE(picked.test_predictions.size() == wanted.test_predictions.size());
  for (std::size_t i = 0; i < wanted.test_predictions.size(); ++i) {
    CHECK(picked.test_predictions[i].predicted == wanted.test_predictions[i].predicted);
  }
}

TEST_CASE("full grid on the toy set picks the dev-metric argmax") {
  auto bundle = toy_bundle();
  auto cfg = toy_config();
  cfg.learning_rate.reset();
  cfg.lr_grid = {1e-3, 1e-4, 2e-5, 5e-5};
  cfg.early_stopping = EarlyStoppingConfig{2, "accuracy"};
  auto picked = grid_search_lr(bundle, cfg);

  // oracle: rerun each grid point independently and recompute its dev metric
  std::vector<std::pair<double, double>> lr_to_metric;
  for (double lr : cfg.lr_grid) {
    auto point = cfg;
    point.lr_grid.clear();
    point.learning_rate = lr;
    auto run = train(bundle, point);
    lr_to_metric.emplace_back(lr,
                              *std::max_element(run.dev_history.begin(), run.dev_history.end()));
  }
  CHECK(picked.chosen_lr == select_best_lr(lr_to_metric));

  SUBCASE("empty grid is rejected") {
    cfg.lr_grid.clear();
    cfg.learning_rate = 1e-3;
    CHECK_THROWS_AS(grid_search_lr(bundle, cfg), PipelineError);
  }
  SUBCASE("grid search needs a dev split") {
    bundle.dev.clear();
    CHECK_THROWS_AS(grid_search_lr(bundle, cfg), PipelineError);
  }
}

TEST_CASE("multi-seed runs are independent and ordered by seed") {
  auto bundle = toy_bundle();
  auto cfg = toy_config();
  SUBCASE("single seed") {
    auto runs = multi_seed_run(bundle, cfg, {9});
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].config.seed == 9);
  }
  SUBCASE("three seeds on separable data all reach full accuracy") {
    auto runs = multi_seed_run(bundle, cfg, {3, 1, 2});
    REQUIRE(runs.size() == 3);
    CHECK(runs[0].config.seed == 1);
    CHECK(runs[1].config.seed == 2);
    CHECK(runs[2].config.seed == 3);
    std::vector<double> accs;
    for (const auto& run : runs) accs.push_back(test_accuracy(bundle, run));
    for (double a : accs) CHECK(a == 1.0);
    auto agg = aggregate(accs, "accuracy");
    CHECK(agg.mean == 1.0);
    CHECK(agg.std_dev == 0.0);
  }
  SUBCASE("duplicate seeds are rejected") {
    CHECK_THROWS_AS(multi_seed_run(bundle, cfg, {1, 1}), PipelineError);
  }
}

TEST_CASE("sequence overflow truncates the longer segment first and is counted") {
  DataBundle bundle = toy_bundle(12, 0, 6);
  // attach a long segment_b to every input
  std::string long_cot;
  for (int i = 0; i < 300; ++i) long_cot += "word" + std::to_string(i) + " ";
  for (auto* split : {&bundle.train, &bundle.test}) {
    for (auto& li : *split) {
      li.input.variant = InputVariant::TweetPlusCot;
      li.input.segment_b = long_cot;
    }
  }
  auto cfg = toy_config();
  cfg.max_sequence_length = 32;
  cfg.learning_rate = 0.15;
  auto run = train(bundle, cfg);
  CHECK(run.truncated_inputs == bundle.train.size() + bundle.test.size());
  // the short tweet segment survives truncation, so the toy set still separates
  CHECK(test_accuracy(bundle, run) == 1.0);
}

TEST_CASE("prediction records argmax with fixed-order tie-break") {
  // tie-break favors the earlier label in Favor < Against < Neutral
  StanceClassifier model("tie-test", 64, 4, 1);
  model.head_weight().setZero();
  model.head_bias().setZero();  // all logits equal -> Favor
  CHECK(model.predict({1, 2}, {}) == StanceLabel::Favor);
  model.head_bias() << 0.0, 1.0, 1.0;  // Against and Neutral tie above Favor
  CHECK(model.predict({1, 2}, {}) == StanceLabel::Against);
}

TEST_CASE("run directory artifacts round-trip") {
  auto bundle = toy_bundle();
  auto cfg = toy_config();
  auto run_dir = fs::temp_directory_path() / "cotemb_run_artifacts";
  fs::remove_all(run_dir);
  auto run = train(bundle, cfg, run_dir);
  CHECK(fs::exists(run_dir / "config.json"));
  CHECK(fs::exists(run_dir / "epochs.jsonl"));
  CHECK(fs::exists(run_dir / "model.bin"));
  auto loaded = read_predictions(run_dir / "predictions.tsv");
  REQUIRE(loaded.size() == run.test_predictions.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].example_id == run.test_predictions[i].example_id);
    CHECK(loaded[i].predicted == run.test_predictions[i].predicted);
    CHECK((loaded[i].scores - run.test_predictions[i].scores).norm() == 0.0);  // %.17g is lossless
  }
}
