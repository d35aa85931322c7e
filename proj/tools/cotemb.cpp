// Experiment pipeline driver: prepare data, generate and cache COT
// reasonings, fine-tune the encoder variants, evaluate and analyze.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cotemb/analysis.hpp"
#include "cotemb/corpus.hpp"
#include "cotemb/cot_parser.hpp"
#include "cotemb/encoder_pipeline.hpp"
#include "cotemb/evaluation.hpp"
#include "cotemb/http_backend.hpp"
#include "cotemb/llm_gateway.hpp"
#include "cotemb/prompting.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cotemb;

namespace {

struct Experiment {
  fs::path config_path;
  Dataset dataset = Dataset::TweetStance;
  std::vector<std::string> topic_ids;
  fs::path data_file;
  fs::path out_dir;
  fs::path topics_file;     // empty -> builtin registry
  fs::path template_file;   // empty -> in-tree asset
  fs::path exemplars_file;  // empty -> in-tree asset
  fs::path cache_file;
  std::map<std::string, VocabularyVariant> vocab_by_topic;
  VocabularyVariant default_vocab = VocabularyVariant::YesNoNone;
  int shots = 1;
  StanceLabel fallback = StanceLabel::Neutral;
  bool inject_topic = true;

  std::string backend_kind = "stub";  // stub | http
  fs::path stub_fixture;
  std::string http_base_url;
  std::string http_path = "/v1/chat/completions";
  BackendConfig backend;

  TrainConfig train_template;
  std::vector<std::uint64_t> seeds = {1};
  std::vector<InputVariant> variants = {InputVariant::TweetOnly};
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

Experiment load_experiment(const fs::path& config_path) {
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config: " + config_path.string());
  json doc = json::parse(in);
  fs::path base = config_path.parent_path();

  Experiment exp;
  exp.config_path = config_path;
  exp.dataset = dataset_from_string(doc.at("dataset").get<std::string>());
  for (const auto& t : doc.at("topics")) exp.topic_ids.push_back(t.get<std::string>());
  exp.data_file = resolve(base, doc.at("data_file").get<std::string>());
  exp.out_dir = resolve(base, doc.value("out_dir", std::string("out")));
  if (doc.contains("topics_file")) {
    exp.topics_file = resolve(base, doc["topics_file"].get<std::string>());
  }
  if (doc.contains("template_file")) {
    exp.template_file = resolve(base, doc["template_file"].get<std::string>());
  }
  if (doc.contains("exemplars_file")) {
    exp.exemplars_file = resolve(base, doc["exemplars_file"].get<std::string>());
  }
  if (doc.contains("cache_file")) {
    exp.cache_file = resolve(base, doc["cache_file"].get<std::string>());
  }
  if (doc.contains("vocabulary")) {
    for (auto& [key, value] : doc["vocabulary"].items()) {
      auto variant = vocabulary_variant_from_string(value.get<std::string>());
      if (key == "default") {
        exp.default_vocab = variant;
      } else {
        exp.vocab_by_topic[key] = variant;
      }
    }
  }
  exp.shots = doc.value("shots", 1);
  if (doc.contains("fallback_label")) {
    exp.fallback = normalize_label(doc["fallback_label"].get<std::string>());
  }
  exp.inject_topic = doc.value("inject_topic", true);

  if (doc.contains("backend")) {
    const auto& b = doc["backend"];
    exp.backend_kind = b.value("kind", std::string("stub"));
    exp.backend.backend_id = b.value("backend_id", exp.backend_kind);
    exp.backend.model_name = b.value("model_name", std::string("stub-model"));
    exp.backend.temperature = b.value("temperature", 0.0);
    exp.backend.max_tokens = b.value("max_tokens", 512);
    exp.backend.request_timeout_s = b.value("request_timeout", 60.0);
    exp.backend.max_attempts = b.value("max_attempts", 3);
    exp.backend.backoff_base_s = b.value("backoff_base", 1.0);
    exp.backend.max_in_flight = b.value("max_in_flight", 4);
    exp.backend.credentials_env = b.value("credentials_env", std::string());
    if (b.contains("stub_fixture")) {
      exp.stub_fixture = resolve(base, b["stub_fixture"].get<std::string>());
    }
    exp.http_base_url = b.value("base_url", std::string());
    exp.http_path = b.value("path", exp.http_path);
  } else {
    exp.backend.backend_id = "stub";
    exp.backend.model_name = "stub-model";
  }

  if (doc.contains("train")) {
    const auto& t = doc["train"];
    TrainConfig& cfg = exp.train_template;
    cfg.dataset = exp.dataset;
    cfg.batch_size = t.value("batch_size", 16);
    cfg.max_epochs = t.value("max_epochs", 10);
    if (t.contains("patience")) {
      cfg.early_stopping =
          EarlyStoppingConfig{t["patience"].get<int>(),
                              t.value("metric", std::string("tweeteval_f1"))};
    }
    if (t.contains("learning_rate")) cfg.learning_rate = t["learning_rate"].get<double>();
    if (t.contains("lr_grid")) {
      for (const auto& lr : t["lr_grid"]) cfg.lr_grid.push_back(lr.get<double>());
    }
    if (!cfg.learning_rate && cfg.lr_grid.empty()) cfg.learning_rate = 2e-5;
    cfg.encoder_name = t.value("encoder_name", std::string("hashed-embed-32"));
    cfg.max_sequence_length = t.value("max_sequence_length", 256);
    cfg.buckets = t.value("buckets", 4096);
    cfg.dim = t.value("dim", 32);
    cfg.weight_decay = t.value("weight_decay", 0.01);
    if (t.contains("seeds")) {
      exp.seeds.clear();
      for (const auto& s : t["seeds"]) exp.seeds.push_back(s.get<std::uint64_t>());
    }
    if (t.contains("variants")) {
      exp.variants.clear();
      for (const auto& v : t["variants"]) {
        exp.variants.push_back(input_variant_from_string(v.get<std::string>()));
      }
    }
  } else {
    exp.train_template.learning_rate = 2e-5;
  }
  return exp;
}

TopicRegistry registry_of(const Experiment& exp) {
  return exp.topics_file.empty() ? TopicRegistry::builtin() : TopicRegistry::load(exp.topics_file);
}

PromptTemplate template_of(const Experiment& exp) {
  return exp.template_file.empty() ? PromptTemplate::load_default()
                                   : PromptTemplate::load(exp.template_file);
}

fs::path exemplars_path(const Experiment& exp) {
  return exp.exemplars_file.empty()
             ? fs::path(COTEMB_SOURCE_DIR) / "assets" / "exemplars.tsv"
             : exp.exemplars_file;
}

LabelVocabulary vocabulary_for_topic(const Experiment& exp, const std::string& topic_id) {
  auto it = exp.vocab_by_topic.find(topic_id);
  return LabelVocabulary::of(it != exp.vocab_by_topic.end() ? it->second : exp.default_vocab);
}

// Commands must never leave half-written outputs: write then rename.
void atomic_write(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void snapshot_config(const Experiment& exp) {
  std::ifstream in(exp.config_path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  atomic_write(exp.out_dir / "experiment_config.json", buf.str());
}

fs::path prepared_path(const Experiment& exp, Split split) {
  return exp.out_dir / "prepared" / (std::string(to_string(split)) + ".tsv");
}

void require_artifact(const fs::path& path, const std::string& producing_command) {
  if (!fs::exists(path)) {
    throw std::runtime_error("missing " + path.string() + "; run `cotemb " + producing_command +
                             "` first");
  }
}

std::vector<StanceExample> load_prepared(const Experiment& exp, Split split,
                                         const TopicRegistry& registry,
                                         const std::string& producing_command = "prepare") {
  auto path = prepared_path(exp, split);
  require_artifact(path, producing_command);
  return load_dataset(exp.dataset, split, path, registry);
}

std::unique_ptr<CompletionBackend> make_backend(const Experiment& exp) {
  if (exp.backend_kind == "stub") {
    if (!exp.stub_fixture.empty()) return StubBackend::from_fixture(exp.stub_fixture);
    return std::make_unique<StubBackend>();
  }
  if (exp.backend_kind == "http") {
    if (exp.http_base_url.empty()) {
      throw std::runtime_error("http backend needs backend.base_url in the config");
    }
    return std::make_unique<HttpChatBackend>(exp.http_base_url, exp.http_path, exp.backend);
  }
  throw std::runtime_error("unknown backend kind: " + exp.backend_kind);
}

std::string distribution_line(const std::map<StanceLabel, std::size_t>& counts) {
  std::ostringstream line;
  line << "favor=" << counts.at(StanceLabel::Favor)
       << " against=" << counts.at(StanceLabel::Against)
       << " neutral=" << counts.at(StanceLabel::Neutral);
  return line.str();
}

int cmd_prepare(const Experiment& exp) {
  auto registry = registry_of(exp);
  snapshot_config(exp);
  json summary;
  for (Split split : {Split::Train, Split::Dev, Split::Test}) {
    auto examples = load_dataset(exp.dataset, split, exp.data_file, registry);
    // keep only the configured topics
    std::vector<StanceExample> kept;
    for (const auto& ex : examples) {
      if (std::find(exp.topic_ids.begin(), exp.topic_ids.end(), ex.topic.id) !=
          exp.topic_ids.end()) {
        kept.push_back(ex);
      }
    }
    fs::path out = prepared_path(exp, split);
    fs::create_directories(out.parent_path());
    fs::path tmp = out;
    tmp += ".tmp";
    save_dataset(tmp, kept);
    fs::rename(tmp, out);

    auto counts = class_distribution(kept);
    std::cout << to_string(split) << ": " << kept.size() << " examples ("
              << distribution_line(counts) << ")\n";
    json split_summary;
    split_summary["count"] = kept.size();
    split_summary["favor"] = counts[StanceLabel::Favor];
    split_summary["against"] = counts[StanceLabel::Against];
    split_summary["neutral"] = counts[StanceLabel::Neutral];
    for (const auto& topic_id : exp.topic_ids) {
      std::vector<StanceExample> of_topic;
      for (const auto& ex : kept) {
        if (ex.topic.id == topic_id) of_topic.push_back(ex);
      }
      auto topic_counts = class_distribution(of_topic);
      split_summary["topics"][topic_id] = {{"count", of_topic.size()},
                                           {"favor", topic_counts[StanceLabel::Favor]},
                                           {"against", topic_counts[StanceLabel::Against]},
                                           {"neutral", topic_counts[StanceLabel::Neutral]}};
    }
    summary[std::string(to_string(split))] = split_summary;
  }
  atomic_write(exp.out_dir / "prepare_summary.json", summary.dump(2) + "\n");
  return 0;
}

struct CotBatch {
  std::vector<CotRecord> records;                 // keyed below
  std::map<std::string, CotRecord> by_example;    // example_id -> record
  std::map<std::string, ParseResult> parses;      // example_id -> parse
};

std::optional<CotExemplar> exemplar_for(const Experiment& exp, const std::string& topic_id,
                                        const std::map<std::string, CotExemplar>& exemplars) {
  if (exp.shots == 0) return std::nullopt;
  auto it = exemplars.find(topic_id);
  if (it == exemplars.end()) {
    throw std::runtime_error("no 1-shot exemplar registered for topic " + topic_id);
  }
  return it->second;
}

// Runs ensure_cot topic by topic (vocabulary and exemplar are per-topic) and
// parses every completion under its topic's vocabulary.
CotBatch gather_cot(const Experiment& exp, std::span<const StanceExample> examples,
                    CompletionBackend& backend, CotCache& cache, EnsureCotResult& totals) {
  auto tmpl = template_of(exp);
  auto exemplars = load_exemplars(exemplars_path(exp));
  std::map<std::string, std::vector<StanceExample>> by_topic;
  for (const auto& ex : examples) by_topic[ex.topic.id].push_back(ex);

  CotBatch batch;
  for (const auto& [topic_id, group] : by_topic) {
    auto vocabulary = vocabulary_for_topic(exp, topic_id);
    auto exemplar = exemplar_for(exp, topic_id, exemplars);
    auto result = ensure_cot(group, vocabulary, exemplar, tmpl, exp.backend, backend, cache);
    totals.cache_hits += result.cache_hits;
    totals.backend_calls += result.backend_calls;
    for (auto& failure : result.failures) totals.failures.push_back(std::move(failure));
    for (auto& rec : result.records) {
      batch.parses[rec.example_id] = parse_label(rec.raw_completion, vocabulary);
      batch.by_example[rec.example_id] = rec;
      batch.records.push_back(std::move(rec));
    }
  }
  return batch;
}

int cmd_generate_cot(const Experiment& exp) {
  auto registry = registry_of(exp);
  snapshot_config(exp);
  std::vector<StanceExample> all;
  for (Split split : {Split::Train, Split::Dev, Split::Test}) {
    auto examples = load_prepared(exp, split, registry);
    all.insert(all.end(), examples.begin(), examples.end());
  }
  fs::create_directories(exp.cache_file.parent_path());
  CotCache cache(exp.cache_file);
  auto backend = make_backend(exp);
  EnsureCotResult totals;
  auto batch = gather_cot(exp, all, *backend, cache, totals);

  std::map<ParseStatus, std::size_t> status_counts;
  for (const auto& [_, parse] : batch.parses) ++status_counts[parse.status];
  std::cout << totals.backend_calls << " new requests, " << totals.cache_hits
            << " cache hits\n";
  for (const auto& [status, count] : status_counts) {
    std::cout << "parse status " << to_string(status) << ": " << count << "\n";
  }

  if (!totals.failures.empty()) {
    json manifest = json::array();
    for (const auto& failure : totals.failures) {
      manifest.push_back({{"example_id", failure.example_id}, {"error", failure.message}});
    }
    atomic_write(exp.out_dir / "cot_failures.json", manifest.dump(2) + "\n");
    std::cerr << totals.failures.size()
              << " requests failed; partial manifest written to cot_failures.json; rerun to "
                 "resume from the cache\n";
    return 1;
  }
  return 0;
}

std::vector<InputVariant> selected_variants(const Experiment& exp,
                                            const std::string& variant_override) {
  if (variant_override.empty()) return exp.variants;
  return {input_variant_from_string(variant_override)};
}

DataBundle build_bundle(const Experiment& exp, InputVariant variant,
                        const TopicRegistry& registry, CotBatch* batch) {
  DataBundle bundle;
  auto fill = [&](Split split, std::vector<LabeledInput>& target) {
    auto examples = load_prepared(exp, split, registry);
    if (split == Split::Train) {
      std::vector<Topic> topics;
      for (const auto& id : exp.topic_ids) topics.push_back(registry.require(id));
      examples = aggregate_training_set(examples, topics);
    }
    for (const auto& ex : examples) {
      std::optional<CotRecord> cot;
      if (variant != InputVariant::TweetOnly) {
        auto it = batch->by_example.find(ex.example_id);
        if (it == batch->by_example.end()) {
          throw std::runtime_error("no cached COT for example " + ex.example_id +
                                   "; run `cotemb generate-cot` first");
        }
        cot = it->second;
      }
      LabeledInput li;
      li.input = build_encoder_input(ex, cot, variant, exp.inject_topic);
      li.gold = ex.gold;
      target.push_back(std::move(li));
    }
  };
  fill(Split::Train, bundle.train);
  fill(Split::Dev, bundle.dev);
  fill(Split::Test, bundle.test);
  return bundle;
}

// COT completions come from the cache only; any missing key is an error that
// names the generating stage.
CotBatch cached_cot(const Experiment& exp, const TopicRegistry& registry) {
  require_artifact(exp.cache_file, "generate-cot");
  std::vector<StanceExample> all;
  for (Split split : {Split::Train, Split::Dev, Split::Test}) {
    auto examples = load_prepared(exp, split, registry);
    all.insert(all.end(), examples.begin(), examples.end());
  }
  CotCache cache(exp.cache_file);
  StubBackend never_called("unreachable");
  Experiment read_only = exp;
  read_only.backend.max_attempts = 1;
  EnsureCotResult totals;
  auto batch = gather_cot(read_only, all, never_called, cache, totals);
  if (!totals.failures.empty() || never_called.calls() > 0) {
    throw std::runtime_error("COT cache is incomplete; run `cotemb generate-cot` first");
  }
  return batch;
}

int cmd_train(const Experiment& exp, const std::string& variant_override) {
  auto registry = registry_of(exp);
  snapshot_config(exp);
  std::optional<CotBatch> batch;
  for (InputVariant variant : selected_variants(exp, variant_override)) {
    if (variant != InputVariant::TweetOnly && !batch) batch = cached_cot(exp, registry);
    auto bundle = build_bundle(exp, variant, registry, batch ? &*batch : nullptr);
    TrainConfig cfg = exp.train_template;
    cfg.variant = variant;
    fs::path run_root = exp.out_dir / "runs" / std::string(to_string(variant));
    auto runs = multi_seed_run(bundle, cfg, exp.seeds, run_root);
    for (const auto& run : runs) {
      std::cout << to_string(variant) << " seed " << run.config.seed << ": lr "
                << run.chosen_lr << ", " << run.dev_history.size() << " dev epochs, "
                << run.truncated_inputs << " truncated inputs -> " << run.model_artifact
                << "\n";
    }
  }
  return 0;
}

int cmd_evaluate(const Experiment& exp, const std::string& variant_override) {
  auto registry = registry_of(exp);
  snapshot_config(exp);
  auto test_examples = load_prepared(exp, Split::Test, registry);
  std::map<std::string, StanceLabel> gold_by_id;
  std::vector<StanceLabel> gold;
  for (const auto& ex : test_examples) {
    gold_by_id[ex.example_id] = ex.gold;
    gold.push_back(ex.gold);
  }
  const std::string headline =
      exp.dataset == Dataset::TweetStance ? "tweeteval_f1" : "macro_f1";

  std::ostringstream table;
  std::ostringstream jsonl;
  table << "model\t" << headline << "\tmean\tstd\n";

  // the parsed-COT baseline row, straight from the cache
  auto batch = cached_cot(exp, registry);
  PredictionCounts counts;
  std::vector<StanceLabel> cot_preds;
  for (const auto& ex : test_examples) {
    auto it = batch.parses.find(ex.example_id);
    if (it == batch.parses.end()) {
      throw std::runtime_error("no cached COT for test example " + ex.example_id +
                               "; run `cotemb generate-cot` first");
    }
    Prediction p = to_prediction(it->second, exp.fallback);
    (p.used_fallback ? counts.fallback : counts.parsed)++;
    cot_preds.push_back(p.label);
  }
  auto cot_report = f1_report(gold, cot_preds);
  table << "cot-parsed\t" << 100 * cot_report.metric(headline) << "\t-\t-\n";
  json cot_row;
  cot_row["model"] = "cot-parsed";
  cot_row["dataset"] = std::string(to_string(exp.dataset));
  cot_row[headline] = cot_report.metric(headline);
  cot_row["macro_f1"] = cot_report.macro_f1;
  cot_row["fallback_predictions"] = counts.fallback;
  jsonl << cot_row.dump() << "\n";

  for (InputVariant variant : selected_variants(exp, variant_override)) {
    std::vector<double> per_seed;
    for (std::uint64_t seed : exp.seeds) {
      fs::path run_dir =
          exp.out_dir / "runs" / std::string(to_string(variant)) / ("seed_" + std::to_string(seed));
      require_artifact(run_dir / "predictions.tsv", "train");
      auto predictions = read_predictions(run_dir / "predictions.tsv");
      std::vector<StanceLabel> run_gold, run_pred;
      for (const auto& rec : predictions) {
        auto it = gold_by_id.find(rec.example_id);
        if (it == gold_by_id.end()) {
          throw std::runtime_error("prediction for unknown example " + rec.example_id);
        }
        run_gold.push_back(it->second);
        run_pred.push_back(rec.predicted);
      }
      auto report = f1_report(run_gold, run_pred);
      per_seed.push_back(report.metric(headline));

      json row;
      row["model"] = std::string(to_string(variant));
      row["dataset"] = std::string(to_string(exp.dataset));
      row["seed"] = seed;
      row[headline] = report.metric(headline);
      row["macro_f1"] = report.macro_f1;
      for (StanceLabel label : kLabelOrder) {
        row["per_class"][std::string(to_string(label))] = {
            {"precision", report.per_class[label].precision},
            {"recall", report.per_class[label].recall},
            {"f1", report.per_class[label].f1},
            {"support", report.support[label]}};
      }
      jsonl << row.dump() << "\n";
    }
    auto agg = aggregate(per_seed, headline);
    table << to_string(variant) << "\t";
    for (std::size_t i = 0; i < per_seed.size(); ++i) {
      table << (i ? "," : "") << 100 * per_seed[i];
    }
    table << "\t" << 100 * agg.mean << "\t" << 100 * agg.std_dev << "\n";
    json agg_row;
    agg_row["model"] = std::string(to_string(variant));
    agg_row["dataset"] = std::string(to_string(exp.dataset));
    agg_row["metric"] = headline;
    agg_row["per_seed"] = agg.per_seed_values;
    agg_row["mean"] = agg.mean;
    agg_row["std"] = agg.std_dev;
    agg_row["sample_std"] = agg.sample_std;
    jsonl << agg_row.dump() << "\n";
  }

  std::cout << table.str();
  atomic_write(exp.out_dir / "report.txt", table.str());
  atomic_write(exp.out_dir / "report.jsonl", jsonl.str());
  return 0;
}

int cmd_analyze(const Experiment& exp, const std::string& variant_override) {
  auto registry = registry_of(exp);
  snapshot_config(exp);
  InputVariant variant = selected_variants(exp, variant_override).front();
  std::uint64_t seed = *std::min_element(exp.seeds.begin(), exp.seeds.end());
  fs::path run_dir =
      exp.out_dir / "runs" / std::string(to_string(variant)) / ("seed_" + std::to_string(seed));
  require_artifact(run_dir / "predictions.tsv", "train");
  auto predictions = read_predictions(run_dir / "predictions.tsv");
  std::map<std::string, StanceLabel> encoder_by_id;
  for (const auto& rec : predictions) encoder_by_id[rec.example_id] = rec.predicted;

  auto batch = cached_cot(exp, registry);
  auto test_examples = load_prepared(exp, Split::Test, registry);
  std::vector<AlignedPrediction> aligned;
  for (const auto& ex : test_examples) {
    auto enc = encoder_by_id.find(ex.example_id);
    if (enc == encoder_by_id.end()) {
      throw std::runtime_error("no encoder prediction for " + ex.example_id +
                               "; run `cotemb train` first");
    }
    auto parse = batch.parses.find(ex.example_id);
    if (parse == batch.parses.end()) {
      throw std::runtime_error("no cached COT for " + ex.example_id +
                               "; run `cotemb generate-cot` first");
    }
    AlignedPrediction p;
    p.example_id = ex.example_id;
    p.gold = ex.gold;
    p.encoder_pred = enc->second;
    p.cot_pred = to_prediction(parse->second, exp.fallback).label;
    p.cot_parse_status = parse->second.status;
    p.raw_cot_text = batch.by_example.at(ex.example_id).raw_completion;
    aligned.push_back(std::move(p));
  }

  auto set = disagreement_set(aligned);
  auto rate = neutral_error_rate(set);
  std::map<DisagreementCategory, std::size_t> by_category;
  for (const auto& rec : set) ++by_category[rec.category];

  std::cout << "disagreement set: " << set.size() << " samples\n";
  for (const auto& [category, count] : by_category) {
    std::cout << "  " << to_string(category) << ": " << count << "\n";
  }
  char percent[64];
  std::snprintf(percent, sizeof percent, "%.0f%% (%zu/%zu)", 100.0 * rate.fraction,
                rate.numerator, rate.denominator);
  std::cout << "incorrectly-neutral share: " << percent << "\n";

  export_for_review(set, exp.out_dir / "review.tsv");

  json summary;
  summary["variant"] = std::string(to_string(variant));
  summary["seed"] = seed;
  summary["disagreements"] = set.size();
  summary["neutral_errors"] = rate.numerator;
  summary["neutral_error_fraction"] = rate.fraction;
  summary["neutral_error_display"] = percent;
  for (const auto& [category, count] : by_category) {
    summary["categories"][std::string(to_string(category))] = count;
  }
  atomic_write(exp.out_dir / "analysis.json", summary.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"COT-embedding stance detection pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // shared flags may follow the subcommand

  std::string config_path;
  std::string out_override;
  std::string backend_override;
  std::string variant_override;
  std::int64_t seed_override = -1;

  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--out", out_override, "override the output directory");
  app.add_option("--backend", backend_override, "override the backend id (stub|http)");
  app.add_option("--seed", seed_override, "run a single seed only");
  app.add_option("--variant", variant_override, "restrict to one variant")
      ->check(CLI::IsMember({"tweet", "cot", "tweet+cot"}));

  auto* prepare = app.add_subcommand("prepare", "validate and canonicalize the dataset");
  auto* generate = app.add_subcommand("generate-cot", "generate and cache COT reasonings");
  auto* train_cmd = app.add_subcommand("train", "fine-tune the encoder variants");
  auto* evaluate = app.add_subcommand("evaluate", "compute metric reports");
  auto* analyze = app.add_subcommand("analyze", "encoder-vs-COT disagreement analysis");

  CLI11_PARSE(app, argc, argv);

  try {
    Experiment exp = load_experiment(config_path);
    if (!out_override.empty()) exp.out_dir = fs::absolute(out_override);
    if (!backend_override.empty()) {
      exp.backend_kind = backend_override;
      exp.backend.backend_id = backend_override;
    }
    if (seed_override >= 0) exp.seeds = {static_cast<std::uint64_t>(seed_override)};
    if (exp.cache_file.empty()) exp.cache_file = exp.out_dir / "cot_cache.jsonl";

    if (prepare->parsed()) return cmd_prepare(exp);
    if (generate->parsed()) return cmd_generate_cot(exp);
    if (train_cmd->parsed()) return cmd_train(exp, variant_override);
    if (evaluate->parsed()) return cmd_evaluate(exp, variant_override);
    if (analyze->parsed()) return cmd_analyze(exp, variant_override);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
