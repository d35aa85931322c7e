#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <random>

#include "cotemb/corpus.hpp"

using namespace cotemb;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  auto p = fs::temp_directory_path() / ("cotemb_corpus_" + name);
  fs::remove(p);
  return p;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("normalize_label maps every alias and rejects the rest") {
  // The full alias table, round-tripped case-insensitively.
  const std::vector<std::pair<std::string, StanceLabel>> aliases = {
      {"FAVOR", StanceLabel::Favor},     {"IN FAVOR", StanceLabel::Favor},
      {"YES", StanceLabel::Favor},       {"AGAINST", StanceLabel::Against},
      {"NO", StanceLabel::Against},      {"NONE", StanceLabel::Neutral},
      {"NEUTRAL", StanceLabel::Neutral}, {"NEITHER", StanceLabel::Neutral},
  };
  std::mt19937 rng(11);
  for (const auto& [surface, expected] : aliases) {
    CHECK(normalize_label(surface) == expected);
    // random case folding
    for (int trial = 0; trial < 20; ++trial) {
      std::string folded = surface;
      for (char& c : folded) {
        if (rng() % 2) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      CHECK(normalize_label(folded) == expected);
    }
  }
  CHECK(normalize_label("no") == StanceLabel::Against);
  CHECK(normalize_label("IN FAVOR") == StanceLabel::Favor);
  CHECK_THROWS_AS(normalize_label("maybe"), CorpusError);
  CHECK_THROWS_AS(normalize_label(""), CorpusError);
  CHECK_THROWS_AS(normalize_label("favorable"), CorpusError);
}

TEST_CASE("load_dataset parses a well-formed file") {
  auto path = temp_file("ok.tsv");
  write_file(path,
             "example_id\ttopic\ttext\tlabel\tsplit\n"
             "a1\tAT\tno gods no masters\tagainst\ttrain\n"
             "a2\tAT\tchurch every sunday\tFAVOR\ttrain\n"
             "a3\tAT\tweather is nice\tnone\ttrain\n");
  auto examples = load_dataset(Dataset::TweetStance, Split::Train, path, TopicRegistry::builtin());
  REQUIRE(examples.size() == 3);
  CHECK(examples[0].gold == StanceLabel::Against);
  CHECK(examples[1].gold == StanceLabel::Favor);
  CHECK(examples[2].gold == StanceLabel::Neutral);
  CHECK(examples[0].topic.display_name == "Atheism");
  CHECK(examples[0].split == Split::Train);
}

TEST_CASE("load_dataset rejects unknown labels with the row number") {
  auto path = temp_file("badlabel.tsv");
  write_file(path,
             "example_id\ttopic\ttext\tlabel\tsplit\n"
             "a1\tAT\tsome text\tfavor\ttrain\n"
             "a2\tAT\tother text\tmaybe\ttrain\n");
  try {
    load_dataset(Dataset::TweetStance, Split::Train, path, TopicRegistry::builtin());
    FAIL("expected CorpusError");
  } catch (const CorpusError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    CHECK(std::string(e.what()).find("maybe") != std::string::npos);
  }
}

TEST_CASE("load_dataset rejects duplicate example ids") {
  auto path = temp_file("dup.tsv");
  write_file(path,
             "example_id\ttopic\ttext\tlabel\tsplit\n"
             "a1\tAT\tsome text\tfavor\ttrain\n"
             "a1\tAT\tother text\tagainst\ttrain\n");
  CHECK_THROWS_AS(
      load_dataset(Dataset::TweetStance, Split::Train, path, TopicRegistry::builtin()),
      CorpusError);
}

TEST_CASE("load_dataset requires the canonical header and an existing file") {
  auto path = temp_file("badheader.tsv");
  write_file(path, "id\ttext\n");
  CHECK_THROWS_AS(
      load_dataset(Dataset::TweetStance, Split::Train, path, TopicRegistry::builtin()),
      CorpusError);
  CHECK_THROWS_AS(load_dataset(Dataset::TweetStance, Split::Train,
                               temp_file("does_not_exist.tsv"), TopicRegistry::builtin()),
                  CorpusError);
}

TEST_CASE("save/load round-trip yields an identical list") {
  auto path = temp_file("roundtrip.tsv");
  std::vector<StanceExample> examples;
  auto registry = TopicRegistry::builtin();
  std::mt19937 rng(3);
  const StanceLabel labels[] = {StanceLabel::Favor, StanceLabel::Against, StanceLabel::Neutral};
  for (int i = 0; i < 40; ++i) {
    StanceExample ex;
    ex.example_id = "ex" + std::to_string(i);
    ex.topic = registry.require(i % 2 ? "AT" : "CC");
    ex.text = "tweet with\ttab and\nnewline number " + std::to_string(i);
    ex.gold = labels[rng() % 3];
    ex.split = Split::Train;
    examples.push_back(ex);
  }
  save_dataset(path, examples);
  auto loaded = load_dataset(Dataset::TweetStance, Split::Train, path, registry);
  REQUIRE(loaded.size() == examples.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    CHECK(loaded[i].example_id == examples[i].example_id);
    CHECK(loaded[i].text == examples[i].text);
    CHECK(loaded[i].gold == examples[i].gold);
    CHECK(loaded[i].topic.id == examples[i].topic.id);
  }
}

TEST_CASE("aggregate_training_set concatenates per-topic subsets deterministically") {
  auto registry = TopicRegistry::builtin();
  std::vector<StanceExample> pool;
  auto add = [&](const std::string& id, const std::string& topic) {
    StanceExample ex;
    ex.example_id = id;
    ex.topic = registry.require(topic);
    ex.text = "text " + id;
    ex.gold = StanceLabel::Neutral;
    ex.split = Split::Train;
    pool.push_back(ex);
  };
  add("b1", "CC");
  add("a2", "AT");
  add("a1", "AT");
  add("b2", "CC");
  add("b3", "CC");
  add("x1", "HC");  // not requested

  auto agg = aggregate_training_set(pool, {registry.require("AT"), registry.require("CC")});
  REQUIRE(agg.size() == 5);  // 2 + 3
  CHECK(agg[0].example_id == "a1");
  CHECK(agg[1].example_id == "a2");
  CHECK(agg[2].example_id == "b1");
  CHECK(agg[4].example_id == "b3");
  for (const auto& ex : agg) CHECK(!ex.topic.display_name.empty());

  SUBCASE("single topic equals the plain per-topic subset") {
    auto single = aggregate_training_set(pool, {registry.require("AT")});
    REQUIRE(single.size() == 2);
    CHECK(single[0].example_id == "a1");
  }
  SUBCASE("empty topic list is an error") {
    CHECK_THROWS_AS(aggregate_training_set(pool, {}), CorpusError);
  }
  SUBCASE("mixed datasets are rejected") {
    CHECK_THROWS_AS(
        aggregate_training_set(pool, {registry.require("AT"), registry.require("BD")}),
        CorpusError);
  }
  SUBCASE("multiset of example ids is preserved") {
    std::vector<std::string> in_ids, out_ids;
    for (const auto& ex : pool) {
      if (ex.topic.id == "AT" || ex.topic.id == "CC") in_ids.push_back(ex.example_id);
    }
    for (const auto& ex : agg) out_ids.push_back(ex.example_id);
    std::sort(in_ids.begin(), in_ids.end());
    std::sort(out_ids.begin(), out_ids.end());
    CHECK(in_ids == out_ids);
  }
}

TEST_CASE("class_distribution counts sum to the list length") {
  std::vector<StanceExample> examples;
  SUBCASE("empty list") {
    auto counts = class_distribution(examples);
    CHECK(counts[StanceLabel::Favor] == 0);
    CHECK(counts[StanceLabel::Against] == 0);
    CHECK(counts[StanceLabel::Neutral] == 0);
  }
  SUBCASE("hand-counted list and brute-force recount") {
    auto registry = TopicRegistry::builtin();
    std::mt19937 rng(17);
    const StanceLabel labels[] = {StanceLabel::Favor, StanceLabel::Against,
                                  StanceLabel::Neutral};
    std::size_t tally[3] = {0, 0, 0};
    for (int i = 0; i < 97; ++i) {
      StanceExample ex;
      ex.example_id = "e" + std::to_string(i);
      ex.topic = registry.require("FM");
      ex.text = "t";
      int k = static_cast<int>(rng() % 3);
      ex.gold = labels[k];
      ++tally[k];  // independent line-by-line tally
      examples.push_back(ex);
    }
    auto counts = class_distribution(examples);
    CHECK(counts[StanceLabel::Favor] == tally[0]);
    CHECK(counts[StanceLabel::Against] == tally[1]);
    CHECK(counts[StanceLabel::Neutral] == tally[2]);
    CHECK(counts[StanceLabel::Favor] + counts[StanceLabel::Against] +
              counts[StanceLabel::Neutral] ==
          examples.size());
  }
}

TEST_CASE("topic registry loads the static asset") {
  auto registry =
      TopicRegistry::load(fs::path(COTEMB_SOURCE_DIR) / "assets" / "topics.tsv");
  CHECK(registry.all().size() == 7);
  CHECK(registry.require("BD").display_name == "Joe Biden");
  CHECK(registry.require("BD").dataset == Dataset::PresidentialStance);
  CHECK(registry.topics_of(Dataset::TweetStance).size() == 5);
  CHECK_THROWS_AS(registry.require("XX"), CorpusError);
}

TEST_CASE("presidential-stance may exist without a dev split") {
  auto path = temp_file("nodev.tsv");
  write_file(path,
             "example_id\ttopic\ttext\tlabel\tsplit\n"
             "p1\tBD\tvote blue\tfavor\ttrain\n"
             "p2\tBD\tvote red\tagainst\ttest\n");
  auto registry = TopicRegistry::builtin();
  CHECK(load_dataset(Dataset::PresidentialStance, Split::Train, path, registry).size() == 1);
  CHECK(load_dataset(Dataset::PresidentialStance, Split::Test, path, registry).size() == 1);
  CHECK(load_dataset(Dataset::PresidentialStance, Split::Dev, path, registry).empty());
}
