#include "cotemb/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "cotemb/tsv.hpp"

namespace cotemb {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view to_string(StanceLabel label) {
  switch (label) {
    case StanceLabel::Favor: return "favor";
    case StanceLabel::Against: return "against";
    case StanceLabel::Neutral: return "neutral";
  }
  return "?";
}

int label_index(StanceLabel label) { return static_cast<int>(label); }

std::string_view to_string(Dataset dataset) {
  return dataset == Dataset::TweetStance ? "tweet-stance" : "presidential-stance";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

Dataset dataset_from_string(std::string_view s) {
  std::string u = upper(trim(s));
  if (u == "TWEET-STANCE" || u == "TWEETSTANCE") return Dataset::TweetStance;
  if (u == "PRESIDENTIAL-STANCE" || u == "PRESIDENTIALSTANCE") return Dataset::PresidentialStance;
  throw CorpusError("unknown dataset: " + std::string(s));
}

Split split_from_string(std::string_view s) {
  std::string u = upper(trim(s));
  if (u == "TRAIN") return Split::Train;
  if (u == "DEV") return Split::Dev;
  if (u == "TEST") return Split::Test;
  throw CorpusError("unknown split: " + std::string(s));
}

StanceLabel normalize_label(std::string_view surface) {
  std::string u = upper(trim(surface));
  if (u == "FAVOR" || u == "IN FAVOR" || u == "YES") return StanceLabel::Favor;
  if (u == "AGAINST" || u == "NO") return StanceLabel::Against;
  if (u == "NONE" || u == "NEUTRAL" || u == "NEITHER") return StanceLabel::Neutral;
  throw CorpusError("unrecognized stance label surface: \"" + std::string(surface) + "\"");
}

TopicRegistry TopicRegistry::builtin() {
  TopicRegistry r;
  r.add({"AT", "Atheism", Dataset::TweetStance});
  r.add({"CC", "Climate Change", Dataset::TweetStance});
  r.add({"FM", "Feminism", Dataset::TweetStance});
  r.add({"HC", "Hillary Clinton", Dataset::TweetStance});
  r.add({"LA", "Abortion", Dataset::TweetStance});
  r.add({"BD", "Joe Biden", Dataset::PresidentialStance});
  r.add({"TR", "Donald Trump", Dataset::PresidentialStance});
  return r;
}

TopicRegistry TopicRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open topic registry: " + path.string());
  TopicRegistry r;
  std::string line;
  size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    auto fields = tsv::split(line);
    if (fields.size() != 3) {
      throw CorpusError("topic registry row " + std::to_string(row) + ": expected 3 columns");
    }
    if (fields[1].empty()) {
      throw CorpusError("topic registry row " + std::to_string(row) + ": empty display name");
    }
    r.add({fields[0], fields[1], dataset_from_string(fields[2])});
  }
  return r;
}

void TopicRegistry::add(Topic topic) {
  for (const auto& t : topics_) {
    if (t.id == topic.id && t.dataset == topic.dataset) {
      throw CorpusError("duplicate topic id: " + topic.id);
    }
  }
  topics_.push_back(std::move(topic));
}

const Topic& TopicRegistry::require(std::string_view id) const {
  for (const auto& t : topics_) {
    if (t.id == id) return t;
  }
  throw CorpusError("unknown topic id: " + std::string(id));
}

std::vector<Topic> TopicRegistry::topics_of(Dataset dataset) const {
  std::vector<Topic> out;
  for (const auto& t : topics_) {
    if (t.dataset == dataset) out.push_back(t);
  }
  return out;
}

std::vector<StanceExample> load_dataset(Dataset dataset, Split split,
                                        const std::filesystem::path& source_path,
                                        const TopicRegistry& registry) {
  std::ifstream in(source_path);
  if (!in) throw CorpusError("cannot open dataset file: " + source_path.string());

  std::string line;
  if (!std::getline(in, line)) throw CorpusError("empty dataset file: " + source_path.string());
  auto header = tsv::split(line);
  const std::vector<std::string> expected = {"example_id", "topic", "text", "label", "split"};
  if (header != expected) {
    throw CorpusError("bad header in " + source_path.string() +
                      ": expected example_id\\ttopic\\ttext\\tlabel\\tsplit");
  }

  std::vector<StanceExample> out;
  std::set<std::string> seen_ids;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto fields = tsv::split(line);
    if (fields.size() != 5) {
      throw CorpusError("row " + std::to_string(row) + ": expected 5 columns, got " +
                        std::to_string(fields.size()));
    }
    StanceExample ex;
    ex.example_id = fields[0];
    try {
      ex.topic = registry.require(fields[1]);
      ex.gold = normalize_label(fields[3]);
      ex.split = split_from_string(fields[4]);
    } catch (const CorpusError& e) {
      throw CorpusError("row " + std::to_string(row) + ": " + e.what());
    }
    ex.text = trim(fields[2]);
    if (ex.topic.dataset != dataset || ex.split != split) continue;
    if (ex.text.empty()) {
      throw CorpusError("row " + std::to_string(row) + ": empty tweet text");
    }
    if (!seen_ids.insert(ex.example_id).second) {
      throw CorpusError("row " + std::to_string(row) + ": duplicate example_id " + ex.example_id);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, std::span<const StanceExample> examples) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write dataset file: " + path.string());
  out << "example_id\ttopic\ttext\tlabel\tsplit\n";
  for (const auto& ex : examples) {
    out << tsv::join({ex.example_id, ex.topic.id, ex.text, std::string(to_string(ex.gold)),
                      std::string(to_string(ex.split))})
        << "\n";
  }
  if (!out) throw CorpusError("write failed: " + path.string());
}

std::vector<StanceExample> aggregate_training_set(std::span<const StanceExample> examples,
                                                  const std::vector<Topic>& topics) {
  if (topics.empty()) throw CorpusError("aggregate_training_set: empty topic list");
  Dataset dataset = topics.front().dataset;
  std::set<std::string> wanted;
  for (const auto& t : topics) {
    if (t.dataset != dataset) {
      throw CorpusError("aggregate_training_set: topics span multiple datasets");
    }
    wanted.insert(t.id);
  }
  std::vector<StanceExample> out;
  for (const auto& ex : examples) {
    if (wanted.count(ex.topic.id)) out.push_back(ex);
  }
  std::stable_sort(out.begin(), out.end(), [](const StanceExample& a, const StanceExample& b) {
    if (a.topic.id != b.topic.id) return a.topic.id < b.topic.id;
    return a.example_id < b.example_id;
  });
  return out;
}

std::map<StanceLabel, std::size_t> class_distribution(std::span<const StanceExample> examples) {
  std::map<StanceLabel, std::size_t> counts{{StanceLabel::Favor, 0},
                                            {StanceLabel::Against, 0},
                                            {StanceLabel::Neutral, 0}};
  for (const auto& ex : examples) ++counts[ex.gold];
  return counts;
}

}  // namespace cotemb
