#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cotemb {

enum class StanceLabel { Favor, Against, Neutral };

// Fixed label order used everywhere (argmax tie-break, confusion matrix axes).
inline constexpr StanceLabel kLabelOrder[3] = {StanceLabel::Favor, StanceLabel::Against,
                                               StanceLabel::Neutral};

std::string_view to_string(StanceLabel label);
int label_index(StanceLabel label);

enum class Dataset { TweetStance, PresidentialStance };
enum class Split { Train, Dev, Test };

std::string_view to_string(Dataset dataset);
std::string_view to_string(Split split);
Dataset dataset_from_string(std::string_view s);
Split split_from_string(std::string_view s);

struct Topic {
  std::string id;            // short code, e.g. "AT"
  std::string display_name;  // prompt surface, e.g. "Atheism"
  Dataset dataset = Dataset::TweetStance;
};

struct StanceExample {
  std::string example_id;
  Topic topic;
  std::string text;
  StanceLabel gold = StanceLabel::Neutral;
  Split split = Split::Train;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maps a dataset surface label onto one of the three stance values.
/// Case-insensitive over the closed alias set; anything else throws.
StanceLabel normalize_label(std::string_view surface);

class TopicRegistry {
 public:
  /// The seven topics of the two supported datasets.
  static TopicRegistry builtin();
  /// Loads a registry file with columns `id  display_name  dataset`.
  static TopicRegistry load(const std::filesystem::path& path);

  const Topic& require(std::string_view id) const;
  std::vector<Topic> topics_of(Dataset dataset) const;
  const std::vector<Topic>& all() const { return topics_; }

  void add(Topic topic);

 private:
  std::vector<Topic> topics_;
};

/// Reads a canonical dataset file and returns the examples of the requested
/// dataset and split. Columns: example_id, topic, text, label, split.
std::vector<StanceExample> load_dataset(Dataset dataset, Split split,
                                        const std::filesystem::path& source_path,
                                        const TopicRegistry& registry);

/// Writes examples back in the canonical schema. load/save round-trips.
void save_dataset(const std::filesystem::path& path, std::span<const StanceExample> examples);

/// Concatenates the per-topic subsets of `examples`, ordered by (topic id,
/// example_id). All topics must belong to one dataset.
std::vector<StanceExample> aggregate_training_set(std::span<const StanceExample> examples,
                                                  const std::vector<Topic>& topics);

std::map<StanceLabel, std::size_t> class_distribution(std::span<const StanceExample> examples);

}  // namespace cotemb
