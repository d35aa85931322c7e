#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cotemb/corpus.hpp"

namespace cotemb {

enum class VocabularyVariant { YesNoNone, FavorAgainstNeutral };

std::string_view to_string(VocabularyVariant v);
VocabularyVariant vocabulary_variant_from_string(std::string_view s);

/// One of the two bracket-token label structures. Tokens are stored without
/// the surrounding brackets.
struct LabelVocabulary {
  VocabularyVariant variant;
  std::map<StanceLabel, std::string> tokens;

  static LabelVocabulary yes_no_none();
  static LabelVocabulary favor_against_neutral();
  static LabelVocabulary of(VocabularyVariant variant);

  const std::string& token(StanceLabel label) const { return tokens.at(label); }
  /// Matches a bracket-content string (already case/whitespace normalized by
  /// the caller) against this vocabulary only. Tokens of the other vocabulary
  /// do not match.
  std::optional<StanceLabel> label_of(std::string_view normalized_token) const;
};

struct CotExemplar {
  std::string tweet;
  std::string reasoning;  // contains the worked-out bracket label
  std::string topic_id;
  VocabularyVariant vocabulary;
};

struct PromptText {
  std::string text;
  std::string fingerprint;  // content hash of text
  VocabularyVariant vocabulary;
  int shot_count = 0;  // 0 or 1
};

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The checked-in prompt template with named slots {FAVOR} {AGAINST} {NEUTRAL}
/// {TOPIC} {EXEMPLAR_TWEET} {EXEMPLAR_REASONING} {TWEET}.
class PromptTemplate {
 public:
  static PromptTemplate load(const std::filesystem::path& path);
  /// Loads assets/prompt_template.txt from the source tree.
  static PromptTemplate load_default();

  const std::string& raw() const { return raw_; }

  PromptText render(const StanceExample& example, const LabelVocabulary& vocabulary,
                    const std::optional<CotExemplar>& exemplar) const;

 private:
  explicit PromptTemplate(std::string raw);
  std::string raw_;
};

/// Renders the COT prompt for one example. Passing no exemplar yields the
/// 0-shot prompt: the same text with the exemplar block deleted.
PromptText build_cot_prompt(const StanceExample& example, const LabelVocabulary& vocabulary,
                            const std::optional<CotExemplar>& exemplar,
                            const PromptTemplate& tmpl);

/// Exemplar registry file: columns `topic_id  vocabulary  tweet  reasoning`.
std::map<std::string, CotExemplar> load_exemplars(const std::filesystem::path& path);

}  // namespace cotemb
