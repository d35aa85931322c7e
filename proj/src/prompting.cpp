#include "cotemb/prompting.hpp"

#include <fstream>
#include <sstream>

#include "cotemb/digest.hpp"
#include "cotemb/tsv.hpp"

namespace cotemb {

namespace {

// The exemplar block as it appears in the template, including the blank line
// that separates it from the query block.
constexpr std::string_view kExemplarBlock =
    "Tweet: {EXEMPLAR_TWEET}\nStance: {EXEMPLAR_REASONING}\n\n";

void replace_once(std::string& text, std::string_view slot, std::string_view value) {
  size_t pos = text.find(slot);
  if (pos == std::string::npos) {
    throw PromptError("prompt template is missing slot " + std::string(slot));
  }
  text.replace(pos, slot.size(), value);
  if (text.find(slot, pos + value.size()) != std::string::npos) {
    throw PromptError("prompt template repeats slot " + std::string(slot));
  }
}

}  // namespace

std::string_view to_string(VocabularyVariant v) {
  return v == VocabularyVariant::YesNoNone ? "yes-no-none" : "favor-against-neutral";
}

VocabularyVariant vocabulary_variant_from_string(std::string_view s) {
  if (s == "yes-no-none") return VocabularyVariant::YesNoNone;
  if (s == "favor-against-neutral") return VocabularyVariant::FavorAgainstNeutral;
  throw PromptError("unknown vocabulary variant: " + std::string(s));
}

LabelVocabulary LabelVocabulary::yes_no_none() {
  return {VocabularyVariant::YesNoNone,
          {{StanceLabel::Favor, "YES"}, {StanceLabel::Against, "NO"}, {StanceLabel::Neutral, "NONE"}}};
}

LabelVocabulary LabelVocabulary::favor_against_neutral() {
  return {VocabularyVariant::FavorAgainstNeutral,
          {{StanceLabel::Favor, "IN FAVOR"},
           {StanceLabel::Against, "AGAINST"},
           {StanceLabel::Neutral, "NEUTRAL"}}};
}

LabelVocabulary LabelVocabulary::of(VocabularyVariant variant) {
  return variant == VocabularyVariant::YesNoNone ? yes_no_none() : favor_against_neutral();
}

std::optional<StanceLabel> LabelVocabulary::label_of(std::string_view normalized_token) const {
  for (const auto& [label, token] : tokens) {
    if (token == normalized_token) return label;
  }
  return std::nullopt;
}

PromptTemplate::PromptTemplate(std::string raw) : raw_(std::move(raw)) {
  for (std::string_view slot : {"{FAVOR}", "{AGAINST}", "{NEUTRAL}", "{TOPIC}", "{TWEET}"}) {
    if (raw_.find(slot) == std::string::npos) {
      throw PromptError("prompt template is missing slot " + std::string(slot));
    }
  }
  if (raw_.find(kExemplarBlock) == std::string::npos) {
    throw PromptError("prompt template is missing the exemplar block");
  }
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PromptError("cannot open prompt template: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return PromptTemplate(buf.str());
}

PromptTemplate PromptTemplate::load_default() {
  return load(std::filesystem::path(COTEMB_SOURCE_DIR) / "assets" / "prompt_template.txt");
}

PromptText PromptTemplate::render(const StanceExample& example, const LabelVocabulary& vocabulary,
                                  const std::optional<CotExemplar>& exemplar) const {
  if (exemplar && exemplar->vocabulary != vocabulary.variant) {
    throw PromptError("exemplar vocabulary does not match the requested vocabulary");
  }
  std::string text = raw_;
  if (exemplar) {
    replace_once(text, "{EXEMPLAR_TWEET}", exemplar->tweet);
    replace_once(text, "{EXEMPLAR_REASONING}", exemplar->reasoning);
  } else {
    size_t pos = text.find(kExemplarBlock);
    text.erase(pos, kExemplarBlock.size());
  }
  replace_once(text, "{FAVOR}", vocabulary.token(StanceLabel::Favor));
  replace_once(text, "{AGAINST}", vocabulary.token(StanceLabel::Against));
  replace_once(text, "{NEUTRAL}", vocabulary.token(StanceLabel::Neutral));
  replace_once(text, "{TOPIC}", example.topic.display_name);
  replace_once(text, "{TWEET}", example.text);

  PromptText out;
  out.fingerprint = cotemb::fingerprint(text);
  out.text = std::move(text);
  out.vocabulary = vocabulary.variant;
  out.shot_count = exemplar ? 1 : 0;
  return out;
}

PromptText build_cot_prompt(const StanceExample& example, const LabelVocabulary& vocabulary,
                            const std::optional<CotExemplar>& exemplar,
                            const PromptTemplate& tmpl) {
  return tmpl.render(example, vocabulary, exemplar);
}

std::map<std::string, CotExemplar> load_exemplars(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PromptError("cannot open exemplar registry: " + path.string());
  std::map<std::string, CotExemplar> out;
  std::string line;
  size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    auto fields = tsv::split(line);
    if (fields.size() != 4) {
      throw PromptError("exemplar registry row " + std::to_string(row) + ": expected 4 columns");
    }
    CotExemplar ex;
    ex.topic_id = fields[0];
    ex.vocabulary = vocabulary_variant_from_string(fields[1]);
    ex.tweet = fields[2];
    ex.reasoning = fields[3];
    if (ex.reasoning.find('[') == std::string::npos) {
      throw PromptError("exemplar registry row " + std::to_string(row) +
                        ": reasoning carries no bracket token");
    }
    out[ex.topic_id] = std::move(ex);
  }
  return out;
}

}  // namespace cotemb
