#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotemb/corpus.hpp"
#include "cotemb/prompting.hpp"

namespace cotemb {

enum class ParseStatus { Clean, MultipleBrackets, NoBracket, UnknownToken };

std::string_view to_string(ParseStatus status);

/// Outcome of scanning one raw COT text for bracketed stance tokens.
struct ParseResult {
  std::optional<StanceLabel> label;
  ParseStatus status = ParseStatus::NoBracket;
  std::vector<std::string> matched_tokens;  // raw bracket contents, in order
};

/// Scans `raw` left to right for [...] spans and matches their contents
/// against `vocabulary`, case-insensitively and whitespace-normalized. The
/// first recognized token sets the label; later recognized tokens flip the
/// status to MultipleBrackets. Unrecognized bracket contents are recorded but
/// never set a label, and tokens of the other vocabulary are not rescued.
/// Total: every input yields a ParseResult.
ParseResult parse_label(std::string_view raw, const LabelVocabulary& vocabulary);

struct Prediction {
  StanceLabel label;
  bool used_fallback = false;
};

/// The parsed label when one was extracted, otherwise `fallback`.
Prediction to_prediction(const ParseResult& result, StanceLabel fallback);

/// Batch counters reported alongside COT-derived predictions.
struct PredictionCounts {
  std::size_t parsed = 0;
  std::size_t fallback = 0;
  std::size_t total() const { return parsed + fallback; }
};

std::vector<StanceLabel> to_predictions(std::span<const ParseResult> results, StanceLabel fallback,
                                        PredictionCounts& counts);

}  // namespace cotemb
