#include "cotemb/cot_parser.hpp"

#include <algorithm>
#include <cctype>

namespace cotemb {

namespace {

// Uppercases and collapses runs of whitespace to single spaces, trimming ends.
std::string normalize_token(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::toupper(c));
  }
  return out;
}

}  // namespace

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::Clean: return "clean";
    case ParseStatus::MultipleBrackets: return "multiple-brackets";
    case ParseStatus::NoBracket: return "no-bracket";
    case ParseStatus::UnknownToken: return "unknown-token";
  }
  return "?";
}

ParseResult parse_label(std::string_view raw, const LabelVocabulary& vocabulary) {
  ParseResult result;
  std::size_t recognized = 0;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = raw.find('[', pos);
    if (open == std::string_view::npos) break;
    std::size_t close = raw.find(']', open + 1);
    if (close == std::string_view::npos) break;
    std::string_view contents = raw.substr(open + 1, close - open - 1);
    result.matched_tokens.emplace_back(contents);
    if (auto label = vocabulary.label_of(normalize_token(contents))) {
      if (recognized == 0) result.label = *label;  // first recognized token wins
      ++recognized;
    }
    pos = close + 1;
  }

  if (result.matched_tokens.empty()) {
    result.status = ParseStatus::NoBracket;
  } else if (recognized == 0) {
    result.status = ParseStatus::UnknownToken;
  } else if (recognized == 1) {
    result.status = ParseStatus::Clean;
  } else {
    result.status = ParseStatus::MultipleBrackets;
  }
  return result;
}

Prediction to_prediction(const ParseResult& result, StanceLabel fallback) {
  if (result.label) return {*result.label, false};
  return {fallback, true};
}

std::vector<StanceLabel> to_predictions(std::span<const ParseResult> results, StanceLabel fallback,
                                        PredictionCounts& counts) {
  std::vector<StanceLabel> out;
  out.reserve(results.size());
  for (const auto& r : results) {
    Prediction p = to_prediction(r, fallback);
    (p.used_fallback ? counts.fallback : counts.parsed)++;
    out.push_back(p.label);
  }
  return out;
}

}  // namespace cotemb
