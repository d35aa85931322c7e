#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cotemb/corpus.hpp"
#include "cotemb/cot_parser.hpp"
#include "cotemb/llm_gateway.hpp"

namespace cotemb {

enum class DisagreementCategory { CotNeutralError, CotPolarityError, Other };

std::string_view to_string(DisagreementCategory category);

/// One sample where the encoder is right but the parsed COT prediction is
/// wrong; the subset the error analysis is built on.
struct DisagreementRecord {
  std::string example_id;
  StanceLabel gold;
  StanceLabel encoder_pred;
  StanceLabel cot_pred;
  ParseStatus cot_parse_status = ParseStatus::NoBracket;
  std::string raw_cot_text;
  DisagreementCategory category = DisagreementCategory::Other;
};

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AlignedPrediction {
  std::string example_id;
  StanceLabel gold;
  StanceLabel encoder_pred;
  StanceLabel cot_pred;
  ParseStatus cot_parse_status = ParseStatus::NoBracket;
  std::string raw_cot_text;
};

/// Keeps exactly the samples where encoder_pred == gold and cot_pred != gold,
/// categorized: CotNeutralError when the COT wrongly said Neutral,
/// CotPolarityError when gold and COT sit on opposite Favor/Against poles,
/// Other for the rest.
std::vector<DisagreementRecord> disagreement_set(std::span<const AlignedPrediction> predictions);

struct NeutralErrorRate {
  double fraction = 0.0;
  std::size_t numerator = 0;
  std::size_t denominator = 0;
  bool empty = false;  // flagged when there were no records at all
};

NeutralErrorRate neutral_error_rate(std::span<const DisagreementRecord> records);

/// Writes the manual-review worksheet: one row per record plus an empty
/// annotation column, ordered by example_id. Re-export is byte-identical.
void export_for_review(std::span<const DisagreementRecord> records,
                       const std::filesystem::path& path);

std::vector<DisagreementRecord> read_review_export(const std::filesystem::path& path);

}  // namespace cotemb
