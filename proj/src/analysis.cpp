#include "cotemb/analysis.hpp"

#include <algorithm>
#include <fstream>

#include "cotemb/tsv.hpp"

namespace cotemb {

namespace {

ParseStatus parse_status_from_string(std::string_view s) {
  if (s == "clean") return ParseStatus::Clean;
  if (s == "multiple-brackets") return ParseStatus::MultipleBrackets;
  if (s == "no-bracket") return ParseStatus::NoBracket;
  if (s == "unknown-token") return ParseStatus::UnknownToken;
  throw AnalysisError("unknown parse status: " + std::string(s));
}

DisagreementCategory category_from_string(std::string_view s) {
  if (s == "cot-neutral-error") return DisagreementCategory::CotNeutralError;
  if (s == "cot-polarity-error") return DisagreementCategory::CotPolarityError;
  if (s == "other") return DisagreementCategory::Other;
  throw AnalysisError("unknown category: " + std::string(s));
}

DisagreementCategory categorize(StanceLabel gold, StanceLabel cot_pred) {
  if (cot_pred == StanceLabel::Neutral && gold != StanceLabel::Neutral) {
    return DisagreementCategory::CotNeutralError;
  }
  bool opposite_poles = (gold == StanceLabel::Favor && cot_pred == StanceLabel::Against) ||
                        (gold == StanceLabel::Against && cot_pred == StanceLabel::Favor);
  if (opposite_poles) return DisagreementCategory::CotPolarityError;
  return DisagreementCategory::Other;
}

}  // namespace

std::string_view to_string(DisagreementCategory category) {
  switch (category) {
    case DisagreementCategory::CotNeutralError: return "cot-neutral-error";
    case DisagreementCategory::CotPolarityError: return "cot-polarity-error";
    case DisagreementCategory::Other: return "other";
  }
  return "?";
}

std::vector<DisagreementRecord> disagreement_set(std::span<const AlignedPrediction> predictions) {
  std::vector<DisagreementRecord> out;
  for (const auto& p : predictions) {
    if (p.encoder_pred != p.gold || p.cot_pred == p.gold) continue;
    DisagreementRecord rec;
    rec.example_id = p.example_id;
    rec.gold = p.gold;
    rec.encoder_pred = p.encoder_pred;
    rec.cot_pred = p.cot_pred;
    rec.cot_parse_status = p.cot_parse_status;
    rec.raw_cot_text = p.raw_cot_text;
    rec.category = categorize(p.gold, p.cot_pred);
    out.push_back(std::move(rec));
  }
  return out;
}

NeutralErrorRate neutral_error_rate(std::span<const DisagreementRecord> records) {
  NeutralErrorRate rate;
  rate.denominator = records.size();
  for (const auto& rec : records) {
    if (rec.category == DisagreementCategory::CotNeutralError) ++rate.numerator;
  }
  if (rate.denominator == 0) {
    rate.empty = true;
  } else {
    rate.fraction = static_cast<double>(rate.numerator) / static_cast<double>(rate.denominator);
  }
  return rate;
}

void export_for_review(std::span<const DisagreementRecord> records,
                       const std::filesystem::path& path) {
  std::vector<DisagreementRecord> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.example_id < b.example_id; });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AnalysisError("cannot write review export: " + path.string());
  out << "example_id\tgold\tencoder_pred\tcot_pred\tcategory\tparse_status\tcot_text\tannotation\n";
  for (const auto& rec : sorted) {
    out << tsv::join({rec.example_id, std::string(to_string(rec.gold)),
                      std::string(to_string(rec.encoder_pred)),
                      std::string(to_string(rec.cot_pred)),
                      std::string(to_string(rec.category)),
                      std::string(to_string(rec.cot_parse_status)), rec.raw_cot_text,
                      std::string()})
        << "\n";
  }
  if (!out) throw AnalysisError("review export write failed: " + path.string());
}

std::vector<DisagreementRecord> read_review_export(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AnalysisError("cannot open review export: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw AnalysisError("empty review export: " + path.string());
  std::vector<DisagreementRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = tsv::split(line);
    if (f.size() != 8) throw AnalysisError("review export row has wrong column count");
    DisagreementRecord rec;
    rec.example_id = f[0];
    rec.gold = normalize_label(f[1]);
    rec.encoder_pred = normalize_label(f[2]);
    rec.cot_pred = normalize_label(f[3]);
    rec.category = category_from_string(f[4]);
    rec.cot_parse_status = parse_status_from_string(f[5]);
    rec.raw_cot_text = f[6];
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace cotemb
