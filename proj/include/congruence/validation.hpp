#pragma once

#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "congruence/administration.hpp"

namespace congruence {

enum class ParseFailure { Refusal, NonScoreContent };

// Either an integer score (range is checked later) or why none was found.
using ParsedScore = std::variant<int, ParseFailure>;

inline bool has_score(const ParsedScore& s) { return std::holds_alternative<int>(s); }

// Case-insensitive substrings that mark a reply as a refusal to answer.
const std::vector<std::string>& default_refusal_patterns();

// Refusal if any pattern matches; otherwise the integer when the reply holds
// exactly one integer value (repeats of the same value are accepted);
// otherwise NonScoreContent (no number, conflicting numbers, or a fraction).
ParsedScore parse_item_score(std::string_view raw_text,
                             const std::vector<std::string>& refusal_patterns = default_refusal_patterns());

struct ParsedItem {
  std::string item_id;
  ParsedScore score;
  std::string raw_text;
};

struct ParsedRun {
  Questionnaire questionnaire = Questionnaire::Knowledge;
  TemplateId prompt_id = TemplateId::P16;
  int run_index = 0;
  std::vector<ParsedItem> items;

  RunKey key() const { return {questionnaire, prompt_id, run_index}; }
};

ParsedRun parse_run(const RunResponse& run, Questionnaire questionnaire,
                    const std::vector<std::string>& refusal_patterns = default_refusal_patterns());

enum class Reason { AllSame, OneSidedAtOrAbove4, OneSidedAtOrBelow4, OutOfRange, Refusal, NonScoreContent };

std::string_view to_string(Reason r);

struct ValidityVerdict {
  RunKey key;
  std::set<Reason> reasons;
  // Raw texts of items that triggered item-level reasons (parse failures,
  // out-of-range values), capped for reporting.
  std::vector<std::string> snippets;

  bool valid() const { return reasons.empty(); }
};

// Records every applicable reason: parse failures, scores outside 1..7, all
// scores equal, all >= 4, all <= 4. One-sidedness is judged over the whole
// run. Throws PreconditionError when the run does not hold item_count items.
ValidityVerdict classify_run(const ParsedRun& parsed, std::size_t item_count);

struct FilterResult {
  std::vector<ParsedRun> valid;
  std::vector<ValidityVerdict> rejected;
  // Runs whose backend calls never succeeded; they hold no answers.
  std::vector<RunKey> failed;
};

// Partitions the completed runs of a transcript into valid and rejected.
FilterResult filter_valid(const Transcript& transcript,
                          const std::vector<std::string>& refusal_patterns = default_refusal_patterns());

// Structured rejection report: run key, reasons, offending raw snippets.
nlohmann::ordered_json rejection_report_json(const std::string& respondent_id, const FilterResult& result);

}  // namespace congruence
