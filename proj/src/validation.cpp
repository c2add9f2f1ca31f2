#include "congruence/validation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <optional>

namespace congruence {
namespace {

constexpr std::size_t kMaxSnippets = 5;
constexpr std::size_t kSnippetBytes = 120;

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

struct NumberToken {
  long value;
  bool fractional;
};

std::vector<NumberToken> number_tokens(std::string_view s) {
  std::vector<NumberToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    const auto digits = s.substr(start, i - start);
    long value = digits.size() > 9 ? 999999999L : std::stol(std::string(digits));
    if (start > 0 && s[start - 1] == '-' && (start == 1 || !is_alnum(s[start - 2]))) value = -value;
    bool fractional = false;
    if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
      std::size_t j = i + 1;
      while (j < s.size() && is_digit(s[j])) {
        if (s[j] != '0') fractional = true;
        ++j;
      }
      i = j;
    }
    out.push_back({value, fractional});
  }
  return out;
}

std::string snippet(std::string_view raw) {
  if (raw.size() <= kSnippetBytes) return std::string(raw);
  std::size_t cut = kSnippetBytes;
  // Do not split a UTF-8 sequence.
  while (cut > 0 && (static_cast<unsigned char>(raw[cut]) & 0xC0) == 0x80) --cut;
  return std::string(raw.substr(0, cut)) + "...";
}

}  // namespace

const std::vector<std::string>& default_refusal_patterns() {
  static const std::vector<std::string> patterns{
      "as an ai language model",
      "作为一个ai语言模型",
      "作为一个人工智能语言模型",
  };
  return patterns;
}

ParsedScore parse_item_score(std::string_view raw_text, const std::vector<std::string>& refusal_patterns) {
  const std::string lowered = ascii_lower(raw_text);
  for (const auto& pattern : refusal_patterns) {
    if (!pattern.empty() && lowered.find(ascii_lower(pattern)) != std::string::npos) {
      return ParseFailure::Refusal;
    }
  }
  const auto tokens = number_tokens(raw_text);
  if (tokens.empty()) return ParseFailure::NonScoreContent;
  for (const auto& t : tokens) {
    if (t.fractional || t.value != tokens.front().value) return ParseFailure::NonScoreContent;
  }
  return static_cast<int>(tokens.front().value);
}

ParsedRun parse_run(const RunResponse& run, Questionnaire questionnaire,
                    const std::vector<std::string>& refusal_patterns) {
  ParsedRun parsed;
  parsed.questionnaire = questionnaire;
  parsed.prompt_id = run.prompt_id;
  parsed.run_index = run.run_index;
  parsed.items.reserve(run.items.size());
  for (const auto& item : run.items) {
    parsed.items.push_back({item.item_id, parse_item_score(item.raw_text, refusal_patterns), item.raw_text});
  }
  return parsed;
}

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::AllSame: return "AllSame";
    case Reason::OneSidedAtOrAbove4: return "OneSidedAtOrAbove4";
    case Reason::OneSidedAtOrBelow4: return "OneSidedAtOrBelow4";
    case Reason::OutOfRange: return "OutOfRange";
    case Reason::Refusal: return "Refusal";
    case Reason::NonScoreContent: return "NonScoreContent";
  }
  return "?";
}

ValidityVerdict classify_run(const ParsedRun& parsed, std::size_t item_count) {
  if (parsed.items.size() != item_count) {
    throw PreconditionError(fmt::format("run {} holds {} items, expected {}", parsed.key().to_string(),
                                        parsed.items.size(), item_count));
  }
  ValidityVerdict verdict;
  verdict.key = parsed.key();
  auto note = [&verdict](const ParsedItem& item) {
    if (verdict.snippets.size() < kMaxSnippets) {
      verdict.snippets.push_back(fmt::format("{}: {}", item.item_id, snippet(item.raw_text)));
    }
  };

  std::vector<int> scores;
  for (const auto& item : parsed.items) {
    if (const auto* failure = std::get_if<ParseFailure>(&item.score)) {
      verdict.reasons.insert(*failure == ParseFailure::Refusal ? Reason::Refusal : Reason::NonScoreContent);
      note(item);
      continue;
    }
    const int s = std::get<int>(item.score);
    if (s < 1 || s > 7) {
      verdict.reasons.insert(Reason::OutOfRange);
      note(item);
    }
    scores.push_back(s);
  }
  if (scores.empty()) return verdict;

  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  if (*lo == *hi) verdict.reasons.insert(Reason::AllSame);
  if (*lo >= 4) verdict.reasons.insert(Reason::OneSidedAtOrAbove4);
  if (*hi <= 4) verdict.reasons.insert(Reason::OneSidedAtOrBelow4);
  return verdict;
}

FilterResult filter_valid(const Transcript& transcript, const std::vector<std::string>& refusal_patterns) {
  FilterResult result;
  // Every completed run must cover the same administered item set.
  std::size_t item_count = 0;
  for (const auto& run : transcript.runs) {
    if (run.completed()) {
      item_count = run.items.size();
      break;
    }
  }
  for (const auto& run : transcript.runs) {
    const RunKey key{transcript.plan.questionnaire, run.prompt_id, run.run_index};
    if (!run.completed()) {
      result.failed.push_back(key);
      continue;
    }
    auto parsed = parse_run(run, transcript.plan.questionnaire, refusal_patterns);
    auto verdict = classify_run(parsed, item_count);
    if (verdict.valid()) {
      result.valid.push_back(std::move(parsed));
    } else {
      result.rejected.push_back(std::move(verdict));
    }
  }
  return result;
}

nlohmann::ordered_json rejection_report_json(const std::string& respondent_id, const FilterResult& result) {
  nlohmann::ordered_json j;
  j["respondent_id"] = respondent_id;
  j["valid_runs"] = result.valid.size();
  j["rejected"] = nlohmann::ordered_json::array();
  for (const auto& v : result.rejected) {
    nlohmann::ordered_json e;
    e["run"] = v.key.to_string();
    e["reasons"] = nlohmann::ordered_json::array();
    for (auto r : v.reasons) e["reasons"].push_back(to_string(r));
    e["snippets"] = v.snippets;
    j["rejected"].push_back(std::move(e));
  }
  j["failed"] = nlohmann::ordered_json::array();
  for (const auto& k : result.failed) j["failed"].push_back(k.to_string());
  return j;
}

}  // namespace congruence
