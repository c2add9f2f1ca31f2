#include "congruence/scoring.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace congruence {
namespace {

void require_score(int score, const char* op) {
  if (score < 1 || score > 7) {
    throw PreconditionError(fmt::format("{}: score {} outside 1..7", op, score));
  }
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::optional<int> ScoreProfile::score_of(std::string_view item_id) const {
  for (const auto& s : scores) {
    if (s.item_id == item_id) return s.score;
  }
  return std::nullopt;
}

int round_mean(long sum, long count) {
  if (count <= 0) throw PreconditionError("round_mean: count must be positive");
  const long magnitude = (2 * std::abs(sum) + count) / (2 * count);
  return static_cast<int>(sum < 0 ? -magnitude : magnitude);
}

ScoreProfile aggregate(std::span<const ParsedRun> valid_runs, const std::string& respondent_id) {
  if (valid_runs.empty()) throw PreconditionError("aggregate: no valid runs");

  const auto& first = valid_runs.front();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < first.items.size(); ++i) index.emplace(first.items[i].item_id, i);
  std::vector<long> sums(first.items.size(), 0);

  ScoreProfile profile;
  profile.respondent_id = respondent_id;
  profile.questionnaire = first.questionnaire;
  for (const auto& run : valid_runs) {
    if (run.items.size() != first.items.size()) {
      throw PreconditionError(fmt::format("aggregate: run {} covers {} items, expected {}",
                                          run.key().to_string(), run.items.size(), first.items.size()));
    }
    for (const auto& item : run.items) {
      auto it = index.find(item.item_id);
      if (it == index.end()) {
        throw PreconditionError(fmt::format("aggregate: run {} has unexpected item {}",
                                            run.key().to_string(), item.item_id));
      }
      if (!has_score(item.score)) {
        throw PreconditionError(fmt::format("aggregate: run {} item {} has no score",
                                            run.key().to_string(), item.item_id));
      }
      const int s = std::get<int>(item.score);
      require_score(s, "aggregate");
      sums[it->second] += s;
    }
    profile.runs_used.push_back(run.key().to_string());
    if (std::find(profile.prompts_used.begin(), profile.prompts_used.end(), run.prompt_id) ==
        profile.prompts_used.end()) {
      profile.prompts_used.push_back(run.prompt_id);
    }
  }
  const long n = static_cast<long>(valid_runs.size());
  for (std::size_t i = 0; i < first.items.size(); ++i) {
    profile.scores.push_back({first.items[i].item_id, round_mean(sums[i], n)});
  }
  return profile;
}

std::map<TemplateId, ScoreProfile> aggregate_by_prompt(std::span<const ParsedRun> valid_runs,
                                                       const std::string& respondent_id) {
  std::map<TemplateId, std::vector<ParsedRun>> grouped;
  for (const auto& run : valid_runs) grouped[run.prompt_id].push_back(run);
  std::map<TemplateId, ScoreProfile> out;
  for (const auto& [prompt, runs] : grouped) out.emplace(prompt, aggregate(runs, respondent_id));
  return out;
}

int adjust_direction(int score, Direction direction) {
  require_score(score, "adjust_direction");
  return direction == Direction::Forward ? score : 8 - score;
}

int align_scenario(int score, Action aligned_action) {
  require_score(score, "align_scenario");
  return aligned_action == Action::B ? score : 8 - score;
}

PairedVectors paired_vectors(const ScoreProfile& knowledge, const ScoreProfile& behavior,
                             std::span<const PairedItem> items) {
  std::unordered_map<std::string_view, int> k_scores;
  std::unordered_map<std::string_view, int> b_scores;
  for (const auto& s : knowledge.scores) k_scores.emplace(s.item_id, s.score);
  for (const auto& s : behavior.scores) b_scores.emplace(s.item_id, s.score);

  std::vector<std::string> missing;
  PairedVectors out;
  for (const auto& item : items) {
    auto k = k_scores.find(item.id());
    auto b = b_scores.find(item.id());
    if (k == k_scores.end()) missing.push_back(fmt::format("{} (knowledge)", item.id()));
    if (b == b_scores.end()) missing.push_back(fmt::format("{} (behavior)", item.id()));
    if (k == k_scores.end() || b == b_scores.end()) continue;
    out.item_ids.push_back(item.id());
    out.knowledge.push_back(k->second);
    out.behavior.push_back(align_scenario(b->second, item.scenario.aligned_action));
  }
  if (!missing.empty()) {
    throw InvariantError(knowledge.respondent_id, "item-set-mismatch",
                         fmt::format("profiles do not cover: {}", fmt::join(missing, ", ")));
  }
  return out;
}

PairedVectors paired_vectors(const ScoreProfile& knowledge, const ScoreProfile& behavior,
                             const Corpus& corpus) {
  return paired_vectors(knowledge, behavior, std::span<const PairedItem>(corpus.items));
}

std::string profiles_to_csv(std::span<const ScoreProfile> profiles) {
  std::string out = "respondent_id,questionnaire,item_id,score,runs\n";
  for (const auto& p : profiles) {
    const std::string runs = fmt::format("{}", fmt::join(p.runs_used, ";"));
    for (const auto& s : p.scores) {
      out += fmt::format("{},{},{},{},{}\n", p.respondent_id, to_string(p.questionnaire), s.item_id,
                         s.score, runs);
    }
  }
  return out;
}

std::vector<ScoreProfile> profiles_from_csv(std::string_view csv) {
  std::vector<ScoreProfile> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (!header_seen) {
      header_seen = true;
      if (fields.size() < 4 || fields[0] != "respondent_id") {
        throw ParseError("score file must start with header respondent_id,questionnaire,item_id,score,runs",
                         line_no);
      }
      continue;
    }
    if (fields.size() != 4 && fields.size() != 5) throw ParseError("expected 4 or 5 fields", line_no);
    auto q = parse_questionnaire(fields[1]);
    if (!q) throw ParseError(fmt::format("unknown questionnaire '{}'", fields[1]), line_no);
    int score = 0;
    try {
      std::size_t used = 0;
      score = std::stoi(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(fmt::format("score '{}' is not an integer", fields[3]), line_no);
    }
    if (score < 1 || score > 7) throw ParseError(fmt::format("score {} outside 1..7", score), line_no);

    auto it = std::find_if(out.begin(), out.end(), [&](const ScoreProfile& p) {
      return p.respondent_id == fields[0] && p.questionnaire == *q;
    });
    if (it == out.end()) {
      ScoreProfile p;
      p.respondent_id = fields[0];
      p.questionnaire = *q;
      if (fields.size() == 5 && !fields[4].empty()) p.runs_used = split(fields[4], ';');
      out.push_back(std::move(p));
      it = std::prev(out.end());
    }
    if (it->score_of(fields[2])) {
      throw ParseError(fmt::format("duplicate item '{}' for {}", fields[2], fields[0]), line_no);
    }
    it->scores.push_back({fields[2], score});
  }
  return out;
}

std::vector<ScoreProfile> load_score_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open score file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return profiles_from_csv(ss.str());
}

}  // namespace congruence
