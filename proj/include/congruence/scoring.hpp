#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "congruence/corpus.hpp"
#include "congruence/validation.hpp"

namespace congruence {

struct ItemScore {
  std::string item_id;
  int score = 4;
};

// A respondent's aggregated 1..7 answer per item for one questionnaire.
struct ScoreProfile {
  std::string respondent_id;
  Questionnaire questionnaire = Questionnaire::Knowledge;
  std::vector<ItemScore> scores;
  // Provenance: run keys averaged ("knowledge/TDA100-3") and prompts seen.
  std::vector<std::string> runs_used;
  std::vector<TemplateId> prompts_used;

  std::optional<int> score_of(std::string_view item_id) const;
};

// Rounds a positive mean of integers to the nearest integer, halves away from
// zero, using exact integer arithmetic.
int round_mean(long sum, long count);

// Per item: round(mean over valid runs). Pools all prompts' runs. Throws
// PreconditionError when there are no runs, or when runs disagree on the
// item set.
ScoreProfile aggregate(std::span<const ParsedRun> valid_runs, const std::string& respondent_id = {});

// Same aggregation restricted to each prompt's runs, for diagnostics.
std::map<TemplateId, ScoreProfile> aggregate_by_prompt(std::span<const ParsedRun> valid_runs,
                                                       const std::string& respondent_id = {});

// Forward -> score, Reverse -> 8 - score. Throws PreconditionError outside 1..7.
int adjust_direction(int score, Direction direction);

// Maps a forced-choice answer (7 = action B completely) so that 7 means
// "acts fully in line with the statement": B-aligned -> score, A-aligned ->
// 8 - score. Throws PreconditionError outside 1..7.
int align_scenario(int score, Action aligned_action);

struct PairedVectors {
  std::vector<std::string> item_ids;
  std::vector<double> knowledge;  // x
  std::vector<double> behavior;   // y, aligned
};

// x_i = knowledge score, y_i = aligned behavior score, in item order.
// Throws InvariantError listing the item ids missing from either profile.
PairedVectors paired_vectors(const ScoreProfile& knowledge, const ScoreProfile& behavior,
                             std::span<const PairedItem> items);
PairedVectors paired_vectors(const ScoreProfile& knowledge, const ScoreProfile& behavior,
                             const Corpus& corpus);

// CSV with header respondent_id,questionnaire,item_id,score,runs where runs
// is a ';'-joined list of run keys (empty for human score files).
std::string profiles_to_csv(std::span<const ScoreProfile> profiles);
// Groups rows by (respondent_id, questionnaire), keeping first-seen order.
std::vector<ScoreProfile> profiles_from_csv(std::string_view csv);
std::vector<ScoreProfile> load_score_file(const std::filesystem::path& path);

}  // namespace congruence
