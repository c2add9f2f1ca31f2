#pragma once

#include <chrono>
#include <compare>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "congruence/backend.hpp"
#include "congruence/corpus.hpp"
#include "congruence/prompts.hpp"

namespace congruence {

struct SessionPlan {
  Questionnaire questionnaire = Questionnaire::Knowledge;
  std::vector<TemplateId> prompt_ids;
  int repetitions = 10;
  Language language = Language::EN;
  DecodingSettings decoding;
  std::uint64_t seed = 0;
  // One backend call per item instead of one per questionnaire.
  bool per_item = false;
  // Extra attempts after a BackendError before a run is recorded as failed.
  int max_retries = 2;

  std::size_t run_count() const { return prompt_ids.size() * static_cast<std::size_t>(repetitions); }
};

// All five knowledge prompts x 10 repetitions, or BEHAVIOR_FC x 10.
SessionPlan default_plan(Questionnaire questionnaire, Language language = Language::EN);

// Throws PreconditionError when repetitions < 1, prompt_ids is empty, or a
// template does not match the questionnaire.
void validate_plan(const SessionPlan& plan);

struct RunKey {
  Questionnaire questionnaire = Questionnaire::Knowledge;
  TemplateId prompt_id = TemplateId::P16;
  int run_index = 0;

  auto operator<=>(const RunKey&) const = default;
  // "knowledge/TDA100-3"
  std::string to_string() const;
  // "TDA100-3"
  std::string file_stem() const;
};

struct ItemResponse {
  std::string item_id;
  std::string raw_text;

  bool operator==(const ItemResponse&) const = default;
};

enum class RunStatus { Completed, Failed };

struct RunResponse {
  TemplateId prompt_id = TemplateId::P16;
  int run_index = 0;
  RunStatus status = RunStatus::Completed;
  int attempts = 0;
  std::string error;
  // Backend replies exactly as received: one for whole-form runs, one per
  // item in per-item mode.
  std::vector<std::string> raw_replies;
  std::vector<ItemResponse> items;
  std::string started_at;
  std::string finished_at;

  bool completed() const { return status == RunStatus::Completed; }
};

struct Transcript {
  std::string respondent_id;
  SessionPlan plan;
  // Ordered by (prompt position in plan, run_index).
  std::vector<RunResponse> runs;
  std::string started_at;
  std::string finished_at;

  std::size_t completed_count() const;
  std::size_t failed_count() const;
};

// Compares everything except timestamps and attempt counts.
bool same_responses(const Transcript& a, const Transcript& b);

// Splits a whole-questionnaire reply into one raw text per item. Tries, in
// order: numbered lines ("3. 5", "3) 5", "3: 5"), exactly n non-empty lines,
// a single line holding exactly n numbers. If none fits, every item receives
// the whole reply so downstream validation sees refusals and echoes intact.
std::vector<std::string> segment_reply(std::string_view reply, std::size_t item_count);

struct RunSessionsOptions {
  std::string respondent_id;
  // Completed runs from an earlier attempt; reused without calling the backend.
  std::vector<RunResponse> prior_runs;
  // Invoked once per newly finished run (completed or failed), possibly from
  // worker threads but never concurrently.
  std::function<void(const RunResponse&)> on_run_finished;
  // Caps parallelism below the backend's own limit when > 0.
  int max_parallelism = 0;
  // Delay before the first retry of a failed call; doubles per attempt.
  std::chrono::milliseconds retry_backoff{0};
};

// Administers plan.run_count() runs and returns them ordered by
// (prompt_id position, run_index) regardless of completion order. A run that
// keeps failing with BackendError is recorded as Failed, never dropped.
// ReplayExhaustedError propagates once every other run has finished.
Transcript run_sessions(const SessionPlan& plan, std::span<const PairedItem> items,
                        RespondentBackend& backend, const RunSessionsOptions& options = {});

std::string utc_timestamp();

nlohmann::ordered_json plan_to_json(const SessionPlan& plan);
SessionPlan plan_from_json(const nlohmann::json& j);
nlohmann::ordered_json run_to_json(const RunResponse& run);
RunResponse run_from_json(const nlohmann::json& j);
nlohmann::ordered_json transcript_to_json(const Transcript& t);
Transcript transcript_from_json(const nlohmann::json& j);

}  // namespace congruence
