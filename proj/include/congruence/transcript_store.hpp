#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "congruence/administration.hpp"

namespace congruence {

// On-disk layout under a run directory:
//   <root>/<respondent_id>/<questionnaire>/session.json      plan snapshot
//   <root>/<respondent_id>/<questionnaire>/<prompt_id>-<run_index>   one run
class TranscriptStore {
 public:
  explicit TranscriptStore(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }

  std::filesystem::path session_dir(const std::string& respondent_id, Questionnaire q) const;
  std::filesystem::path run_path(const std::string& respondent_id, Questionnaire q,
                                 TemplateId prompt_id, int run_index) const;

  void write_plan(const std::string& respondent_id, const SessionPlan& plan) const;
  void write_run(const std::string& respondent_id, Questionnaire q, const RunResponse& run) const;
  void write_transcript(const Transcript& transcript) const;

  bool has_session(const std::string& respondent_id, Questionnaire q) const;

  // Runs found on disk, in plan order. Missing runs are skipped.
  std::vector<RunResponse> read_runs(const std::string& respondent_id, Questionnaire q,
                                     const SessionPlan& plan) const;

  // nullopt when no session.json exists for the pair.
  std::optional<Transcript> read_transcript(const std::string& respondent_id, Questionnaire q) const;

 private:
  std::filesystem::path root_;
};

}  // namespace congruence
