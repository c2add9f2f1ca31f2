#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "congruence/administration.hpp"
#include "congruence/backend.hpp"
#include "congruence/corpus.hpp"
#include "congruence/metrics.hpp"
#include "congruence/scoring.hpp"

namespace congruence {

enum class Cohort { LLM, Human };
std::string_view to_string(Cohort c);
std::optional<Cohort> parse_cohort(std::string_view s);

// One respondent. Exactly one of backend / score_file is set.
struct RosterEntry {
  std::string id;
  Cohort cohort = Cohort::LLM;
  // {"type": "http" | "replay" | "synthetic", ...}; relative paths already
  // resolved against the roster's directory.
  std::optional<nlohmann::json> backend;
  std::optional<std::filesystem::path> score_file;
};

struct Roster {
  std::vector<RosterEntry> respondents;
};

// Throws ConfigError naming the offending field, e.g. "respondents[1].cohort".
Roster parse_roster(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Roster load_roster(const std::filesystem::path& path);

using BackendFactory =
    std::function<std::unique_ptr<RespondentBackend>(const RosterEntry&, std::span<const PairedItem>)>;

// http -> HttpChatBackend, replay -> ReplayBackend over the transcripts stored
// under "transcripts" (respondent "respondent", default the roster id),
// synthetic -> SyntheticRespondent.
std::unique_ptr<RespondentBackend> make_backend(const RosterEntry& entry, std::span<const PairedItem> items);

struct AdministerOptions {
  std::filesystem::path transcripts_root;
  int repetitions = 10;
  Language language = Language::EN;
  std::uint64_t seed = 0;
  bool resume = false;
  int max_retries = 2;
  std::chrono::milliseconds retry_backoff{0};
  BackendFactory backend_factory;  // empty -> make_backend
};

struct AdministerRow {
  std::string respondent_id;
  Questionnaire questionnaire = Questionnaire::Knowledge;
  std::size_t planned = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::size_t reused = 0;
  std::vector<std::string> errors;
};

struct AdministerSummary {
  std::vector<AdministerRow> rows;
  bool complete() const;
};

// Score-file respondents are skipped. Completed runs already on disk are
// reused when options.resume is set.
AdministerSummary cmd_administer(const Corpus& corpus, const Roster& roster, const AdministerOptions& options);

struct GateThresholds {
  double consistency = 0.49;
  double reliability = 0.57;
};

struct EvaluateOptions {
  std::filesystem::path transcripts_root;
  GateThresholds gate;
  std::uint64_t split_seed = 0;
  std::uint64_t permutation_seed = 0;
  std::uint64_t exact_cap = 1'000'000;
  std::uint64_t resamples = 100'000;
};

namespace status {
inline constexpr std::string_view kIncluded = "included";
inline constexpr std::string_view kGated = "gated";
inline constexpr std::string_view kNoValidResponses = "no valid responses";
inline constexpr std::string_view kIncompleteProfile = "incomplete profile";
}  // namespace status

struct RunCounts {
  std::size_t valid = 0;
  std::size_t rejected = 0;
  std::size_t failed = 0;
};

struct RespondentResult {
  std::string id;
  Cohort cohort = Cohort::LLM;
  std::string source;  // "transcripts" or "scores"
  std::string status;
  RunCounts knowledge_runs;
  RunCounts behavior_runs;
  bool gate_applied = false;
  std::optional<double> consistency;
  std::optional<double> reliability;
  std::optional<double> cosine;
  std::optional<double> spearman;
  std::optional<double> vmd;
  std::optional<double> proportion;  // percent
  std::size_t n_pairs = 0;
  std::vector<std::string> warnings;

  bool included() const { return status == status::kIncluded; }
};

// The four congruence columns, in report order.
inline constexpr std::array<std::string_view, 4> kMetricNames = {"cosine", "spearman", "vmd", "proportion"};
std::optional<double> metric_value(const RespondentResult& r, std::string_view metric);
// Lower VMD is better; the others are higher-is-better.
bool lower_is_better(std::string_view metric);

struct SignificanceRow {
  std::string metric;
  std::optional<PermutationResult> result;
  std::string note;
};

struct EvaluationResult {
  GateThresholds gate;
  bool gate_available = false;
  std::uint64_t split_seed = 0;
  std::uint64_t permutation_seed = 0;
  std::vector<RespondentResult> respondents;
  std::vector<SignificanceRow> significance;
  std::vector<ScoreProfile> profiles;
  nlohmann::ordered_json rejections = nlohmann::ordered_json::array();

  std::size_t included_count() const;
};

// Read-only over transcripts. Throws ConfigError listing every roster entry
// whose transcripts or score file are missing.
EvaluationResult cmd_evaluate(const Corpus& corpus, const Roster& roster, const EvaluateOptions& options);

// Rejection report for every transcript-backed respondent.
nlohmann::ordered_json cmd_validate(const Roster& roster, const std::filesystem::path& transcripts_root);

enum class ReportFormat { CSV, JSON, MD };
std::string_view to_string(ReportFormat f);
std::optional<ReportFormat> parse_report_format(std::string_view s);

nlohmann::ordered_json bundle_json(const EvaluationResult& result);
EvaluationResult evaluation_from_json(const nlohmann::ordered_json& j);

std::string congruence_table(const EvaluationResult& result, ReportFormat format);
std::string reliability_table(const EvaluationResult& result, ReportFormat format);
std::string significance_table(const EvaluationResult& result, ReportFormat format);

// Writes bundle.json, rejections.json, profiles.csv and
// {congruence,reliability,significance}.<ext> for each requested format.
// Returns the written paths in a fixed order.
std::vector<std::filesystem::path> write_reports(const EvaluationResult& result, const std::filesystem::path& out_dir,
                                                 std::span<const ReportFormat> formats);

// Synthetic roster entries "<prefix>01".."<prefix>NN" with seeds seed+0..seed+n-1.
Roster synth_roster(std::size_t count, const std::string& prefix, Cohort cohort, double congruence, double noise_sd,
                    std::uint64_t seed);
nlohmann::ordered_json roster_to_json(const Roster& roster);

}  // namespace congruence
