#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "congruence/administration.hpp"
#include "congruence/backend.hpp"
#include "congruence/corpus.hpp"

namespace congruence {

// Serves stored replies keyed by (questionnaire, prompt_id, run_index).
// Throws ReplayExhaustedError when a run is not on record.
class ReplayBackend final : public RespondentBackend {
 public:
  explicit ReplayBackend(std::span<const Transcript> transcripts);

  std::string respond(const BackendRequest& request) override;
  int max_parallelism() const override { return 8; }
  std::string describe() const override { return "replay"; }

 private:
  using Key = std::tuple<Questionnaire, TemplateId, int>;
  std::map<Key, RunResponse> runs_;
};

struct SyntheticProfile {
  // Probability that an item's behavior answer mirrors the knowledge answer.
  double congruence = 1.0;
  // Per-run Gaussian noise added before rounding each answer.
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

// Deterministic simulated respondent. Each dimension gets a latent trait
// level; item knowledge answers follow it (reflected for reverse items).
// With probability `congruence` an item's behavior answer is the knowledge
// answer mapped onto the scenario's aligned action, otherwise it is uniform
// on 1..7. Replies use the numbered "k. score" form.
class SyntheticRespondent final : public RespondentBackend {
 public:
  SyntheticRespondent(SyntheticProfile profile, std::span<const PairedItem> items);

  std::string respond(const BackendRequest& request) override;
  int max_parallelism() const override { return 8; }
  std::string describe() const override;

  const std::vector<int>& latent_knowledge() const { return knowledge_; }
  const std::vector<int>& latent_behavior() const { return behavior_; }
  const std::vector<std::string>& item_ids() const { return ids_; }

  // Answers for every item in one run, before item selection.
  std::vector<int> run_answers(Questionnaire questionnaire, TemplateId prompt_id, int run_index) const;

 private:
  SyntheticProfile profile_;
  std::vector<std::string> ids_;
  std::vector<int> knowledge_;
  std::vector<int> behavior_;
};

SyntheticProfile synthetic_profile_from_json(const nlohmann::json& j);

struct HttpBackendConfig {
  // Full URL of an OpenAI-compatible chat completions endpoint.
  std::string endpoint;
  std::string model;
  // Name of the environment variable holding the bearer token; the token
  // itself is never written to any config or transcript.
  std::string api_key_env;
  std::chrono::seconds timeout{120};
  int max_parallelism = 1;
};

// Throws ConfigError naming the offending field.
HttpBackendConfig http_backend_config_from_json(const nlohmann::json& j);
HttpBackendConfig load_http_backend_config(const std::filesystem::path& path);

class HttpChatBackend final : public RespondentBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);

  std::string respond(const BackendRequest& request) override;
  int max_parallelism() const override { return config_.max_parallelism; }
  std::string describe() const override;

 private:
  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace congruence
