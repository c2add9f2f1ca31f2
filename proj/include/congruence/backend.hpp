#pragma once

#include <optional>
#include <string>
#include <vector>

#include "congruence/prompts.hpp"
#include "congruence/types.hpp"

namespace congruence {

struct DecodingSettings {
  // Unset means "use the backend's own default".
  std::optional<double> temperature;
  std::optional<int> max_tokens;
};

struct BackendRequest {
  std::string respondent_id;
  Questionnaire questionnaire = Questionnaire::Knowledge;
  TemplateId prompt_id = TemplateId::P16;
  int run_index = 0;
  Language language = Language::EN;
  DecodingSettings decoding;
  std::string prompt;
  // Items in the order they are numbered inside the prompt.
  std::vector<std::string> item_ids;
};

// Transient failure (network, HTTP 5xx, timeout). Runs hitting it are retried.
class BackendError : public Error {
 public:
  using Error::Error;
};

// A replay source has no stored reply for the requested run. Not retriable.
class ReplayExhaustedError : public Error {
 public:
  using Error::Error;
};

// A respondent: anything that turns a rendered questionnaire into a reply.
// respond() may be called concurrently from up to max_parallelism() threads.
class RespondentBackend {
 public:
  virtual ~RespondentBackend() = default;
  virtual std::string respond(const BackendRequest& request) = 0;
  virtual int max_parallelism() const { return 1; }
  virtual std::string describe() const = 0;
};

}  // namespace congruence
