#include "congruence/backends.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>

#include <httplib.h>

#include "congruence/rng.hpp"

namespace congruence {
namespace {

using json = nlohmann::json;

int clamp_score(double v) {
  return static_cast<int>(std::clamp<long>(std::lround(v), 1L, 7L));
}

}  // namespace

ReplayBackend::ReplayBackend(std::span<const Transcript> transcripts) {
  for (const auto& t : transcripts) {
    for (const auto& run : t.runs) {
      if (!run.completed()) continue;
      runs_[{t.plan.questionnaire, run.prompt_id, run.run_index}] = run;
    }
  }
}

std::string ReplayBackend::respond(const BackendRequest& request) {
  auto it = runs_.find({request.questionnaire, request.prompt_id, request.run_index});
  if (it == runs_.end()) {
    throw ReplayExhaustedError(fmt::format("replay has no stored run {}/{}-{}",
                                           to_string(request.questionnaire),
                                           to_string(request.prompt_id), request.run_index));
  }
  const auto& run = it->second;
  // Per-item recordings hold one reply per item.
  if (request.item_ids.size() == 1 && run.raw_replies.size() == run.items.size() &&
      run.items.size() > 1) {
    for (std::size_t i = 0; i < run.items.size(); ++i) {
      if (run.items[i].item_id == request.item_ids.front()) return run.raw_replies[i];
    }
    throw ReplayExhaustedError(fmt::format("replay run {}-{} has no reply for item {}",
                                           to_string(request.prompt_id), request.run_index,
                                           request.item_ids.front()));
  }
  if (run.raw_replies.empty()) {
    throw ReplayExhaustedError(fmt::format("replay run {}-{} holds no reply",
                                           to_string(request.prompt_id), request.run_index));
  }
  return run.raw_replies.front();
}

SyntheticRespondent::SyntheticRespondent(SyntheticProfile profile, std::span<const PairedItem> items)
    : profile_(profile) {
  if (profile.congruence < 0.0 || profile.congruence > 1.0) {
    throw PreconditionError("synthetic respondent: congruence must lie in [0, 1]");
  }
  if (profile.noise_sd < 0.0) throw PreconditionError("synthetic respondent: noise_sd must be >= 0");

  Rng rng(mix_seed({profile.seed, 0x7a11e47ULL}));
  std::map<Dimension, double> trait;
  for (Dimension d : {Dimension::Neuroticism, Dimension::Extraversion, Dimension::Openness,
                      Dimension::Agreeableness, Dimension::Conscientiousness}) {
    trait[d] = rng.uniform(1.5, 6.5);
  }
  for (const auto& item : items) {
    ids_.push_back(item.id());
    const auto& s = item.statement;
    int k;
    if (s.dimension) {
      const double adjusted = trait[*s.dimension] + 0.75 * rng.normal();
      const double raw = s.direction == Direction::Reverse ? 8.0 - adjusted : adjusted;
      k = clamp_score(raw);
    } else {
      k = static_cast<int>(rng.uniform_int(1, 7));
    }
    knowledge_.push_back(k);

    int b;
    if (rng.uniform() < profile.congruence) {
      b = item.scenario.aligned_action == Action::B ? k : 8 - k;
    } else {
      b = static_cast<int>(rng.uniform_int(1, 7));
    }
    behavior_.push_back(b);
  }
}

std::vector<int> SyntheticRespondent::run_answers(Questionnaire questionnaire, TemplateId prompt_id,
                                                  int run_index) const {
  const auto& latent = questionnaire == Questionnaire::Knowledge ? knowledge_ : behavior_;
  if (profile_.noise_sd == 0.0) return latent;
  Rng rng(mix_seed({profile_.seed, static_cast<std::uint64_t>(questionnaire),
                    static_cast<std::uint64_t>(prompt_id), static_cast<std::uint64_t>(run_index)}));
  std::vector<int> out;
  out.reserve(latent.size());
  for (int v : latent) out.push_back(clamp_score(v + profile_.noise_sd * rng.normal()));
  return out;
}

std::string SyntheticRespondent::respond(const BackendRequest& request) {
  const auto answers = run_answers(request.questionnaire, request.prompt_id, request.run_index);
  std::vector<int> picked;
  for (const auto& id : request.item_ids) {
    auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) {
      throw PreconditionError(fmt::format("synthetic respondent was not built with item {}", id));
    }
    picked.push_back(answers[static_cast<std::size_t>(it - ids_.begin())]);
  }
  if (picked.size() == 1) return std::to_string(picked.front());
  std::string reply;
  for (std::size_t i = 0; i < picked.size(); ++i) reply += fmt::format("{}. {}\n", i + 1, picked[i]);
  return reply;
}

std::string SyntheticRespondent::describe() const {
  return fmt::format("synthetic(congruence={}, noise_sd={}, seed={})", profile_.congruence,
                     profile_.noise_sd, profile_.seed);
}

SyntheticProfile synthetic_profile_from_json(const json& j) {
  SyntheticProfile p;
  try {
    p.congruence = j.value("congruence", 1.0);
    p.noise_sd = j.value("noise_sd", 0.0);
    p.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("synthetic profile: {}", e.what()));
  }
  if (p.congruence < 0.0 || p.congruence > 1.0) {
    throw ConfigError("synthetic profile: 'congruence' must lie in [0, 1]");
  }
  if (p.noise_sd < 0.0) throw ConfigError("synthetic profile: 'noise_sd' must be >= 0");
  return p;
}

HttpBackendConfig http_backend_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("backend config must be a JSON object");
  for (const char* forbidden : {"api_key", "token", "auth_token"}) {
    if (j.contains(forbidden)) {
      throw ConfigError(fmt::format("backend config field '{}': credentials must be passed via the "
                                    "environment variable named by 'api_key_env'",
                                    forbidden));
    }
  }
  HttpBackendConfig c;
  auto get_string = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) throw ConfigError(fmt::format("backend config field '{}' is required", key));
      return {};
    }
    if (!j[key].is_string()) throw ConfigError(fmt::format("backend config field '{}' must be a string", key));
    return j[key].get<std::string>();
  };
  c.endpoint = get_string("endpoint", true);
  c.model = get_string("model", true);
  c.api_key_env = get_string("api_key_env", false);
  if (j.contains("timeout_seconds")) {
    if (!j["timeout_seconds"].is_number() || j["timeout_seconds"].get<double>() <= 0) {
      throw ConfigError("backend config field 'timeout_seconds' must be a positive number");
    }
    c.timeout = std::chrono::seconds(j["timeout_seconds"].get<long>());
  }
  if (j.contains("max_parallelism")) {
    if (!j["max_parallelism"].is_number_integer() || j["max_parallelism"].get<int>() < 1) {
      throw ConfigError("backend config field 'max_parallelism' must be a positive integer");
    }
    c.max_parallelism = j["max_parallelism"].get<int>();
  }
  return c;
}

HttpBackendConfig load_http_backend_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open backend config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("backend config {}: {}", path.string(), e.what()));
  }
  return http_backend_config_from_json(j);
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url)) {
    throw ConfigError(fmt::format("backend config field 'endpoint': '{}' is not an http(s) URL",
                                  config_.endpoint));
  }
  scheme_host_port_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

std::string HttpChatBackend::respond(const BackendRequest& request) {
  json body;
  body["model"] = config_.model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});
  if (request.decoding.temperature) body["temperature"] = *request.decoding.temperature;
  if (request.decoding.max_tokens) body["max_tokens"] = *request.decoding.max_tokens;

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* token = std::getenv(config_.api_key_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw BackendError(fmt::format("environment variable {} is not set", config_.api_key_env));
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw BackendError(fmt::format("{}{}: {}", scheme_host_port_, path_, httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw BackendError(fmt::format("{}{}: HTTP {}", scheme_host_port_, path_, res->status));
  }
  try {
    const auto reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(fmt::format("unexpected response body: {}", e.what()));
  }
}

std::string HttpChatBackend::describe() const {
  return fmt::format("http({}, model={})", config_.endpoint, config_.model);
}

}  // namespace congruence
