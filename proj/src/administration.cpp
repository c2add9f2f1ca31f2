#include "congruence/administration.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

namespace congruence {
namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  lines.push_back(std::move(current));
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  }
  return lines;
}

std::optional<std::vector<std::string>> by_numbered_lines(const std::vector<std::string>& lines,
                                                          std::size_t n) {
  // "3. text", "3) text", "3: text", and the full-width forms models emit in Chinese.
  static const std::regex numbered(R"(^\s*(\d{1,4})\s*(?:\.|\)|:|：|．|、)\s*(.*)$)");
  std::vector<std::optional<std::string>> slots(n);
  std::optional<std::size_t> open;
  std::size_t found = 0;
  for (const auto& line : lines) {
    std::smatch m;
    if (std::regex_match(line, m, numbered)) {
      const auto k = static_cast<std::size_t>(std::stoul(m[1].str()));
      if (k < 1 || k > n || slots[k - 1]) return std::nullopt;
      slots[k - 1] = std::string(trim(m[2].str()));
      open = k - 1;
      ++found;
    } else if (open && !trim(line).empty()) {
      auto& slot = *slots[*open];
      if (!slot.empty()) slot += "\n";
      slot += std::string(trim(line));
    }
  }
  if (found != n) return std::nullopt;
  std::vector<std::string> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::optional<std::vector<std::string>> by_number_list(std::string_view reply, std::size_t n) {
  static const std::regex list(R"(^[\s,;，；]*(?:[-+]?\d+[\s,;，；]*)+$)");
  static const std::regex token(R"([-+]?\d+)");
  const std::string text(reply);
  if (!std::regex_match(text, list)) return std::nullopt;
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), token); it != std::sregex_iterator();
       ++it) {
    out.push_back(it->str());
  }
  if (out.size() != n) return std::nullopt;
  return out;
}

}  // namespace

SessionPlan default_plan(Questionnaire questionnaire, Language language) {
  SessionPlan plan;
  plan.questionnaire = questionnaire;
  plan.language = language;
  if (questionnaire == Questionnaire::Knowledge) {
    auto ids = knowledge_template_ids();
    plan.prompt_ids.assign(ids.begin(), ids.end());
  } else {
    plan.prompt_ids = {TemplateId::BEHAVIOR_FC};
  }
  return plan;
}

void validate_plan(const SessionPlan& plan) {
  if (plan.repetitions < 1) throw PreconditionError("session plan: repetitions must be >= 1");
  if (plan.prompt_ids.empty()) throw PreconditionError("session plan: no prompts");
  if (plan.max_retries < 0) throw PreconditionError("session plan: max_retries must be >= 0");
  for (auto id : plan.prompt_ids) {
    const bool knowledge_tmpl = prompt_template(id).is_knowledge();
    if (knowledge_tmpl != (plan.questionnaire == Questionnaire::Knowledge)) {
      throw PreconditionError(fmt::format("session plan: template {} cannot be used for the {} "
                                          "questionnaire",
                                          to_string(id), to_string(plan.questionnaire)));
    }
  }
  if (plan.decoding.temperature && *plan.decoding.temperature < 0.0) {
    throw PreconditionError("session plan: temperature must be >= 0");
  }
  if (plan.decoding.max_tokens && *plan.decoding.max_tokens < 1) {
    throw PreconditionError("session plan: max_tokens must be positive");
  }
}

std::string RunKey::to_string() const {
  return fmt::format("{}/{}", congruence::to_string(questionnaire), file_stem());
}

std::string RunKey::file_stem() const {
  return fmt::format("{}-{}", congruence::to_string(prompt_id), run_index);
}

std::size_t Transcript::completed_count() const {
  return static_cast<std::size_t>(
      std::count_if(runs.begin(), runs.end(), [](const auto& r) { return r.completed(); }));
}

std::size_t Transcript::failed_count() const { return runs.size() - completed_count(); }

bool same_responses(const Transcript& a, const Transcript& b) {
  if (a.respondent_id != b.respondent_id || a.runs.size() != b.runs.size()) return false;
  if (plan_to_json(a.plan) != plan_to_json(b.plan)) return false;
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    const auto& x = a.runs[i];
    const auto& y = b.runs[i];
    if (x.prompt_id != y.prompt_id || x.run_index != y.run_index || x.status != y.status ||
        x.raw_replies != y.raw_replies || x.items != y.items) {
      return false;
    }
  }
  return true;
}

std::vector<std::string> segment_reply(std::string_view reply, std::size_t item_count) {
  if (item_count == 0) return {};
  const auto lines = split_lines(reply);
  if (auto numbered = by_numbered_lines(lines, item_count)) return *numbered;

  std::vector<std::string> non_empty;
  for (const auto& l : lines) {
    if (!trim(l).empty()) non_empty.emplace_back(trim(l));
  }
  if (non_empty.size() == item_count) return non_empty;
  if (item_count > 1 && non_empty.size() == 1) {
    if (auto list = by_number_list(non_empty.front(), item_count)) return *list;
  }
  return std::vector<std::string>(item_count, std::string(reply));
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Transcript run_sessions(const SessionPlan& plan, std::span<const PairedItem> items,
                        RespondentBackend& backend, const RunSessionsOptions& options) {
  validate_plan(plan);
  if (items.empty()) throw PreconditionError("run_sessions: no items to administer");

  Transcript transcript;
  transcript.respondent_id = options.respondent_id;
  transcript.plan = plan;
  transcript.started_at = utc_timestamp();

  std::vector<std::string> item_ids;
  item_ids.reserve(items.size());
  for (const auto& it : items) item_ids.push_back(it.id());

  // Whole-form prompts are rendered once per template.
  std::map<TemplateId, std::string> rendered;
  for (auto id : plan.prompt_ids) {
    rendered.emplace(id, render_prompt(prompt_template(id), items, plan.questionnaire, plan.language));
  }

  std::vector<RunResponse> slots(plan.run_count());
  std::vector<std::size_t> pending;
  for (std::size_t p = 0; p < plan.prompt_ids.size(); ++p) {
    for (int r = 0; r < plan.repetitions; ++r) {
      const std::size_t slot = p * static_cast<std::size_t>(plan.repetitions) + static_cast<std::size_t>(r);
      const auto prior = std::find_if(options.prior_runs.begin(), options.prior_runs.end(),
                                      [&](const RunResponse& run) {
                                        return run.completed() && run.prompt_id == plan.prompt_ids[p] &&
                                               run.run_index == r;
                                      });
      if (prior != options.prior_runs.end()) {
        slots[slot] = *prior;
      } else {
        slots[slot].prompt_id = plan.prompt_ids[p];
        slots[slot].run_index = r;
        pending.push_back(slot);
      }
    }
  }

  auto call = [&](const RunResponse& run, std::string prompt, std::vector<std::string> ids) {
    BackendRequest req;
    req.respondent_id = options.respondent_id;
    req.questionnaire = plan.questionnaire;
    req.prompt_id = run.prompt_id;
    req.run_index = run.run_index;
    req.language = plan.language;
    req.decoding = plan.decoding;
    req.prompt = std::move(prompt);
    req.item_ids = std::move(ids);
    return backend.respond(req);
  };

  auto execute = [&](RunResponse& run) {
    run.started_at = utc_timestamp();
    run.raw_replies.clear();
    run.items.clear();
    for (int attempt = 1;; ++attempt) {
      run.attempts = attempt;
      try {
        std::vector<std::string> replies;
        std::vector<ItemResponse> responses;
        if (plan.per_item) {
          for (std::size_t i = 0; i < items.size(); ++i) {
            auto prompt = render_prompt(prompt_template(run.prompt_id), items.subspan(i, 1),
                                        plan.questionnaire, plan.language);
            replies.push_back(call(run, std::move(prompt), {item_ids[i]}));
            responses.push_back({item_ids[i], std::string(trim(replies.back()))});
          }
        } else {
          replies.push_back(call(run, rendered.at(run.prompt_id), item_ids));
          auto parts = segment_reply(replies.back(), items.size());
          for (std::size_t i = 0; i < items.size(); ++i) {
            responses.push_back({item_ids[i], std::move(parts[i])});
          }
        }
        run.raw_replies = std::move(replies);
        run.items = std::move(responses);
        run.status = RunStatus::Completed;
        run.error.clear();
        break;
      } catch (const BackendError& e) {
        run.error = e.what();
        if (attempt > plan.max_retries) {
          run.status = RunStatus::Failed;
          break;
        }
        if (options.retry_backoff.count() > 0) {
          std::this_thread::sleep_for(options.retry_backoff * (1 << std::min(attempt - 1, 6)));
        }
      }
    }
    run.finished_at = utc_timestamp();
  };

  int parallel = std::max(1, backend.max_parallelism());
  if (options.max_parallelism > 0) parallel = std::min(parallel, options.max_parallelism);
  parallel = std::min<int>(parallel, static_cast<int>(std::max<std::size_t>(pending.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::exception_ptr exhausted;
  std::size_t exhausted_at = pending.size();
  std::mutex mu;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      auto& run = slots[pending[i]];
      try {
        execute(run);
      } catch (const ReplayExhaustedError&) {
        // Other runs may still be on record; finish them so the outcome does
        // not depend on scheduling, then report the earliest gap.
        std::lock_guard lock(mu);
        if (i < exhausted_at) {
          exhausted_at = i;
          exhausted = std::current_exception();
        }
        continue;
      } catch (...) {
        std::lock_guard lock(mu);
        if (!fatal) fatal = std::current_exception();
        abort = true;
        return;
      }
      if (options.on_run_finished) {
        std::lock_guard lock(mu);
        options.on_run_finished(run);
      }
    }
  };

  if (parallel <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(parallel));
    for (int t = 0; t < parallel; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);
  if (exhausted) std::rethrow_exception(exhausted);

  transcript.runs = std::move(slots);
  transcript.finished_at = utc_timestamp();
  return transcript;
}

ordered_json plan_to_json(const SessionPlan& plan) {
  ordered_json j;
  j["questionnaire"] = to_string(plan.questionnaire);
  j["prompt_ids"] = ordered_json::array();
  for (auto id : plan.prompt_ids) j["prompt_ids"].push_back(to_string(id));
  j["repetitions"] = plan.repetitions;
  j["language"] = to_string(plan.language);
  j["temperature"] = plan.decoding.temperature ? ordered_json(*plan.decoding.temperature) : ordered_json(nullptr);
  j["max_tokens"] = plan.decoding.max_tokens ? ordered_json(*plan.decoding.max_tokens) : ordered_json(nullptr);
  j["seed"] = plan.seed;
  j["per_item"] = plan.per_item;
  j["max_retries"] = plan.max_retries;
  return j;
}

SessionPlan plan_from_json(const json& j) {
  SessionPlan plan;
  auto q = parse_questionnaire(j.at("questionnaire").get<std::string>());
  if (!q) throw ParseError("plan: unknown questionnaire");
  plan.questionnaire = *q;
  for (const auto& id : j.at("prompt_ids")) {
    auto t = parse_template_id(id.get<std::string>());
    if (!t) throw ParseError("plan: unknown prompt id " + id.get<std::string>());
    plan.prompt_ids.push_back(*t);
  }
  plan.repetitions = j.at("repetitions").get<int>();
  auto lang = parse_language(j.value("language", std::string("en")));
  if (!lang) throw ParseError("plan: unknown language");
  plan.language = *lang;
  if (j.contains("temperature") && !j["temperature"].is_null()) {
    plan.decoding.temperature = j["temperature"].get<double>();
  }
  if (j.contains("max_tokens") && !j["max_tokens"].is_null()) {
    plan.decoding.max_tokens = j["max_tokens"].get<int>();
  }
  plan.seed = j.value("seed", std::uint64_t{0});
  plan.per_item = j.value("per_item", false);
  plan.max_retries = j.value("max_retries", 2);
  return plan;
}

ordered_json run_to_json(const RunResponse& run) {
  ordered_json j;
  j["prompt_id"] = to_string(run.prompt_id);
  j["run_index"] = run.run_index;
  j["status"] = run.completed() ? "completed" : "failed";
  j["attempts"] = run.attempts;
  j["error"] = run.error;
  j["raw_replies"] = run.raw_replies;
  j["items"] = ordered_json::array();
  for (const auto& item : run.items) {
    ordered_json e;
    e["item_id"] = item.item_id;
    e["raw_text"] = item.raw_text;
    j["items"].push_back(std::move(e));
  }
  j["started_at"] = run.started_at;
  j["finished_at"] = run.finished_at;
  return j;
}

RunResponse run_from_json(const json& j) {
  RunResponse run;
  auto id = parse_template_id(j.at("prompt_id").get<std::string>());
  if (!id) throw ParseError("run: unknown prompt id");
  run.prompt_id = *id;
  run.run_index = j.at("run_index").get<int>();
  run.status = j.value("status", std::string("completed")) == "completed" ? RunStatus::Completed
                                                                         : RunStatus::Failed;
  run.attempts = j.value("attempts", 0);
  run.error = j.value("error", std::string());
  run.raw_replies = j.value("raw_replies", std::vector<std::string>{});
  for (const auto& e : j.at("items")) {
    run.items.push_back({e.at("item_id").get<std::string>(), e.at("raw_text").get<std::string>()});
  }
  run.started_at = j.value("started_at", std::string());
  run.finished_at = j.value("finished_at", std::string());
  return run;
}

ordered_json transcript_to_json(const Transcript& t) {
  ordered_json j;
  j["respondent_id"] = t.respondent_id;
  j["plan"] = plan_to_json(t.plan);
  j["started_at"] = t.started_at;
  j["finished_at"] = t.finished_at;
  j["runs"] = ordered_json::array();
  for (const auto& r : t.runs) j["runs"].push_back(run_to_json(r));
  return j;
}

Transcript transcript_from_json(const json& j) {
  Transcript t;
  t.respondent_id = j.at("respondent_id").get<std::string>();
  t.plan = plan_from_json(j.at("plan"));
  t.started_at = j.value("started_at", std::string());
  t.finished_at = j.value("finished_at", std::string());
  for (const auto& r : j.at("runs")) t.runs.push_back(run_from_json(r));
  return t;
}

}  // namespace congruence
