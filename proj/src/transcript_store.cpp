#include "congruence/transcript_store.hpp"

#include <fmt/format.h>

#include <fstream>

namespace congruence {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

void write_atomically(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace

fs::path TranscriptStore::session_dir(const std::string& respondent_id, Questionnaire q) const {
  return root_ / respondent_id / std::string(to_string(q));
}

fs::path TranscriptStore::run_path(const std::string& respondent_id, Questionnaire q,
                                   TemplateId prompt_id, int run_index) const {
  return session_dir(respondent_id, q) / RunKey{q, prompt_id, run_index}.file_stem();
}

void TranscriptStore::write_plan(const std::string& respondent_id, const SessionPlan& plan) const {
  nlohmann::ordered_json j;
  j["respondent_id"] = respondent_id;
  j["plan"] = plan_to_json(plan);
  write_atomically(session_dir(respondent_id, plan.questionnaire) / "session.json", j.dump(2) + "\n");
}

void TranscriptStore::write_run(const std::string& respondent_id, Questionnaire q,
                                const RunResponse& run) const {
  auto j = run_to_json(run);
  write_atomically(run_path(respondent_id, q, run.prompt_id, run.run_index), j.dump(2) + "\n");
}

void TranscriptStore::write_transcript(const Transcript& transcript) const {
  write_plan(transcript.respondent_id, transcript.plan);
  for (const auto& run : transcript.runs) {
    write_run(transcript.respondent_id, transcript.plan.questionnaire, run);
  }
}

bool TranscriptStore::has_session(const std::string& respondent_id, Questionnaire q) const {
  return fs::exists(session_dir(respondent_id, q) / "session.json");
}

std::vector<RunResponse> TranscriptStore::read_runs(const std::string& respondent_id, Questionnaire q,
                                                    const SessionPlan& plan) const {
  std::vector<RunResponse> runs;
  for (auto prompt : plan.prompt_ids) {
    for (int r = 0; r < plan.repetitions; ++r) {
      const auto path = run_path(respondent_id, q, prompt, r);
      if (!fs::exists(path)) continue;
      try {
        runs.push_back(run_from_json(read_json(path)));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
      }
    }
  }
  return runs;
}

std::optional<Transcript> TranscriptStore::read_transcript(const std::string& respondent_id,
                                                           Questionnaire q) const {
  const auto session = session_dir(respondent_id, q) / "session.json";
  if (!fs::exists(session)) return std::nullopt;
  Transcript t;
  t.respondent_id = respondent_id;
  try {
    t.plan = plan_from_json(read_json(session).at("plan"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", session.string(), e.what()));
  }
  t.runs = read_runs(respondent_id, q, t.plan);
  return t;
}

}  // namespace congruence
