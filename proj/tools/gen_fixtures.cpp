// Regenerates the bundled layout, placeholder corpus and end-to-end fixtures.
// Usage: gen_fixtures <repo root>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "congruence/backends.hpp"
#include "congruence/corpus.hpp"
#include "congruence/pipeline.hpp"
#include "congruence/rng.hpp"
#include "congruence/transcript_store.hpp"

namespace fs = std::filesystem;
using namespace congruence;

namespace {

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

class RefusingBackend final : public RespondentBackend {
 public:
  std::string respond(const BackendRequest&) override {
    return "As an AI language model, I do not have personal preferences or behaviors.";
  }
  std::string describe() const override { return "refusing"; }
};

// Answers every item at random but the same way on every run.
class ErraticBackend final : public RespondentBackend {
 public:
  explicit ErraticBackend(std::uint64_t seed) : seed_(seed) {}
  std::string respond(const BackendRequest& req) override {
    Rng rng(mix_seed({seed_, static_cast<std::uint64_t>(req.questionnaire)}));
    std::string out;
    for (std::size_t i = 0; i < req.item_ids.size(); ++i) {
      out += fmt::format("{}. {}\n", i + 1, rng.uniform_int(1, 7));
    }
    return out;
  }
  std::string describe() const override { return "erratic"; }

 private:
  std::uint64_t seed_;
};

void administer(const fs::path& root, const std::string& id, RespondentBackend& backend,
                std::span<const PairedItem> items, int repetitions) {
  TranscriptStore store(root);
  for (auto q : {Questionnaire::Knowledge, Questionnaire::Behavior}) {
    auto plan = default_plan(q);
    plan.repetitions = repetitions;
    auto t = run_sessions(plan, items, backend, {.respondent_id = id});
    store.write_transcript(t);
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_fixtures <repo root>\n";
    return 1;
  }
  const fs::path root = argv[1];
  const auto layout = make_tda100_layout();
  write(root / "data/tda100_layout.json", serialize_layout(layout));
  const auto corpus = make_placeholder_corpus(layout);
  write(root / "data/corpus/tda100_placeholder.jsonl", serialize_corpus(corpus));

  const fs::path e2e = root / "tests/fixtures/e2e";
  fs::remove_all(e2e / "recorded");
  const std::span<const PairedItem> items(corpus.items);
  constexpr int kReps = 3;

  Roster roster;
  const double llm_congruence[] = {0.45, 0.2, 0.35, 0.1, 0.3};
  for (int i = 0; i < 5; ++i) {
    const auto id = fmt::format("llm-{}", static_cast<char>('a' + i));
    SyntheticRespondent r({llm_congruence[i], 0.6, 100u + static_cast<std::uint64_t>(i)}, items);
    administer(e2e / "recorded", id, r, items, kReps);
    roster.respondents.push_back({id, Cohort::LLM, nlohmann::json{{"type", "replay"}, {"transcripts", "recorded"}}, {}});
  }
  {
    RefusingBackend b;
    administer(e2e / "recorded", "llm-refuser", b, items, kReps);
    roster.respondents.push_back(
        {"llm-refuser", Cohort::LLM, nlohmann::json{{"type", "replay"}, {"transcripts", "recorded"}}, {}});
  }
  {
    ErraticBackend b(7);
    administer(e2e / "recorded", "llm-erratic", b, items, kReps);
    roster.respondents.push_back(
        {"llm-erratic", Cohort::LLM, nlohmann::json{{"type", "replay"}, {"transcripts", "recorded"}}, {}});
  }

  std::vector<ScoreProfile> humans;
  for (int i = 0; i < 16; ++i) {
    const auto id = fmt::format("human-{:02}", i + 1);
    SyntheticRespondent r({0.9, 0.0, 500u + static_cast<std::uint64_t>(i)}, items);
    ScoreProfile k{id, Questionnaire::Knowledge, {}, {}, {}};
    ScoreProfile b{id, Questionnaire::Behavior, {}, {}, {}};
    for (std::size_t j = 0; j < items.size(); ++j) {
      k.scores.push_back({r.item_ids()[j], r.latent_knowledge()[j]});
      b.scores.push_back({r.item_ids()[j], r.latent_behavior()[j]});
    }
    humans.push_back(std::move(k));
    humans.push_back(std::move(b));
    roster.respondents.push_back({id, Cohort::Human, std::nullopt, fs::path("humans.csv")});
  }
  write(e2e / "humans.csv", profiles_to_csv(humans));
  write(e2e / "roster.json", roster_to_json(roster).dump(2) + "\n");

  // Golden reports from the committed inputs.
  const auto loaded = load_corpus(root / "data/corpus/tda100_placeholder.jsonl",
                                  std::vector<fs::path>{root / "data/tda100_layout.json"});
  EvaluateOptions opts;
  opts.transcripts_root = e2e / "recorded";
  const auto result = cmd_evaluate(loaded, load_roster(e2e / "roster.json"), opts);
  fs::remove_all(e2e / "golden");
  const std::vector<ReportFormat> formats = {ReportFormat::CSV, ReportFormat::JSON, ReportFormat::MD};
  for (const auto& p : write_reports(result, e2e / "golden", formats)) std::cout << p.string() << "\n";
  return 0;
}
