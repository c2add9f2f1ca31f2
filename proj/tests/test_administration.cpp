#include "congruence/administration.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <mutex>
#include <set>

#include "congruence/backends.hpp"
#include "congruence/transcript_store.hpp"

using namespace congruence;

namespace {

const Corpus& table5() {
  static const Corpus c = load_corpus(CONGRUENCE_DATA_DIR "/corpus/table5.jsonl");
  return c;
}

// Answers "k. v" lines where v depends on the run key; counts calls.
class CountingBackend : public RespondentBackend {
 public:
  explicit CountingBackend(int parallelism = 1) : parallelism_(parallelism) {}
  std::string respond(const BackendRequest& req) override {
    ++calls;
    std::lock_guard lock(mu);
    prompts.insert(req.prompt);
    std::string out;
    for (std::size_t i = 0; i < req.item_ids.size(); ++i) {
      out += std::to_string(i + 1) + ". " + std::to_string(1 + (i + static_cast<std::size_t>(req.run_index)) % 7) + "\n";
    }
    return out;
  }
  int max_parallelism() const override { return parallelism_; }
  std::string describe() const override { return "counting"; }

  std::atomic<int> calls{0};
  std::mutex mu;
  std::set<std::string> prompts;

 private:
  int parallelism_;
};

// Fails the first `failures` calls for every run, then answers.
class FlakyBackend : public RespondentBackend {
 public:
  explicit FlakyBackend(int failures) : failures_(failures) {}
  std::string respond(const BackendRequest& req) override {
    std::lock_guard lock(mu_);
    if (seen_[req.run_index]++ < failures_) throw BackendError("503");
    return "1. 2\n2. 6\n";
  }
  std::string describe() const override { return "flaky"; }

 private:
  int failures_;
  std::mutex mu_;
  std::map<int, int> seen_;
};

std::span<const PairedItem> first(std::size_t n) { return {table5().items.data(), n}; }

}  // namespace

TEST(SegmentReply, NumberedLines) {
  EXPECT_EQ(segment_reply("1. 5\n2. 3\n3. 7", 3), (std::vector<std::string>{"5", "3", "7"}));
  EXPECT_EQ(segment_reply("Sure!\n2) 4\n1) 6\n3: 1\n", 3), (std::vector<std::string>{"6", "4", "1"}));
}

TEST(SegmentReply, PlainLinesAndSingleLine) {
  EXPECT_EQ(segment_reply("5\n\n3\n7\n", 3), (std::vector<std::string>{"5", "3", "7"}));
  EXPECT_EQ(segment_reply("5, 3, 7", 3), (std::vector<std::string>{"5", "3", "7"}));
}

TEST(SegmentReply, FallbackKeepsWholeReply) {
  const std::string reply = "As an AI language model, I don't have personal preferences.";
  const auto parts = segment_reply(reply, 4);
  ASSERT_EQ(parts.size(), 4u);
  for (const auto& p : parts) EXPECT_EQ(p, reply);
  EXPECT_TRUE(segment_reply("x", 0).empty());
}

TEST(Plan, DefaultsAndValidation) {
  const auto k = default_plan(Questionnaire::Knowledge);
  EXPECT_EQ(k.prompt_ids.size(), 5u);
  EXPECT_EQ(k.repetitions, 10);
  EXPECT_EQ(k.run_count(), 50u);
  const auto b = default_plan(Questionnaire::Behavior, Language::ZH);
  EXPECT_EQ(b.prompt_ids, std::vector<TemplateId>{TemplateId::BEHAVIOR_FC});
  EXPECT_EQ(b.run_count(), 10u);
  EXPECT_FALSE(b.decoding.temperature.has_value());

  auto bad = k;
  bad.repetitions = 0;
  EXPECT_THROW(validate_plan(bad), PreconditionError);
  bad = k;
  bad.prompt_ids.push_back(TemplateId::BEHAVIOR_FC);
  EXPECT_THROW(validate_plan(bad), PreconditionError);
  bad = b;
  bad.prompt_ids = {TemplateId::P16};
  EXPECT_THROW(validate_plan(bad), PreconditionError);
  bad.prompt_ids.clear();
  EXPECT_THROW(validate_plan(bad), PreconditionError);
}

TEST(RunSessions, RunCountLaw) {
  for (int reps : {1, 3, 10}) {
    for (std::size_t prompts : {1u, 2u, 5u}) {
      auto plan = default_plan(Questionnaire::Knowledge);
      plan.prompt_ids.resize(prompts);
      plan.repetitions = reps;
      CountingBackend backend;
      const auto t = run_sessions(plan, table5().items, backend);
      ASSERT_EQ(t.runs.size(), prompts * static_cast<std::size_t>(reps));
      EXPECT_EQ(backend.calls.load(), static_cast<int>(t.runs.size()));
      for (const auto& run : t.runs) {
        ASSERT_EQ(run.items.size(), 8u);
        for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(run.items[i].item_id, table5().items[i].id());
      }
    }
  }
}

TEST(RunSessions, FiveByTenOrderedByPromptThenRun) {
  CountingBackend backend(8);
  const auto t = run_sessions(default_plan(Questionnaire::Knowledge), table5().items, backend);
  ASSERT_EQ(t.runs.size(), 50u);
  EXPECT_EQ(t.completed_count(), 50u);
  for (std::size_t i = 0; i < t.runs.size(); ++i) {
    EXPECT_EQ(t.runs[i].prompt_id, knowledge_template_ids()[i / 10]);
    EXPECT_EQ(t.runs[i].run_index, static_cast<int>(i % 10));
  }
  EXPECT_EQ(backend.prompts.size(), 5u);
}

TEST(RunSessions, RawReplyKeptVerbatim) {
  class Echo : public RespondentBackend {
   public:
    std::string respond(const BackendRequest&) override { return "  1. 5 \r\n2. 3\n\n"; }
    std::string describe() const override { return "echo"; }
  } backend;
  auto plan = default_plan(Questionnaire::Behavior);
  plan.repetitions = 1;
  const auto t = run_sessions(plan, first(2), backend);
  EXPECT_EQ(t.runs[0].raw_replies, std::vector<std::string>{"  1. 5 \r\n2. 3\n\n"});
}

TEST(RunSessions, ParallelMatchesSerial) {
  auto plan = default_plan(Questionnaire::Knowledge);
  plan.repetitions = 4;
  CountingBackend serial(1), parallel(8);
  const auto a = run_sessions(plan, table5().items, serial);
  const auto b = run_sessions(plan, table5().items, parallel);
  EXPECT_TRUE(same_responses(a, b));
}

TEST(RunSessions, RetriesThenSucceeds) {
  auto plan = default_plan(Questionnaire::Behavior);
  plan.repetitions = 2;
  plan.max_retries = 2;
  FlakyBackend backend(2);
  const auto t = run_sessions(plan, first(2), backend);
  EXPECT_EQ(t.completed_count(), 2u);
  EXPECT_EQ(t.runs[0].attempts, 3);
  EXPECT_TRUE(t.runs[0].error.empty());
}

TEST(RunSessions, ExhaustedRetriesRecordFailure) {
  auto plan = default_plan(Questionnaire::Behavior);
  plan.repetitions = 3;
  plan.max_retries = 1;
  FlakyBackend backend(5);
  std::vector<RunResponse> finished;
  RunSessionsOptions opts;
  opts.on_run_finished = [&](const RunResponse& r) { finished.push_back(r); };
  const auto t = run_sessions(plan, first(2), backend, opts);
  ASSERT_EQ(t.runs.size(), 3u);
  EXPECT_EQ(t.failed_count(), 3u);
  EXPECT_EQ(finished.size(), 3u);
  for (const auto& run : t.runs) {
    EXPECT_EQ(run.status, RunStatus::Failed);
    EXPECT_EQ(run.attempts, 2);
    EXPECT_EQ(run.error, "503");
  }
}

TEST(RunSessions, PriorRunsAreNotReissued) {
  auto plan = default_plan(Questionnaire::Knowledge);
  plan.repetitions = 2;
  CountingBackend first_pass;
  const auto t = run_sessions(plan, table5().items, first_pass);
  EXPECT_EQ(first_pass.calls.load(), 10);

  CountingBackend second_pass;
  RunSessionsOptions opts;
  opts.prior_runs = t.runs;
  const auto again = run_sessions(plan, table5().items, second_pass, opts);
  EXPECT_EQ(second_pass.calls.load(), 0);
  EXPECT_TRUE(same_responses(t, again));

  opts.prior_runs.erase(opts.prior_runs.begin() + 3);
  CountingBackend third_pass;
  run_sessions(plan, table5().items, third_pass, opts);
  EXPECT_EQ(third_pass.calls.load(), 1);
}

TEST(RunSessions, PerItemMode) {
  auto plan = default_plan(Questionnaire::Knowledge);
  plan.prompt_ids = {TemplateId::TDA100};
  plan.repetitions = 1;
  plan.per_item = true;
  CountingBackend backend;
  const auto t = run_sessions(plan, first(3), backend);
  EXPECT_EQ(backend.calls.load(), 3);
  EXPECT_EQ(t.runs[0].raw_replies.size(), 3u);
  EXPECT_EQ(t.runs[0].items[2].raw_text, "1. 1");
}

TEST(RunSessions, ReplayExhaustionPropagates) {
  auto plan = default_plan(Questionnaire::Behavior);
  plan.repetitions = 2;
  CountingBackend backend;
  auto t = run_sessions(plan, first(2), backend);
  t.runs.pop_back();
  ReplayBackend replay(std::span<const Transcript>(&t, 1));
  EXPECT_THROW(run_sessions(plan, first(2), replay), ReplayExhaustedError);
}

TEST(Serialization, TranscriptRoundTrip) {
  auto plan = default_plan(Questionnaire::Knowledge, Language::ZH);
  plan.repetitions = 2;
  plan.decoding.temperature = 0.7;
  plan.decoding.max_tokens = 512;
  plan.seed = 99;
  CountingBackend backend;
  RunSessionsOptions opts;
  opts.respondent_id = "m1";
  auto t = run_sessions(plan, first(2), backend, opts);
  t.runs[3].status = RunStatus::Failed;
  t.runs[3].error = "timeout";
  t.runs[3].items.clear();
  const auto back = transcript_from_json(nlohmann::json::parse(transcript_to_json(t).dump()));
  EXPECT_TRUE(same_responses(t, back));
  EXPECT_EQ(back.plan.decoding.temperature, 0.7);
  EXPECT_EQ(back.plan.decoding.max_tokens, 512);
  EXPECT_EQ(back.plan.language, Language::ZH);
  EXPECT_EQ(back.plan.seed, 99u);
  EXPECT_EQ(transcript_to_json(back).dump(), transcript_to_json(t).dump());
}

TEST(RunKey, Strings) {
  const RunKey k{Questionnaire::Behavior, TemplateId::BEHAVIOR_FC, 7};
  EXPECT_EQ(k.to_string(), "behavior/BEHAVIOR_FC-7");
  EXPECT_EQ(k.file_stem(), "BEHAVIOR_FC-7");
}

TEST(TranscriptStore, WriteReadResume) {
  const auto root = std::filesystem::temp_directory_path() / "congruence_store_test";
  std::filesystem::remove_all(root);
  TranscriptStore store(root);
  auto plan = default_plan(Questionnaire::Knowledge);
  plan.repetitions = 2;
  CountingBackend backend;
  RunSessionsOptions opts;
  opts.respondent_id = "m1";
  const auto t = run_sessions(plan, table5().items, backend, opts);

  EXPECT_FALSE(store.has_session("m1", Questionnaire::Knowledge));
  EXPECT_FALSE(store.read_transcript("m1", Questionnaire::Knowledge).has_value());
  store.write_transcript(t);
  EXPECT_TRUE(store.has_session("m1", Questionnaire::Knowledge));
  EXPECT_TRUE(std::filesystem::exists(root / "m1" / "knowledge" / "TDA100-1"));
  EXPECT_EQ(store.run_path("m1", Questionnaire::Knowledge, TemplateId::P16, 0), root / "m1" / "knowledge" / "P16-0");

  const auto back = store.read_transcript("m1", Questionnaire::Knowledge);
  ASSERT_TRUE(back.has_value());
  EXPECT_TRUE(same_responses(t, *back));

  std::filesystem::remove(root / "m1" / "knowledge" / "NARDI-0");
  const auto runs = store.read_runs("m1", Questionnaire::Knowledge, plan);
  EXPECT_EQ(runs.size(), 9u);
  std::filesystem::remove_all(root);
}
