#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "congruence/corpus.hpp"
#include "congruence/pipeline.hpp"

namespace fs = std::filesystem;
using namespace congruence;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;
constexpr int kExitGatedOut = 3;

struct Args {
  std::string corpus;
  std::vector<std::string> layouts;
  std::string roster;
  std::string out;
  std::string transcripts;
  std::vector<std::string> formats;
  std::uint64_t seed = 0;
  int repetitions = 10;
  std::string language = "en";
  double gate_consistency = 0.49;
  double gate_reliability = 0.57;
  bool resume = false;
  int max_retries = 2;
  int retry_backoff_ms = 500;
  std::uint64_t resamples = 100'000;
  std::uint64_t exact_cap = 1'000'000;
  std::string bundle;
  // synth
  std::size_t count = 5;
  std::string prefix = "synthetic-";
  std::string cohort = "LLM";
  double congruence = 0.5;
  double noise = 0.5;
};

Corpus read_corpus(const Args& a) {
  std::vector<fs::path> layouts(a.layouts.begin(), a.layouts.end());
  return load_corpus(a.corpus, layouts);
}

fs::path transcripts_dir(const Args& a) {
  return a.transcripts.empty() ? fs::path(a.out) / "transcripts" : fs::path(a.transcripts);
}

std::vector<ReportFormat> formats_of(const Args& a) {
  std::vector<ReportFormat> out;
  for (const auto& f : a.formats) {
    auto p = parse_report_format(f);
    if (!p) throw ConfigError(fmt::format("--format: unknown format '{}'", f));
    out.push_back(*p);
  }
  if (out.empty()) out = {ReportFormat::CSV, ReportFormat::JSON, ReportFormat::MD};
  return out;
}

int run_administer(const Args& a) {
  const auto corpus = read_corpus(a);
  const auto roster = load_roster(a.roster);
  auto language = parse_language(a.language);
  if (!language) throw ConfigError("--language: expected en or zh");
  AdministerOptions opts;
  opts.transcripts_root = transcripts_dir(a);
  opts.repetitions = a.repetitions;
  opts.language = *language;
  opts.seed = a.seed;
  opts.resume = a.resume;
  opts.max_retries = a.max_retries;
  opts.retry_backoff = std::chrono::milliseconds(a.retry_backoff_ms);
  const auto summary = cmd_administer(corpus, roster, opts);
  for (const auto& row : summary.rows) {
    fmt::print(stderr, "{} {}: {}/{} completed ({} reused), {} failed\n", row.respondent_id,
               to_string(row.questionnaire), row.completed, row.planned, row.reused, row.failed);
    for (const auto& e : row.errors) fmt::print(stderr, "  error: {}\n", e);
  }
  return summary.complete() ? kExitOk : kExitPartial;
}

int run_validate(const Args& a) {
  const auto roster = load_roster(a.roster);
  const auto report = cmd_validate(roster, transcripts_dir(a));
  const auto path = fs::path(a.out) / "rejections.json";
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << report.dump(2) << "\n";
  for (const auto& r : report) {
    fmt::print(stderr, "{} {}: {} valid, {} rejected, {} failed\n", r["respondent_id"].get<std::string>(),
               r["questionnaire"].get<std::string>(), r["valid_runs"].get<std::size_t>(), r["rejected"].size(),
               r["failed"].size());
  }
  return kExitOk;
}

int run_evaluate(const Args& a) {
  const auto corpus = read_corpus(a);
  const auto roster = load_roster(a.roster);
  EvaluateOptions opts;
  opts.transcripts_root = transcripts_dir(a);
  opts.gate = {a.gate_consistency, a.gate_reliability};
  opts.split_seed = a.seed;
  opts.permutation_seed = a.seed;
  opts.resamples = a.resamples;
  opts.exact_cap = a.exact_cap;
  const auto result = cmd_evaluate(corpus, roster, opts);
  const auto formats = formats_of(a);
  for (const auto& p : write_reports(result, a.out, formats)) fmt::print(stderr, "wrote {}\n", p.string());
  for (const auto& r : result.respondents) {
    if (!r.included()) fmt::print(stderr, "{}: {}\n", r.id, r.status);
  }
  return result.included_count() == 0 ? kExitGatedOut : kExitOk;
}

int run_report(const Args& a) {
  std::ifstream in(a.bundle, std::ios::binary);
  if (!in) throw ConfigError("cannot open bundle " + a.bundle);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bundle {}: {}", a.bundle, e.what()));
  }
  const auto result = evaluation_from_json(j);
  for (const auto& p : write_reports(result, a.out, formats_of(a))) fmt::print(stderr, "wrote {}\n", p.string());
  return kExitOk;
}

int run_synth(const Args& a) {
  auto cohort = parse_cohort(a.cohort);
  if (!cohort) throw ConfigError("--cohort: expected LLM or Human");
  const auto roster = synth_roster(a.count, a.prefix, *cohort, a.congruence, a.noise, a.seed);
  const auto text = roster_to_json(roster).dump(2) + "\n";
  if (a.out.empty() || a.out == "-") {
    std::cout << text;
  } else {
    const fs::path path(a.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-knowledge / action congruence evaluation for LLM respondents"};
  app.require_subcommand(1);
  Args a;

  auto* administer = app.add_subcommand("administer", "Administer both questionnaires to every roster respondent");
  auto* validate = app.add_subcommand("validate", "Classify stored runs and write rejections.json");
  auto* evaluate = app.add_subcommand("evaluate", "Score, gate and compare respondents; write reports");
  auto* report = app.add_subcommand("report", "Re-render reports from a bundle.json");
  auto* synth = app.add_subcommand("synth", "Write a roster of synthetic respondents");

  for (auto* sub : {administer, evaluate}) {
    sub->add_option("--corpus", a.corpus, "Corpus file (JSON lines)")->required()->check(CLI::ExistingFile);
    sub->add_option("--layout", a.layouts, "Scale layout JSON (repeatable)")->check(CLI::ExistingFile);
  }
  for (auto* sub : {administer, validate, evaluate}) {
    sub->add_option("--roster", a.roster, "Roster JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a.out, "Output directory")->required();
    sub->add_option("--transcripts", a.transcripts, "Transcript directory (default <out>/transcripts)");
  }
  administer->add_option("--seed", a.seed, "Seed recorded in the session plan");
  administer->add_option("--repetitions", a.repetitions, "Runs per prompt")->check(CLI::PositiveNumber);
  administer->add_option("--language", a.language, "en or zh");
  administer->add_flag("--resume", a.resume, "Reuse completed runs already on disk");
  administer->add_option("--max-retries", a.max_retries, "Retries per run on backend errors");
  administer->add_option("--retry-backoff-ms", a.retry_backoff_ms, "Initial retry delay (doubles per attempt)");

  evaluate->add_option("--seed", a.seed, "Seed for the split-half plan and Monte-Carlo permutations");
  evaluate->add_option("--gate-consistency", a.gate_consistency, "Minimum Consistency");
  evaluate->add_option("--gate-reliability", a.gate_reliability, "Minimum split-half Reliability");
  evaluate->add_option("--resamples", a.resamples, "Monte-Carlo resamples when exact enumeration is too large");
  evaluate->add_option("--exact-cap", a.exact_cap, "Largest number of assignments enumerated exactly");
  for (auto* sub : {evaluate, report}) {
    sub->add_option("--format", a.formats, "csv, json or md (repeatable; default all)");
  }
  report->add_option("--bundle", a.bundle, "bundle.json from evaluate")->required()->check(CLI::ExistingFile);
  report->add_option("--out", a.out, "Output directory")->required();

  synth->add_option("--count", a.count, "Number of respondents")->check(CLI::PositiveNumber);
  synth->add_option("--prefix", a.prefix, "Id prefix");
  synth->add_option("--cohort", a.cohort, "LLM or Human");
  synth->add_option("--congruence", a.congruence, "Probability that behavior follows knowledge")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--noise", a.noise, "Per-run noise SD")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", a.seed, "Seed of the first respondent");
  synth->add_option("--out", a.out, "Roster file to write (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*administer) return run_administer(a);
    if (*validate) return run_validate(a);
    if (*evaluate) return run_evaluate(a);
    if (*report) return run_report(a);
    if (*synth) return run_synth(a);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
