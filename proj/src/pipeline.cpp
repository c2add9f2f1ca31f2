#include "congruence/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "congruence/backends.hpp"
#include "congruence/reliability.hpp"
#include "congruence/transcript_store.hpp"
#include "congruence/validation.hpp"

namespace congruence {
namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<Questionnaire, 2> kQuestionnaires = {Questionnaire::Knowledge, Questionnaire::Behavior};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("failed writing " + path.string());
}

// ---- roster ----

RosterEntry parse_entry(const json& e, const fs::path& base, const std::string& loc) {
  if (!e.is_object()) throw ConfigError(loc + ": must be an object");
  RosterEntry entry;
  if (!e.contains("id") || !e["id"].is_string() || e["id"].get<std::string>().empty()) {
    throw ConfigError(loc + ".id: required non-empty string");
  }
  entry.id = e["id"].get<std::string>();
  if (entry.id.find_first_of("/\\") != std::string::npos || entry.id == "." || entry.id == "..") {
    throw ConfigError(fmt::format("{}.id: '{}' is not usable as a directory name", loc, entry.id));
  }
  if (e.contains("cohort")) {
    auto c = e["cohort"].is_string() ? parse_cohort(e["cohort"].get<std::string>()) : std::nullopt;
    if (!c) throw ConfigError(loc + ".cohort: expected \"LLM\" or \"Human\"");
    entry.cohort = *c;
  }
  const bool has_backend = e.contains("backend");
  const bool has_scores = e.contains("scores");
  if (has_backend == has_scores) throw ConfigError(loc + ": exactly one of 'backend' or 'scores' is required");

  if (has_scores) {
    if (!e["scores"].is_string()) throw ConfigError(loc + ".scores: must be a path string");
    entry.score_file = resolve(base, e["scores"].get<std::string>());
    return entry;
  }

  json b = e["backend"];
  if (!b.is_object() || !b.contains("type") || !b["type"].is_string()) {
    throw ConfigError(loc + ".backend.type: required string");
  }
  const auto type = b["type"].get<std::string>();
  try {
    if (type == "http") {
      http_backend_config_from_json(b);
    } else if (type == "synthetic") {
      synthetic_profile_from_json(b);
    } else if (type == "replay") {
      if (!b.contains("transcripts") || !b["transcripts"].is_string()) {
        throw ConfigError("field 'transcripts' must be a directory path");
      }
      b["transcripts"] = resolve(base, b["transcripts"].get<std::string>()).string();
      if (b.contains("respondent") && !b["respondent"].is_string()) {
        throw ConfigError("field 'respondent' must be a string");
      }
    } else {
      throw ConfigError(fmt::format("unknown type '{}' (expected http, replay or synthetic)", type));
    }
  } catch (const ConfigError& err) {
    throw ConfigError(fmt::format("{}.backend: {}", loc, err.what()));
  }
  entry.backend = std::move(b);
  return entry;
}

// ---- evaluation helpers ----

template <typename F>
std::optional<double> guarded(RespondentResult& r, std::string_view what, F&& f) {
  try {
    return f();
  } catch (const DegenerateError& e) {
    r.warnings.push_back(fmt::format("{} undefined: {}", what, e.what()));
    return std::nullopt;
  }
}

RunCounts count_runs(const FilterResult& f) { return {f.valid.size(), f.rejected.size(), f.failed.size()}; }

std::optional<GroupStats> cohort_stats(const EvaluationResult& result, Cohort cohort, std::string_view metric,
                                       bool included_only) {
  std::vector<double> values;
  for (const auto& r : result.respondents) {
    if (r.cohort != cohort || (included_only && !r.included())) continue;
    std::optional<double> v;
    if (metric == "consistency") {
      v = r.consistency;
    } else if (metric == "reliability") {
      v = r.reliability;
    } else {
      v = metric_value(r, metric);
    }
    if (v) values.push_back(*v);
  }
  if (values.empty()) return std::nullopt;
  return group_stats(values);
}

// ---- formatting ----

std::string num(const std::optional<double>& v, int decimals) {
  if (!v) return "n/a";
  // Avoid printing -0.00.
  double x = *v;
  if (std::abs(x) < 0.5 * std::pow(10.0, -decimals)) x = 0.0;
  return fmt::format("{:.{}f}", x, decimals);
}

std::string csv_num(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string(); }

std::string pct_suffix(std::string_view metric) { return metric == "proportion" ? "%" : ""; }

std::string md_cell(std::string_view metric, const std::optional<double>& v) {
  return v ? num(v, 2) + pct_suffix(metric) : "n/a";
}

std::string md_avg_sd(std::string_view metric, const std::optional<GroupStats>& g) {
  if (!g) return "n/a";
  return fmt::format("{} ± {}{}", num(g->mean, 2), num(g->sd, 2), pct_suffix(metric));
}

// Paper-style MIN/MAX rows are the worst and best value of each column, so
// for VMD "MIN" holds the largest difference.
std::optional<double> worst(std::string_view metric, const std::optional<GroupStats>& g) {
  if (!g) return std::nullopt;
  return lower_is_better(metric) ? g->max : g->min;
}
std::optional<double> best(std::string_view metric, const std::optional<GroupStats>& g) {
  if (!g) return std::nullopt;
  return lower_is_better(metric) ? g->min : g->max;
}

std::string metric_title(std::string_view metric) {
  if (metric == "cosine") return "Cosine Similarity";
  if (metric == "spearman") return "Spearman Rank Correlation";
  if (metric == "vmd") return "Value Mean Difference";
  return "Proportion of Consistent Pairs";
}

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

ojson stats_json(const std::optional<GroupStats>& g) {
  if (!g) return nullptr;
  ojson j;
  j["n"] = g->n;
  j["mean"] = g->mean;
  j["sd"] = g->sd;
  j["min"] = g->min;
  j["max"] = g->max;
  return j;
}

std::string pvalue(const std::optional<PermutationResult>& r) {
  return r ? fmt::format("{:.2e}", r->p_value) : "n/a";
}

std::string method_of(const PermutationResult& r) {
  return fmt::format("{} {}", r.exact ? "exact" : "monte-carlo", to_string(r.side));
}

std::string md_escape(std::string s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string_view to_string(Cohort c) { return c == Cohort::LLM ? "LLM" : "Human"; }

std::optional<Cohort> parse_cohort(std::string_view s) {
  const auto l = lower(s);
  if (l == "llm") return Cohort::LLM;
  if (l == "human") return Cohort::Human;
  return std::nullopt;
}

Roster parse_roster(const json& j, const fs::path& base_dir) {
  if (!j.is_object() || !j.contains("respondents") || !j["respondents"].is_array()) {
    throw ConfigError("roster.respondents: required array");
  }
  Roster roster;
  std::set<std::string> seen;
  const auto& arr = j["respondents"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto loc = fmt::format("respondents[{}]", i);
    auto entry = parse_entry(arr[i], base_dir, loc);
    if (!seen.insert(entry.id).second) throw ConfigError(fmt::format("{}.id: duplicate id '{}'", loc, entry.id));
    roster.respondents.push_back(std::move(entry));
  }
  return roster;
}

Roster load_roster(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open roster " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("roster {}: {}", path.string(), e.what()));
  }
  return parse_roster(j, path.parent_path());
}

std::unique_ptr<RespondentBackend> make_backend(const RosterEntry& entry, std::span<const PairedItem> items) {
  if (!entry.backend) throw ConfigError(fmt::format("respondent {} has no backend", entry.id));
  const auto& b = *entry.backend;
  const auto type = b.at("type").get<std::string>();
  if (type == "http") return std::make_unique<HttpChatBackend>(http_backend_config_from_json(b));
  if (type == "synthetic") return std::make_unique<SyntheticRespondent>(synthetic_profile_from_json(b), items);
  if (type == "replay") {
    TranscriptStore store(b.at("transcripts").get<std::string>());
    const auto source = b.value("respondent", entry.id);
    std::vector<Transcript> transcripts;
    for (auto q : kQuestionnaires) {
      if (auto t = store.read_transcript(source, q)) transcripts.push_back(std::move(*t));
    }
    if (transcripts.empty()) {
      throw ConfigError(fmt::format("replay source for {} has no transcripts under {}", entry.id,
                                    store.session_dir(source, Questionnaire::Knowledge).parent_path().string()));
    }
    return std::make_unique<ReplayBackend>(transcripts);
  }
  throw ConfigError(fmt::format("respondent {}: unknown backend type '{}'", entry.id, type));
}

bool AdministerSummary::complete() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const AdministerRow& r) { return r.failed == 0 && r.completed == r.planned; });
}

AdministerSummary cmd_administer(const Corpus& corpus, const Roster& roster, const AdministerOptions& options) {
  const TranscriptStore store(options.transcripts_root);
  const std::span<const PairedItem> items(corpus.items);
  const BackendFactory factory = options.backend_factory ? options.backend_factory : BackendFactory(make_backend);

  AdministerSummary summary;
  for (const auto& entry : roster.respondents) {
    if (entry.score_file) continue;
    auto backend = factory(entry, items);
    for (auto q : kQuestionnaires) {
      SessionPlan plan = default_plan(q, options.language);
      plan.repetitions = options.repetitions;
      plan.seed = options.seed;
      plan.max_retries = options.max_retries;
      validate_plan(plan);

      AdministerRow row;
      row.respondent_id = entry.id;
      row.questionnaire = q;
      row.planned = plan.run_count();

      RunSessionsOptions run_opts;
      run_opts.respondent_id = entry.id;
      run_opts.retry_backoff = options.retry_backoff;
      if (options.resume && store.has_session(entry.id, q)) {
        run_opts.prior_runs = store.read_runs(entry.id, q, plan);
        row.reused = static_cast<std::size_t>(std::count_if(run_opts.prior_runs.begin(), run_opts.prior_runs.end(),
                                                            [](const RunResponse& r) { return r.completed(); }));
      }
      store.write_plan(entry.id, plan);
      run_opts.on_run_finished = [&](const RunResponse& run) { store.write_run(entry.id, q, run); };

      try {
        const auto t = run_sessions(plan, items, *backend, run_opts);
        row.completed = t.completed_count();
        row.failed = t.failed_count();
        for (const auto& run : t.runs) {
          if (!run.completed() && std::find(row.errors.begin(), row.errors.end(), run.error) == row.errors.end()) {
            row.errors.push_back(run.error);
          }
        }
      } catch (const ReplayExhaustedError& e) {
        // Whatever finished before the abort is already on disk.
        const auto on_disk = store.read_runs(entry.id, q, plan);
        row.completed = static_cast<std::size_t>(
            std::count_if(on_disk.begin(), on_disk.end(), [](const RunResponse& r) { return r.completed(); }));
        row.failed = row.planned - row.completed;
        row.errors.push_back(e.what());
      }
      summary.rows.push_back(std::move(row));
    }
  }
  return summary;
}

std::optional<double> metric_value(const RespondentResult& r, std::string_view metric) {
  if (metric == "cosine") return r.cosine;
  if (metric == "spearman") return r.spearman;
  if (metric == "vmd") return r.vmd;
  if (metric == "proportion") return r.proportion;
  throw PreconditionError(fmt::format("unknown metric '{}'", metric));
}

bool lower_is_better(std::string_view metric) { return metric == "vmd"; }

std::size_t EvaluationResult::included_count() const {
  return static_cast<std::size_t>(
      std::count_if(respondents.begin(), respondents.end(), [](const RespondentResult& r) { return r.included(); }));
}

EvaluationResult cmd_evaluate(const Corpus& corpus, const Roster& roster, const EvaluateOptions& options) {
  const TranscriptStore store(options.transcripts_root);

  // Every input is checked up front so the error lists all gaps at once.
  std::map<fs::path, std::vector<ScoreProfile>> score_files;
  std::vector<std::string> missing;
  for (const auto& entry : roster.respondents) {
    if (entry.score_file) {
      if (!fs::exists(*entry.score_file)) {
        missing.push_back(fmt::format("{} (score file {})", entry.id, entry.score_file->string()));
        continue;
      }
      if (!score_files.count(*entry.score_file)) score_files[*entry.score_file] = load_score_file(*entry.score_file);
      for (auto q : kQuestionnaires) {
        const auto& profiles = score_files[*entry.score_file];
        const bool found = std::any_of(profiles.begin(), profiles.end(), [&](const ScoreProfile& p) {
          return p.respondent_id == entry.id && p.questionnaire == q;
        });
        if (!found) missing.push_back(fmt::format("{} ({} scores)", entry.id, to_string(q)));
      }
      continue;
    }
    for (auto q : kQuestionnaires) {
      if (!store.has_session(entry.id, q)) missing.push_back(fmt::format("{} ({} transcripts)", entry.id, to_string(q)));
    }
  }
  if (!missing.empty()) throw ConfigError(fmt::format("missing inputs: {}", fmt::join(missing, ", ")));

  EvaluationResult result;
  result.gate = options.gate;
  result.split_seed = options.split_seed;
  result.permutation_seed = options.permutation_seed;
  const ScaleLayout* layout = corpus.layout_for(Scale::TDA100);
  result.gate_available = layout != nullptr;
  std::optional<SplitPlan> plan;
  if (layout) plan = split_plan(*layout, options.split_seed);

  for (const auto& entry : roster.respondents) {
    RespondentResult r;
    r.id = entry.id;
    r.cohort = entry.cohort;
    std::optional<ScoreProfile> knowledge, behavior;

    if (entry.score_file) {
      r.source = "scores";
      for (const auto& p : score_files[*entry.score_file]) {
        if (p.respondent_id != entry.id) continue;
        (p.questionnaire == Questionnaire::Knowledge ? knowledge : behavior) = p;
      }
    } else {
      r.source = "transcripts";
      for (auto q : kQuestionnaires) {
        const auto t = store.read_transcript(entry.id, q);
        const auto filtered = filter_valid(*t);
        auto report = rejection_report_json(entry.id, filtered);
        report["questionnaire"] = to_string(q);
        result.rejections.push_back(std::move(report));
        (q == Questionnaire::Knowledge ? r.knowledge_runs : r.behavior_runs) = count_runs(filtered);
        if (!filtered.valid.empty()) {
          (q == Questionnaire::Knowledge ? knowledge : behavior) = aggregate(filtered.valid, entry.id);
        }
      }
    }

    if (!knowledge || !behavior) {
      r.status = status::kNoValidResponses;
      if (!knowledge) r.warnings.push_back("no valid knowledge runs");
      if (!behavior) r.warnings.push_back("no valid behavior runs");
      result.respondents.push_back(std::move(r));
      continue;
    }
    result.profiles.push_back(*knowledge);
    result.profiles.push_back(*behavior);

    try {
      const auto pairs = paired_vectors(*knowledge, *behavior, corpus);
      r.n_pairs = pairs.knowledge.size();
      r.cosine = guarded(r, "cosine", [&] { return cosine(pairs.knowledge, pairs.behavior); });
      r.spearman = guarded(r, "spearman", [&] { return spearman(pairs.knowledge, pairs.behavior); });
      r.vmd = vmd(pairs.knowledge, pairs.behavior);
      r.proportion = 100.0 * consistent_proportion(pairs.knowledge, pairs.behavior);
      if (layout) {
        r.gate_applied = true;
        r.consistency = consistency(*knowledge, *layout);
        r.reliability = guarded(r, "reliability", [&] { return split_half_reliability(*knowledge, *plan, *layout); });
      }
    } catch (const InvariantError& e) {
      r.status = status::kIncompleteProfile;
      r.warnings.push_back(e.what());
      r.cosine = r.spearman = r.vmd = r.proportion = r.consistency = r.reliability = std::nullopt;
      r.n_pairs = 0;
      result.respondents.push_back(std::move(r));
      continue;
    }

    bool pass = true;
    if (r.gate_applied) {
      pass = *r.consistency >= options.gate.consistency && r.reliability &&
             *r.reliability >= options.gate.reliability;
    }
    r.status = pass ? status::kIncluded : status::kGated;
    result.respondents.push_back(std::move(r));
  }

  for (auto metric : kMetricNames) {
    SignificanceRow row;
    row.metric = std::string(metric);
    std::vector<double> llm, human;
    for (const auto& r : result.respondents) {
      if (!r.included()) continue;
      if (auto v = metric_value(r, metric)) (r.cohort == Cohort::LLM ? llm : human).push_back(*v);
    }
    if (llm.empty() || human.empty()) {
      row.note = "needs at least one included respondent in each cohort";
    } else {
      PermutationOptions po;
      po.exact_cap = options.exact_cap;
      po.exact = binomial(llm.size() + human.size(), llm.size()) <= options.exact_cap;
      po.resamples = options.resamples;
      po.seed = options.permutation_seed;
      row.result = permutation_test(llm, human, po);
    }
    result.significance.push_back(std::move(row));
  }
  return result;
}

ojson cmd_validate(const Roster& roster, const fs::path& transcripts_root) {
  const TranscriptStore store(transcripts_root);
  ojson out = ojson::array();
  for (const auto& entry : roster.respondents) {
    if (entry.score_file) continue;
    for (auto q : kQuestionnaires) {
      const auto t = store.read_transcript(entry.id, q);
      if (!t) continue;
      auto report = rejection_report_json(entry.id, filter_valid(*t));
      report["questionnaire"] = to_string(q);
      out.push_back(std::move(report));
    }
  }
  return out;
}

std::string_view to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::CSV: return "csv";
    case ReportFormat::JSON: return "json";
    case ReportFormat::MD: return "md";
  }
  return "md";
}

std::optional<ReportFormat> parse_report_format(std::string_view s) {
  const auto l = lower(s);
  if (l == "csv") return ReportFormat::CSV;
  if (l == "json") return ReportFormat::JSON;
  if (l == "md" || l == "markdown") return ReportFormat::MD;
  return std::nullopt;
}

ojson bundle_json(const EvaluationResult& result) {
  ojson j;
  j["settings"]["gate_consistency"] = result.gate.consistency;
  j["settings"]["gate_reliability"] = result.gate.reliability;
  j["settings"]["gate_available"] = result.gate_available;
  j["settings"]["split_seed"] = result.split_seed;
  j["settings"]["permutation_seed"] = result.permutation_seed;

  j["respondents"] = ojson::array();
  for (const auto& r : result.respondents) {
    ojson e;
    e["id"] = r.id;
    e["cohort"] = to_string(r.cohort);
    e["source"] = r.source;
    e["status"] = r.status;
    for (auto [name, counts] : {std::pair{"knowledge_runs", &r.knowledge_runs}, {"behavior_runs", &r.behavior_runs}}) {
      e[name] = {{"valid", counts->valid}, {"rejected", counts->rejected}, {"failed", counts->failed}};
    }
    e["gate_applied"] = r.gate_applied;
    e["consistency"] = optional_json(r.consistency);
    e["reliability"] = optional_json(r.reliability);
    e["cosine"] = optional_json(r.cosine);
    e["spearman"] = optional_json(r.spearman);
    e["vmd"] = optional_json(r.vmd);
    e["proportion"] = optional_json(r.proportion);
    e["n_pairs"] = r.n_pairs;
    e["warnings"] = r.warnings;
    j["respondents"].push_back(std::move(e));
  }

  j["significance"] = ojson::array();
  for (const auto& row : result.significance) {
    ojson e;
    e["metric"] = row.metric;
    if (row.result) {
      const auto& p = *row.result;
      e["statistic"] = p.statistic;
      e["observed"] = p.observed;
      e["p_value"] = p.p_value;
      e["exact"] = p.exact;
      e["side"] = to_string(p.side);
      e["extreme_count"] = p.extreme_count;
      e["total"] = p.total;
      e["seed"] = p.seed;
    }
    e["note"] = row.note;
    j["significance"].push_back(std::move(e));
  }

  j["profiles"] = ojson::array();
  for (const auto& p : result.profiles) {
    ojson e;
    e["respondent_id"] = p.respondent_id;
    e["questionnaire"] = to_string(p.questionnaire);
    e["runs_used"] = p.runs_used;
    e["scores"] = ojson::array();
    for (const auto& s : p.scores) e["scores"].push_back(ojson::array({s.item_id, s.score}));
    j["profiles"].push_back(std::move(e));
  }
  j["rejections"] = result.rejections;
  return j;
}

EvaluationResult evaluation_from_json(const ojson& j) {
  EvaluationResult result;
  try {
    const auto& s = j.at("settings");
    result.gate.consistency = s.at("gate_consistency").get<double>();
    result.gate.reliability = s.at("gate_reliability").get<double>();
    result.gate_available = s.at("gate_available").get<bool>();
    result.split_seed = s.at("split_seed").get<std::uint64_t>();
    result.permutation_seed = s.at("permutation_seed").get<std::uint64_t>();

    for (const auto& e : j.at("respondents")) {
      RespondentResult r;
      r.id = e.at("id").get<std::string>();
      auto cohort = parse_cohort(e.at("cohort").get<std::string>());
      if (!cohort) throw ConfigError("bundle: unknown cohort for " + r.id);
      r.cohort = *cohort;
      r.source = e.at("source").get<std::string>();
      r.status = e.at("status").get<std::string>();
      for (auto [name, counts] : {std::pair{"knowledge_runs", &r.knowledge_runs}, {"behavior_runs", &r.behavior_runs}}) {
        const auto& c = e.at(name);
        *counts = {c.at("valid").get<std::size_t>(), c.at("rejected").get<std::size_t>(),
                   c.at("failed").get<std::size_t>()};
      }
      r.gate_applied = e.at("gate_applied").get<bool>();
      r.consistency = optional_from(e, "consistency");
      r.reliability = optional_from(e, "reliability");
      r.cosine = optional_from(e, "cosine");
      r.spearman = optional_from(e, "spearman");
      r.vmd = optional_from(e, "vmd");
      r.proportion = optional_from(e, "proportion");
      r.n_pairs = e.at("n_pairs").get<std::size_t>();
      r.warnings = e.at("warnings").get<std::vector<std::string>>();
      result.respondents.push_back(std::move(r));
    }

    for (const auto& e : j.at("significance")) {
      SignificanceRow row;
      row.metric = e.at("metric").get<std::string>();
      row.note = e.at("note").get<std::string>();
      if (e.contains("p_value")) {
        PermutationResult p;
        p.statistic = e.at("statistic").get<std::string>();
        p.observed = e.at("observed").get<double>();
        p.p_value = e.at("p_value").get<double>();
        p.exact = e.at("exact").get<bool>();
        p.side = e.at("side").get<std::string>() == "two-sided" ? Side::TwoSided : Side::OneSidedObservedDirection;
        p.extreme_count = e.at("extreme_count").get<std::uint64_t>();
        p.total = e.at("total").get<std::uint64_t>();
        p.seed = e.at("seed").get<std::uint64_t>();
        row.result = p;
      }
      result.significance.push_back(std::move(row));
    }

    for (const auto& e : j.at("profiles")) {
      ScoreProfile p;
      p.respondent_id = e.at("respondent_id").get<std::string>();
      auto q = parse_questionnaire(e.at("questionnaire").get<std::string>());
      if (!q) throw ConfigError("bundle: unknown questionnaire for " + p.respondent_id);
      p.questionnaire = *q;
      p.runs_used = e.at("runs_used").get<std::vector<std::string>>();
      for (const auto& s : e.at("scores")) p.scores.push_back({s.at(0).get<std::string>(), s.at(1).get<int>()});
      result.profiles.push_back(std::move(p));
    }
    result.rejections = j.at("rejections");
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bundle: {}", e.what()));
  }
  return result;
}

std::string congruence_table(const EvaluationResult& result, ReportFormat format) {
  std::map<std::pair<Cohort, std::string_view>, std::optional<GroupStats>> stats;
  for (auto c : {Cohort::LLM, Cohort::Human}) {
    for (auto m : kMetricNames) stats[{c, m}] = cohort_stats(result, c, m, true);
  }

  if (format == ReportFormat::JSON) {
    ojson j;
    j["respondents"] = ojson::array();
    for (const auto& r : result.respondents) {
      ojson e;
      e["id"] = r.id;
      e["cohort"] = to_string(r.cohort);
      e["status"] = r.status;
      for (auto m : kMetricNames) e[std::string(m)] = r.included() ? optional_json(metric_value(r, m)) : ojson(nullptr);
      e["n_pairs"] = r.n_pairs;
      j["respondents"].push_back(std::move(e));
    }
    for (auto c : {Cohort::LLM, Cohort::Human}) {
      auto& s = j["summary"][std::string(to_string(c))];
      for (auto m : kMetricNames) s[std::string(m)] = stats_json(stats[{c, m}]);
    }
    return j.dump(2) + "\n";
  }

  if (format == ReportFormat::CSV) {
    std::string out = "row,cohort,status,cosine,spearman,vmd,proportion,n_pairs\n";
    for (const auto& r : result.respondents) {
      out += fmt::format("{},{},{}", r.id, to_string(r.cohort), r.status);
      for (auto m : kMetricNames) out += "," + (r.included() ? csv_num(metric_value(r, m)) : std::string());
      out += fmt::format(",{}\n", r.n_pairs);
    }
    auto summary_row = [&](Cohort c, std::string_view label, auto pick) {
      out += fmt::format("{},{},summary", label, to_string(c));
      std::size_t n = 0;
      for (auto m : kMetricNames) {
        const auto& g = stats[{c, m}];
        out += "," + csv_num(pick(m, g));
        if (g) n = std::max(n, g->n);
      }
      out += fmt::format(",{}\n", n);
    };
    for (auto c : {Cohort::LLM, Cohort::Human}) {
      summary_row(c, "AVG", [](auto, const auto& g) { return g ? std::optional(g->mean) : std::nullopt; });
      summary_row(c, "SD", [](auto, const auto& g) { return g ? std::optional(g->sd) : std::nullopt; });
      summary_row(c, "MIN", [](auto m, const auto& g) { return worst(m, g); });
      summary_row(c, "MAX", [](auto m, const auto& g) { return best(m, g); });
    }
    return out;
  }

  std::string out = "| Respondent |";
  for (auto m : kMetricNames) out += " " + metric_title(m) + " |";
  out += "\n|---|---:|---:|---:|---:|\n";
  for (const auto& r : result.respondents) {
    if (r.cohort != Cohort::LLM || !r.included()) continue;
    out += "| " + md_escape(r.id) + " |";
    for (auto m : kMetricNames) out += " " + md_cell(m, metric_value(r, m)) + " |";
    out += "\n";
  }
  auto row = [&](const std::string& label, auto cell) {
    out += "| " + label + " |";
    for (auto m : kMetricNames) out += " " + cell(m) + " |";
    out += "\n";
  };
  row("LLMs (AVG ± SD)", [&](auto m) { return md_avg_sd(m, stats[{Cohort::LLM, m}]); });
  row("Human (AVG ± SD)", [&](auto m) { return md_avg_sd(m, stats[{Cohort::Human, m}]); });
  row("Human (MIN)", [&](auto m) { return md_cell(m, worst(m, stats[{Cohort::Human, m}])); });
  row("Human (MAX)", [&](auto m) { return md_cell(m, best(m, stats[{Cohort::Human, m}])); });

  std::vector<std::string> excluded;
  for (const auto& r : result.respondents) {
    if (!r.included()) excluded.push_back(fmt::format("{} ({}, {})", r.id, to_string(r.cohort), r.status));
  }
  if (!excluded.empty()) out += fmt::format("\nExcluded: {}.\n", fmt::join(excluded, "; "));
  std::vector<std::string> warnings;
  for (const auto& r : result.respondents) {
    if (!r.included()) continue;
    for (const auto& w : r.warnings) warnings.push_back(fmt::format("{}: {}", r.id, w));
  }
  if (!warnings.empty()) out += fmt::format("\nWarnings: {}.\n", fmt::join(warnings, "; "));
  return out;
}

std::string reliability_table(const EvaluationResult& result, ReportFormat format) {
  const auto selected_c = cohort_stats(result, Cohort::LLM, "consistency", true);
  const auto selected_r = cohort_stats(result, Cohort::LLM, "reliability", true);
  const auto human_c = cohort_stats(result, Cohort::Human, "consistency", false);
  const auto human_r = cohort_stats(result, Cohort::Human, "reliability", false);

  if (format == ReportFormat::JSON) {
    ojson j;
    j["gate"] = {{"available", result.gate_available},
                 {"consistency", result.gate.consistency},
                 {"reliability", result.gate.reliability}};
    j["respondents"] = ojson::array();
    for (const auto& r : result.respondents) {
      j["respondents"].push_back({{"id", r.id},
                                  {"cohort", to_string(r.cohort)},
                                  {"status", r.status},
                                  {"consistency", optional_json(r.consistency)},
                                  {"reliability", optional_json(r.reliability)}});
    }
    j["summary"]["selected_llms"] = {{"consistency", stats_json(selected_c)}, {"reliability", stats_json(selected_r)}};
    j["summary"]["human"] = {{"consistency", stats_json(human_c)}, {"reliability", stats_json(human_r)}};
    return j.dump(2) + "\n";
  }

  if (format == ReportFormat::CSV) {
    std::string out = "row,cohort,status,consistency,reliability\n";
    for (const auto& r : result.respondents) {
      out += fmt::format("{},{},{},{},{}\n", r.id, to_string(r.cohort), r.status, csv_num(r.consistency),
                         csv_num(r.reliability));
    }
    auto pick = [](const std::optional<GroupStats>& g, auto f) { return g ? std::optional(f(*g)) : std::nullopt; };
    auto summary = [&](std::string_view label, Cohort c, const auto& gc, const auto& gr, auto f) {
      out += fmt::format("{},{},summary,{},{}\n", label, to_string(c), csv_num(pick(gc, f)), csv_num(pick(gr, f)));
    };
    summary("AVG", Cohort::LLM, selected_c, selected_r, [](const GroupStats& g) { return g.mean; });
    summary("SD", Cohort::LLM, selected_c, selected_r, [](const GroupStats& g) { return g.sd; });
    summary("AVG", Cohort::Human, human_c, human_r, [](const GroupStats& g) { return g.mean; });
    summary("SD", Cohort::Human, human_c, human_r, [](const GroupStats& g) { return g.sd; });
    summary("MIN", Cohort::Human, human_c, human_r, [](const GroupStats& g) { return g.min; });
    summary("MAX", Cohort::Human, human_c, human_r, [](const GroupStats& g) { return g.max; });
    return out;
  }

  if (!result.gate_available) return "No TDA-100 layout was loaded, so Consistency and Reliability were not computed.\n";
  std::string out = "| Respondent | Consistency | Reliability | Gate |\n|---|---:|---:|---|\n";
  for (const auto& r : result.respondents) {
    if (r.cohort != Cohort::LLM || !r.gate_applied) continue;
    out += fmt::format("| {} | {} | {} | {} |\n", md_escape(r.id), num(r.consistency, 2), num(r.reliability, 2),
                       r.included() ? "pass" : "fail");
  }
  auto avg_sd = [](const std::optional<GroupStats>& g) {
    return g ? fmt::format("{} ± {}", num(g->mean, 2), num(g->sd, 2)) : std::string("n/a");
  };
  auto field = [](const std::optional<GroupStats>& g, double GroupStats::*f) {
    return g ? num((*g).*f, 2) : std::string("n/a");
  };
  out += fmt::format("| Selected LLMs (AVG ± SD) | {} | {} | |\n", avg_sd(selected_c), avg_sd(selected_r));
  out += fmt::format("| Human (AVG ± SD) | {} | {} | |\n", avg_sd(human_c), avg_sd(human_r));
  out += fmt::format("| Human (MIN) | {} | {} | |\n", field(human_c, &GroupStats::min), field(human_r, &GroupStats::min));
  out += fmt::format("| Human (MAX) | {} | {} | |\n", field(human_c, &GroupStats::max), field(human_r, &GroupStats::max));
  out += fmt::format("\nGate: Consistency >= {:.2f} and Reliability >= {:.2f}.\n", result.gate.consistency,
                     result.gate.reliability);
  return out;
}

std::string significance_table(const EvaluationResult& result, ReportFormat format) {
  if (format == ReportFormat::JSON) {
    ojson j = ojson::array();
    for (const auto& row : result.significance) {
      ojson e;
      e["metric"] = row.metric;
      e["p_value"] = row.result ? ojson(row.result->p_value) : ojson(nullptr);
      e["observed_difference"] = row.result ? ojson(row.result->observed) : ojson(nullptr);
      e["method"] = row.result ? method_of(*row.result) : "";
      e["extreme_count"] = row.result ? ojson(row.result->extreme_count) : ojson(nullptr);
      e["total"] = row.result ? ojson(row.result->total) : ojson(nullptr);
      e["note"] = row.note;
      j.push_back(std::move(e));
    }
    return j.dump(2) + "\n";
  }

  if (format == ReportFormat::CSV) {
    std::string out = "metric,p_value,observed_difference,method,extreme_count,total,note\n";
    for (const auto& row : result.significance) {
      if (row.result) {
        const auto& p = *row.result;
        out += fmt::format("{},{:.6e},{:.6f},{},{},{},{}\n", row.metric, p.p_value, p.observed, method_of(p),
                           p.extreme_count, p.total, row.note);
      } else {
        out += fmt::format("{},,,,,,{}\n", row.metric, row.note);
      }
    }
    return out;
  }

  std::string out = "| P-value of comparison between LLMs & Human |";
  for (const auto& row : result.significance) out += " " + metric_title(row.metric) + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < result.significance.size(); ++i) out += "---:|";
  out += "\n| Congruence metrics |";
  for (const auto& row : result.significance) out += " " + pvalue(row.result) + " |";
  out += "\n";
  if (!result.significance.empty() && result.significance.front().result) {
    const auto& p = *result.significance.front().result;
    out += fmt::format("\nPermutation test on the difference of cohort means ({}, {} assignments{}).\n",
                       method_of(p), p.total, p.exact ? "" : fmt::format(", seed {}", p.seed));
  }
  for (const auto& row : result.significance) {
    if (!row.note.empty()) out += fmt::format("\n{}: {}.\n", row.metric, row.note);
  }
  return out;
}

std::vector<fs::path> write_reports(const EvaluationResult& result, const fs::path& out_dir,
                                    std::span<const ReportFormat> formats) {
  std::vector<fs::path> written;
  auto emit = [&](const fs::path& p, const std::string& text) {
    write_text(p, text);
    written.push_back(p);
  };
  emit(out_dir / "bundle.json", bundle_json(result).dump(2) + "\n");
  emit(out_dir / "rejections.json", result.rejections.dump(2) + "\n");
  emit(out_dir / "profiles.csv", profiles_to_csv(result.profiles));
  for (auto f : formats) {
    const auto ext = std::string(to_string(f));
    emit(out_dir / ("congruence." + ext), congruence_table(result, f));
    emit(out_dir / ("reliability." + ext), reliability_table(result, f));
    emit(out_dir / ("significance." + ext), significance_table(result, f));
  }
  return written;
}

Roster synth_roster(std::size_t count, const std::string& prefix, Cohort cohort, double congruence, double noise_sd,
                    std::uint64_t seed) {
  if (count == 0) throw ConfigError("synth: count must be positive");
  if (congruence < 0.0 || congruence > 1.0) throw ConfigError("synth: congruence must lie in [0, 1]");
  if (noise_sd < 0.0) throw ConfigError("synth: noise must be >= 0");
  const int width = std::max<int>(2, static_cast<int>(std::to_string(count).size()));
  Roster roster;
  for (std::size_t i = 0; i < count; ++i) {
    RosterEntry e;
    e.id = fmt::format("{}{:0{}}", prefix, i + 1, width);
    e.cohort = cohort;
    json b;
    b["type"] = "synthetic";
    b["congruence"] = congruence;
    b["noise_sd"] = noise_sd;
    b["seed"] = seed + i;
    e.backend = std::move(b);
    roster.respondents.push_back(std::move(e));
  }
  return roster;
}

ojson roster_to_json(const Roster& roster) {
  ojson j;
  j["respondents"] = ojson::array();
  for (const auto& r : roster.respondents) {
    ojson e;
    e["id"] = r.id;
    e["cohort"] = to_string(r.cohort);
    if (r.backend) {
      ojson b;
      b["type"] = r.backend->at("type");
      for (const auto& [k, v] : r.backend->items()) {
        if (k != "type") b[k] = v;
      }
      e["backend"] = std::move(b);
    }
    if (r.score_file) e["scores"] = r.score_file->generic_string();
    j["respondents"].push_back(std::move(e));
  }
  return j;
}

}  // namespace congruence
