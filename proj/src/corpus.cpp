#include "congruence/corpus.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace congruence {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::array<LayoutCounts, 5> kTda100Counts{{
    {Dimension::Neuroticism, 9, 5},
    {Dimension::Extraversion, 10, 10},
    {Dimension::Openness, 9, 5},
    {Dimension::Agreeableness, 10, 9},
    {Dimension::Conscientiousness, 6, 7},
}};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<std::string> opt_string(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(fmt::format("field '{}' must be a string", key), line);
  return it->get<std::string>();
}

template <typename Enum, typename Parser>
std::optional<Enum> opt_enum(const json& rec, const char* key, std::size_t line, Parser parse) {
  auto text = opt_string(rec, key, line);
  if (!text || text->empty()) return std::nullopt;
  auto v = parse(*text);
  if (!v) throw ParseError(fmt::format("field '{}' has unknown value '{}'", key, *text), line);
  return v;
}

PairedItem parse_record(const json& rec, std::size_t line) {
  auto id = opt_string(rec, "item_id", line);
  if (!id || id->empty()) throw ParseError("record has no item_id", line);

  auto statement_en = opt_string(rec, "statement_en", line);
  auto statement_zh = opt_string(rec, "statement_zh", line);
  auto situation_en = opt_string(rec, "situation_en", line);
  auto situation_zh = opt_string(rec, "situation_zh", line);
  auto a_en = opt_string(rec, "action_a_en", line);
  auto a_zh = opt_string(rec, "action_a_zh", line);
  auto b_en = opt_string(rec, "action_b_en", line);
  auto b_zh = opt_string(rec, "action_b_zh", line);

  const bool has_statement = statement_en || statement_zh;
  const bool has_scenario = situation_en || situation_zh || a_en || a_zh || b_en || b_zh;
  if (!has_statement && has_scenario) {
    throw InvariantError(*id, std::string(rules::kPairingBijection),
                         fmt::format("line {}: scenario has no statement", line));
  }
  if (has_statement && !has_scenario) {
    throw InvariantError(*id, std::string(rules::kPairingBijection),
                         fmt::format("line {}: statement has no scenario", line));
  }
  if (!has_statement) throw ParseError("record has neither statement nor scenario", line);

  PairedItem item;
  item.statement.item_id = *id;
  auto scale = opt_enum<Scale>(rec, "scale", line, parse_scale);
  if (!scale) throw ParseError("record has no scale", line);
  item.statement.scale = *scale;
  item.statement.dimension = opt_enum<Dimension>(rec, "dimension", line, parse_dimension);
  item.statement.direction = opt_enum<Direction>(rec, "direction", line, parse_direction);
  item.statement.text_en = statement_en.value_or("");
  item.statement.text_zh = statement_zh.value_or("");

  item.scenario.item_id = opt_string(rec, "scenario_item_id", line).value_or(*id);
  item.scenario.situation_en = situation_en.value_or("");
  item.scenario.situation_zh = situation_zh.value_or("");
  item.scenario.action_a_en = a_en.value_or("");
  item.scenario.action_a_zh = a_zh.value_or("");
  item.scenario.action_b_en = b_en.value_or("");
  item.scenario.action_b_zh = b_zh.value_or("");
  auto aligned = opt_enum<Action>(rec, "aligned_action", line, parse_action);
  if (!aligned) throw ParseError("record has no aligned_action", line);
  item.scenario.aligned_action = *aligned;
  return item;
}

ordered_json record_of(const PairedItem& item) {
  const auto& s = item.statement;
  const auto& c = item.scenario;
  ordered_json rec;
  rec["item_id"] = s.item_id;
  rec["scale"] = to_string(s.scale);
  rec["dimension"] = s.dimension ? ordered_json(to_string(*s.dimension)) : ordered_json(nullptr);
  rec["direction"] = s.direction ? ordered_json(to_string(*s.direction)) : ordered_json(nullptr);
  rec["statement_en"] = s.text_en;
  rec["statement_zh"] = s.text_zh;
  rec["situation_en"] = c.situation_en;
  rec["situation_zh"] = c.situation_zh;
  rec["action_a_en"] = c.action_a_en;
  rec["action_a_zh"] = c.action_a_zh;
  rec["action_b_en"] = c.action_b_en;
  rec["action_b_zh"] = c.action_b_zh;
  rec["aligned_action"] = to_string(c.aligned_action);
  if (c.item_id != s.item_id) rec["scenario_item_id"] = c.item_id;
  return rec;
}

void throw_first(const std::vector<Violation>& violations) {
  if (violations.empty()) return;
  const auto& v = violations.front();
  std::string detail = v.detail;
  if (violations.size() > 1) detail += fmt::format(" (and {} more violations)", violations.size() - 1);
  throw InvariantError(v.item_id, v.rule, detail);
}

char dimension_letter(Dimension d) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(to_string(d).front())));
}

}  // namespace

std::vector<std::string> DimensionLayout::ordered_ids() const {
  std::vector<std::string> ids = forward;
  ids.insert(ids.end(), reverse.begin(), reverse.end());
  return ids;
}

std::size_t ScaleLayout::item_count() const {
  std::size_t n = 0;
  for (const auto& d : dimensions) n += d.size();
  return n;
}

std::size_t ScaleLayout::forward_count() const {
  std::size_t n = 0;
  for (const auto& d : dimensions) n += d.forward.size();
  return n;
}

std::size_t ScaleLayout::reverse_count() const {
  std::size_t n = 0;
  for (const auto& d : dimensions) n += d.reverse.size();
  return n;
}

std::vector<std::string> ScaleLayout::ordered_ids() const {
  std::vector<std::string> ids;
  for (const auto& d : dimensions) {
    auto part = d.ordered_ids();
    ids.insert(ids.end(), part.begin(), part.end());
  }
  return ids;
}

const DimensionLayout* ScaleLayout::find(Dimension d) const {
  for (const auto& dim : dimensions) {
    if (dim.dimension == d) return &dim;
  }
  return nullptr;
}

std::optional<Direction> ScaleLayout::direction_of(std::string_view item_id) const {
  for (const auto& d : dimensions) {
    if (std::find(d.forward.begin(), d.forward.end(), item_id) != d.forward.end()) {
      return Direction::Forward;
    }
    if (std::find(d.reverse.begin(), d.reverse.end(), item_id) != d.reverse.end()) {
      return Direction::Reverse;
    }
  }
  return std::nullopt;
}

const PairedItem* Corpus::find(std::string_view item_id) const {
  for (const auto& item : items) {
    if (item.id() == item_id) return &item;
  }
  return nullptr;
}

const ScaleLayout* Corpus::layout_for(Scale scale) const {
  for (const auto& layout : layouts) {
    if (layout.scale == scale) return &layout;
  }
  return nullptr;
}

std::vector<Violation> verify_corpus(const Corpus& corpus) {
  std::vector<Violation> out;
  auto add = [&out](const std::string& id, std::string_view rule, std::string detail) {
    out.push_back({id, std::string(rule), std::move(detail)});
  };

  std::unordered_map<std::string, const PairedItem*> by_id;
  for (const auto& item : corpus.items) {
    const auto& s = item.statement;
    const auto& c = item.scenario;
    if (!by_id.emplace(s.item_id, &item).second) {
      add(s.item_id, rules::kDuplicateId, "item_id appears more than once");
    }
    if (c.item_id != s.item_id) {
      add(s.item_id, rules::kPairingMismatch,
          fmt::format("scenario item_id '{}' differs from statement item_id", c.item_id));
    }
    if (s.scale == Scale::TDA100) {
      if (!s.dimension) add(s.item_id, rules::kMissingDimension, "TDA100 statement has no dimension");
      if (!s.direction) add(s.item_id, rules::kMissingDirection, "TDA100 statement has no direction");
    }
    const std::array<std::pair<const char*, const std::string*>, 8> texts{{
        {"statement_en", &s.text_en},
        {"statement_zh", &s.text_zh},
        {"situation_en", &c.situation_en},
        {"situation_zh", &c.situation_zh},
        {"action_a_en", &c.action_a_en},
        {"action_a_zh", &c.action_a_zh},
        {"action_b_en", &c.action_b_en},
        {"action_b_zh", &c.action_b_zh},
    }};
    for (const auto& [name, text] : texts) {
      if (text->empty()) add(s.item_id, rules::kEmptyText, fmt::format("{} is empty", name));
    }
    if (!c.action_a_en.empty() && c.action_a_en == c.action_b_en) {
      add(s.item_id, rules::kIdenticalActions, "action A and B English texts are identical");
    }
    if (!c.action_a_zh.empty() && c.action_a_zh == c.action_b_zh) {
      add(s.item_id, rules::kIdenticalActions, "action A and B Chinese texts are identical");
    }
  }

  std::set<Scale> seen_scales;
  for (const auto& layout : corpus.layouts) {
    if (!seen_scales.insert(layout.scale).second) {
      add("", rules::kDuplicateLayout,
          fmt::format("more than one layout for scale {}", to_string(layout.scale)));
    }
    std::unordered_set<std::string> placed;
    for (const auto& dim : layout.dimensions) {
      for (Direction dir : {Direction::Forward, Direction::Reverse}) {
        const auto& ids = dir == Direction::Forward ? dim.forward : dim.reverse;
        for (const auto& id : ids) {
          if (!placed.insert(id).second) {
            add(id, rules::kLayoutDuplicate, "item appears more than once in the layout");
          }
          auto it = by_id.find(id);
          if (it == by_id.end()) {
            add(id, rules::kLayoutUnresolved,
                fmt::format("{} layout item has no corpus entry", to_string(layout.scale)));
            continue;
          }
          const auto& s = it->second->statement;
          if (s.scale != layout.scale) {
            add(id, rules::kLayoutScaleMismatch,
                fmt::format("statement scale {} differs from layout scale {}", to_string(s.scale),
                            to_string(layout.scale)));
          }
          if (s.dimension && *s.dimension != dim.dimension) {
            add(id, rules::kLayoutDimensionMismatch,
                fmt::format("statement dimension {} but layout places it under {}",
                            to_string(*s.dimension), to_string(dim.dimension)));
          }
          if (s.direction && *s.direction != dir) {
            add(id, rules::kLayoutDirectionMismatch,
                fmt::format("statement direction {} but layout lists it as {}",
                            to_string(*s.direction), to_string(dir)));
          }
        }
      }
    }
  }
  return out;
}

Corpus parse_corpus(std::string_view corpus_text, std::vector<ScaleLayout> layouts) {
  Corpus corpus;
  std::istringstream in{std::string(corpus_text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(fmt::format("invalid JSON record: {}", e.what()), line_no);
    }
    if (!rec.is_object()) throw ParseError("record is not a JSON object", line_no);
    if (rec.value("record", std::string("item")) == "meta") {
      corpus.metadata.version = rec.value("version", std::string());
      continue;
    }
    corpus.items.push_back(parse_record(rec, line_no));
  }
  if (corpus.items.empty()) {
    throw InvariantError("", std::string(rules::kEmptyCorpus), "empty corpus");
  }
  corpus.layouts = std::move(layouts);
  corpus.metadata.has_en = std::all_of(corpus.items.begin(), corpus.items.end(), [](const auto& i) {
    return !i.statement.text_en.empty() && !i.scenario.situation_en.empty();
  });
  corpus.metadata.has_zh = std::all_of(corpus.items.begin(), corpus.items.end(), [](const auto& i) {
    return !i.statement.text_zh.empty() && !i.scenario.situation_zh.empty();
  });
  throw_first(verify_corpus(corpus));
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& corpus_path,
                   std::span<const std::filesystem::path> layout_paths) {
  std::vector<ScaleLayout> layouts;
  for (const auto& p : layout_paths) layouts.push_back(load_layout(p));
  return parse_corpus(read_file(corpus_path), std::move(layouts));
}

ScaleLayout parse_layout(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("invalid layout JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw ParseError("layout must be a JSON object");
  ScaleLayout layout;
  auto scale = parse_scale(doc.value("scale", std::string()));
  if (!scale) throw ParseError("layout has no valid 'scale'");
  layout.scale = *scale;
  if (!doc.contains("dimensions") || !doc["dimensions"].is_array()) {
    throw ParseError("layout has no 'dimensions' array");
  }
  std::size_t record = 0;
  for (const auto& d : doc["dimensions"]) {
    ++record;
    DimensionLayout dim;
    auto name = parse_dimension(d.value("dimension", std::string()));
    if (!name) throw ParseError("dimension entry has no valid 'dimension'", record);
    dim.dimension = *name;
    try {
      dim.forward = d.value("forward", std::vector<std::string>{});
      dim.reverse = d.value("reverse", std::vector<std::string>{});
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("forward/reverse must be string arrays: {}", e.what()), record);
    }
    layout.dimensions.push_back(std::move(dim));
  }

  std::unordered_set<std::string> placed;
  for (const auto& dim : layout.dimensions) {
    for (const auto& id : dim.ordered_ids()) {
      if (!placed.insert(id).second) {
        throw InvariantError(id, std::string(rules::kLayoutDuplicate),
                             "item appears more than once in the layout");
      }
    }
  }
  return layout;
}

ScaleLayout load_layout(const std::filesystem::path& path) { return parse_layout(read_file(path)); }

std::string serialize_layout(const ScaleLayout& layout) {
  ordered_json doc;
  doc["scale"] = to_string(layout.scale);
  doc["dimensions"] = ordered_json::array();
  for (const auto& d : layout.dimensions) {
    ordered_json entry;
    entry["dimension"] = to_string(d.dimension);
    entry["forward"] = d.forward;
    entry["reverse"] = d.reverse;
    doc["dimensions"].push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  if (!corpus.metadata.version.empty()) {
    ordered_json meta;
    meta["record"] = "meta";
    meta["version"] = corpus.metadata.version;
    out += meta.dump() + "\n";
  }
  for (const auto& item : corpus.items) out += record_of(item).dump() + "\n";
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize_corpus(corpus);
}

std::vector<PairedItem> items_for_scale(const Corpus& corpus, Scale scale) {
  std::vector<PairedItem> out;
  if (const auto* layout = corpus.layout_for(scale)) {
    for (const auto& id : layout->ordered_ids()) {
      if (const auto* item = corpus.find(id)) out.push_back(*item);
    }
    return out;
  }
  for (const auto& item : corpus.items) {
    if (item.statement.scale == scale) out.push_back(item);
  }
  return out;
}

std::vector<PairedItem> items_for_scale(const Corpus& corpus, std::string_view scale_name) {
  auto scale = parse_scale(scale_name);
  if (!scale) throw PreconditionError(fmt::format("unknown scale '{}'", scale_name));
  return items_for_scale(corpus, *scale);
}

std::span<const LayoutCounts> tda100_layout_counts() { return kTda100Counts; }

ScaleLayout make_tda100_layout() {
  ScaleLayout layout;
  layout.scale = Scale::TDA100;
  for (const auto& c : kTda100Counts) {
    DimensionLayout dim;
    dim.dimension = c.dimension;
    const char letter = dimension_letter(c.dimension);
    for (std::size_t i = 1; i <= c.forward; ++i) {
      dim.forward.push_back(fmt::format("tda100-{}-f{:02}", letter, i));
    }
    for (std::size_t i = 1; i <= c.reverse; ++i) {
      dim.reverse.push_back(fmt::format("tda100-{}-r{:02}", letter, i));
    }
    layout.dimensions.push_back(std::move(dim));
  }
  return layout;
}

Corpus make_placeholder_corpus(const ScaleLayout& layout) {
  static const std::map<Dimension, std::string> kZhNames{
      {Dimension::Neuroticism, "神经质"},      {Dimension::Extraversion, "外向性"},
      {Dimension::Openness, "开放性"},         {Dimension::Agreeableness, "宜人性"},
      {Dimension::Conscientiousness, "尽责性"},
  };
  Corpus corpus;
  corpus.metadata.version = fmt::format("placeholder-{}", to_string(layout.scale));
  for (const auto& dim : layout.dimensions) {
    std::string dim_en(to_string(dim.dimension));
    std::transform(dim_en.begin(), dim_en.end(), dim_en.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    const auto& dim_zh = kZhNames.at(dim.dimension);
    for (Direction dir : {Direction::Forward, Direction::Reverse}) {
      const auto& ids = dir == Direction::Forward ? dim.forward : dim.reverse;
      const bool fwd = dir == Direction::Forward;
      for (const auto& id : ids) {
        PairedItem item;
        item.statement.item_id = id;
        item.statement.scale = layout.scale;
        item.statement.dimension = dim.dimension;
        item.statement.direction = dir;
        item.statement.text_en = fmt::format("Placeholder {} statement {} ({}).", dim_en, id,
                                             fwd ? "forward" : "reverse");
        item.statement.text_zh =
            fmt::format("占位陈述：{} {}（{}）。", dim_zh, id, fwd ? "正向" : "反向");
        item.scenario.item_id = id;
        item.scenario.situation_en = fmt::format("In the placeholder situation for {}:", id);
        item.scenario.situation_zh = fmt::format("在 {} 的占位情境中：", id);
        item.scenario.action_a_en = "you act against the statement.";
        item.scenario.action_a_zh = "你的行为与该陈述相反。";
        item.scenario.action_b_en = "you act in line with the statement.";
        item.scenario.action_b_zh = "你的行为与该陈述一致。";
        item.scenario.aligned_action = Action::B;
        corpus.items.push_back(std::move(item));
      }
    }
  }
  corpus.layouts.push_back(layout);
  return corpus;
}

}  // namespace congruence
