#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "congruence/types.hpp"

namespace congruence {

// One personality-knowledge statement.
struct Statement {
  std::string item_id;
  Scale scale = Scale::TDA100;
  std::optional<Dimension> dimension;
  std::optional<Direction> direction;
  std::string text_en;
  std::string text_zh;

  const std::string& text(Language lang) const { return lang == Language::EN ? text_en : text_zh; }
};

// The practical-scenario counterpart of a statement: a situation and two
// contrasting actions. aligned_action names the action that embodies the
// statement; it is explicit per item and never assumed.
struct ScenarioItem {
  std::string item_id;
  std::string situation_en;
  std::string situation_zh;
  std::string action_a_en;
  std::string action_a_zh;
  std::string action_b_en;
  std::string action_b_zh;
  Action aligned_action = Action::B;

  const std::string& situation(Language lang) const {
    return lang == Language::EN ? situation_en : situation_zh;
  }
  const std::string& action_a(Language lang) const {
    return lang == Language::EN ? action_a_en : action_a_zh;
  }
  const std::string& action_b(Language lang) const {
    return lang == Language::EN ? action_b_en : action_b_zh;
  }
};

struct PairedItem {
  Statement statement;
  ScenarioItem scenario;

  const std::string& id() const { return statement.item_id; }
};

struct DimensionLayout {
  Dimension dimension = Dimension::Neuroticism;
  std::vector<std::string> forward;
  std::vector<std::string> reverse;

  std::size_t size() const { return forward.size() + reverse.size(); }
  // Forward ids followed by reverse ids.
  std::vector<std::string> ordered_ids() const;
};

// Per-dimension forward/reverse assignment for one source scale.
struct ScaleLayout {
  Scale scale = Scale::TDA100;
  std::vector<DimensionLayout> dimensions;

  std::size_t item_count() const;
  std::size_t forward_count() const;
  std::size_t reverse_count() const;
  std::vector<std::string> ordered_ids() const;
  const DimensionLayout* find(Dimension d) const;
  std::optional<Direction> direction_of(std::string_view item_id) const;
};

struct CorpusMetadata {
  std::string version;
  bool has_en = true;
  bool has_zh = true;
};

// Immutable after load; safe to share read-only across sessions.
struct Corpus {
  std::vector<PairedItem> items;
  std::vector<ScaleLayout> layouts;
  CorpusMetadata metadata;

  const PairedItem* find(std::string_view item_id) const;
  const ScaleLayout* layout_for(Scale scale) const;
};

struct Violation {
  std::string item_id;
  std::string rule;
  std::string detail;
};

// Rule names reported by verify_corpus.
namespace rules {
inline constexpr std::string_view kDuplicateId = "duplicate-id";
inline constexpr std::string_view kMissingDimension = "missing-dimension";
inline constexpr std::string_view kMissingDirection = "missing-direction";
inline constexpr std::string_view kEmptyText = "empty-text";
inline constexpr std::string_view kIdenticalActions = "identical-actions";
inline constexpr std::string_view kPairingMismatch = "pairing-mismatch";
inline constexpr std::string_view kLayoutUnresolved = "layout-unresolved";
inline constexpr std::string_view kLayoutDuplicate = "layout-duplicate";
inline constexpr std::string_view kLayoutScaleMismatch = "layout-scale-mismatch";
inline constexpr std::string_view kLayoutDirectionMismatch = "layout-direction-mismatch";
inline constexpr std::string_view kLayoutDimensionMismatch = "layout-dimension-mismatch";
inline constexpr std::string_view kDuplicateLayout = "duplicate-layout";
inline constexpr std::string_view kPairingBijection = "pairing-bijection";
inline constexpr std::string_view kEmptyCorpus = "empty-corpus";
}  // namespace rules

// Empty iff every type invariant holds. Violations are data, not errors.
std::vector<Violation> verify_corpus(const Corpus& corpus);

// Reads a JSON-lines corpus file (one PairedItem per record) and optional
// layout files. Throws ParseError with the offending line, or InvariantError
// naming the first violated rule.
Corpus load_corpus(const std::filesystem::path& corpus_path,
                   std::span<const std::filesystem::path> layout_paths = {});

// Same as load_corpus but from in-memory text; used by load_corpus and tests.
Corpus parse_corpus(std::string_view corpus_text, std::vector<ScaleLayout> layouts = {});

ScaleLayout load_layout(const std::filesystem::path& path);
ScaleLayout parse_layout(std::string_view json_text);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const Corpus& corpus);
std::string serialize_layout(const ScaleLayout& layout);

// Items of one scale, in layout order when a layout exists for it, otherwise
// in file order.
std::vector<PairedItem> items_for_scale(const Corpus& corpus, Scale scale);
// Overload taking a scale name; throws PreconditionError for unknown names.
std::vector<PairedItem> items_for_scale(const Corpus& corpus, std::string_view scale_name);

// Per-dimension forward/reverse counts published for the TDA-100 scale.
struct LayoutCounts {
  Dimension dimension;
  std::size_t forward;
  std::size_t reverse;
};
std::span<const LayoutCounts> tda100_layout_counts();

// A TDA-100 layout with placeholder ids (e.g. "tda100-n-f01") and the
// published per-dimension counts.
ScaleLayout make_tda100_layout();

// A corpus with one synthetic placeholder PairedItem per layout id, for
// exercising the pipeline end to end without the licensed item texts.
Corpus make_placeholder_corpus(const ScaleLayout& layout);

}  // namespace congruence
