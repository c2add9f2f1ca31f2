#include "congruence/corpus.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

using namespace congruence;

namespace {

const std::string kTable5 = CONGRUENCE_DATA_DIR "/corpus/table5.jsonl";

std::string record(const std::string& id, const std::string& extra = "") {
  return R"({"item_id": ")" + id +
         R"(", "scale": "TDA100", "dimension": "Openness", "direction": "Forward", "statement_en": "s", )"
         R"("statement_zh": "陈", "situation_en": "x", "situation_zh": "情", "action_a_en": "a", )"
         R"("action_a_zh": "甲", "action_b_en": "b", "action_b_zh": "乙", "aligned_action": "A")" +
         extra + "}\n";
}

std::string rule_of(const std::string& text) {
  try {
    parse_corpus(text);
  } catch (const InvariantError& e) {
    return e.rule();
  }
  return "";
}

bool has_rule(const std::vector<Violation>& v, std::string_view rule) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.rule == rule; });
}

}  // namespace

TEST(LoadCorpus, TableFiveFixture) {
  const auto corpus = load_corpus(kTable5);
  ASSERT_EQ(corpus.items.size(), 8u);
  for (const auto& item : corpus.items) {
    EXPECT_EQ(item.scenario.aligned_action, Action::B) << item.id();
    EXPECT_EQ(item.statement.item_id, item.scenario.item_id);
  }
  EXPECT_EQ(corpus.items[0].statement.text_en, "You waste your time.");
  EXPECT_EQ(corpus.items[0].scenario.action_a_en, "you always use your time productively.");
  EXPECT_EQ(corpus.items[0].statement.direction, Direction::Reverse);
  EXPECT_TRUE(corpus.metadata.has_en);
  EXPECT_TRUE(corpus.metadata.has_zh);
  EXPECT_TRUE(verify_corpus(corpus).empty());
}

TEST(LoadCorpus, PreservesFileOrder) {
  const auto c = parse_corpus(record("z") + record("a") + record("m"));
  EXPECT_EQ(c.items[0].id(), "z");
  EXPECT_EQ(c.items[1].id(), "a");
  EXPECT_EQ(c.items[2].id(), "m");
}

TEST(LoadCorpus, Errors) {
  EXPECT_EQ(rule_of(""), "empty-corpus");
  EXPECT_EQ(rule_of("{\"record\": \"meta\", \"version\": \"1\"}\n"), "empty-corpus");
  EXPECT_EQ(rule_of(R"({"item_id": "x", "situation_en": "s", "action_a_en": "a", "action_b_en": "b", "aligned_action": "B"})"),
            "pairing-bijection");
  EXPECT_EQ(rule_of(record("d") + record("d")), "duplicate-id");
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), ParseError);
  try {
    parse_corpus(record("ok") + "{not json\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_corpus(record("x", R"(, "scale": "MMPI")")), ParseError);
}

TEST(VerifyCorpus, Rules) {
  auto c = load_corpus(kTable5);
  EXPECT_TRUE(verify_corpus(c).empty());

  auto dup = c;
  dup.items.push_back(dup.items[0]);
  const auto v = verify_corpus(dup);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rule, "duplicate-id");
  EXPECT_EQ(v[0].item_id, "table5-01");

  auto nodir = c;
  nodir.items[3].statement.direction.reset();
  const auto v2 = verify_corpus(nodir);
  ASSERT_EQ(v2.size(), 1u);
  EXPECT_EQ(v2[0].rule, "missing-direction");
  EXPECT_EQ(v2[0].item_id, "table5-04");

  auto same = c;
  same.items[1].scenario.action_b_en = same.items[1].scenario.action_a_en;
  EXPECT_TRUE(has_rule(verify_corpus(same), rules::kIdenticalActions));

  auto empty = c;
  empty.items[2].statement.text_zh.clear();
  EXPECT_TRUE(has_rule(verify_corpus(empty), rules::kEmptyText));

  auto mismatch = c;
  mismatch.items[0].scenario.item_id = "other";
  EXPECT_TRUE(has_rule(verify_corpus(mismatch), rules::kPairingMismatch));
}

TEST(VerifyCorpus, LayoutRules) {
  auto c = load_corpus(kTable5);
  ScaleLayout layout;
  layout.scale = Scale::TDA100;
  layout.dimensions.push_back({Dimension::Conscientiousness, {"table5-02"}, {"table5-01", "ghost"}});
  layout.dimensions.push_back({Dimension::Openness, {"table5-01"}, {}});
  c.layouts.push_back(layout);
  const auto v = verify_corpus(c);
  EXPECT_TRUE(has_rule(v, rules::kLayoutUnresolved));
  EXPECT_TRUE(has_rule(v, rules::kLayoutDuplicate));
  EXPECT_TRUE(has_rule(v, rules::kLayoutDimensionMismatch));
  EXPECT_TRUE(has_rule(v, rules::kLayoutDirectionMismatch));
  c.layouts.push_back(layout);
  EXPECT_TRUE(has_rule(verify_corpus(c), rules::kDuplicateLayout));
}

TEST(ItemsForScale, Filters) {
  const auto c = load_corpus(kTable5);
  EXPECT_EQ(items_for_scale(c, Scale::TDA100).size(), 8u);
  EXPECT_TRUE(items_for_scale(c, Scale::SIXTEEN_P).empty());
  EXPECT_TRUE(items_for_scale(c, "SIXTEEN_P").empty());
  EXPECT_THROW(items_for_scale(c, "MMPI"), PreconditionError);
}

TEST(ItemsForScale, LayoutOrderAndPartition) {
  auto c = make_placeholder_corpus(make_tda100_layout());
  // Mixed-scale corpus: relabel a few items and check the partition.
  for (std::size_t i = 0; i < 6; ++i) {
    c.items[i].statement.scale = Scale::SIXTEEN_P;
    c.items[i].statement.item_id = "p16-" + std::to_string(i);
    c.items[i].scenario.item_id = c.items[i].statement.item_id;
  }
  c.layouts.clear();
  const auto tda = items_for_scale(c, Scale::TDA100);
  const auto p16 = items_for_scale(c, Scale::SIXTEEN_P);
  EXPECT_EQ(tda.size() + p16.size() + items_for_scale(c, Scale::BFI44).size(), c.items.size());
  EXPECT_EQ(p16.size(), 6u);

  const auto full = make_placeholder_corpus(make_tda100_layout());
  const auto items = items_for_scale(full, Scale::TDA100);
  ASSERT_EQ(items.size(), 80u);
  const auto ids = full.layouts[0].ordered_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(items[i].id(), ids[i]);
}

TEST(Layout, BundledCounts) {
  const auto layout = load_layout(CONGRUENCE_DATA_DIR "/tda100_layout.json");
  EXPECT_EQ(layout.item_count(), 80u);
  EXPECT_EQ(layout.forward_count(), 44u);
  EXPECT_EQ(layout.reverse_count(), 36u);
  const std::vector<std::size_t> fwd{9, 10, 9, 10, 6}, rev{5, 10, 5, 9, 7}, total{14, 20, 14, 19, 13};
  ASSERT_EQ(layout.dimensions.size(), 5u);
  std::size_t half_ceiling = 0;
  for (std::size_t d = 0; d < 5; ++d) {
    EXPECT_EQ(layout.dimensions[d].forward.size(), fwd[d]);
    EXPECT_EQ(layout.dimensions[d].reverse.size(), rev[d]);
    EXPECT_EQ(layout.dimensions[d].size(), total[d]);
    half_ceiling += (layout.dimensions[d].size() + 1) / 2;
  }
  EXPECT_EQ(half_ceiling, 41u);
  EXPECT_EQ(serialize_layout(layout), serialize_layout(make_tda100_layout()));
  EXPECT_EQ(*layout.direction_of("tda100-c-r07"), Direction::Reverse);
  EXPECT_FALSE(layout.direction_of("table5-01").has_value());

  const auto counts = tda100_layout_counts();
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0},
                            [](std::size_t s, const LayoutCounts& c) { return s + c.forward + c.reverse; }),
            80u);
}

TEST(Layout, ParseErrors) {
  EXPECT_THROW(parse_layout("[]"), ParseError);
  EXPECT_THROW(parse_layout(R"({"scale": "TDA100"})"), ParseError);
  EXPECT_THROW(parse_layout(R"({"scale": "TDA100", "dimensions": [{"dimension": "Grit"}]})"), ParseError);
  try {
    parse_layout(R"({"scale": "TDA100", "dimensions": [{"dimension": "Openness", "forward": ["a"], "reverse": []},
                                                        {"dimension": "Neuroticism", "forward": ["a"], "reverse": []}]})");
    FAIL();
  } catch (const InvariantError& e) {
    EXPECT_EQ(e.rule(), "layout-duplicate");
    EXPECT_EQ(e.item_id(), "a");
  }
}

TEST(Corpus, PlaceholderVerifies) {
  const auto c = make_placeholder_corpus(make_tda100_layout());
  EXPECT_EQ(c.items.size(), 80u);
  EXPECT_TRUE(verify_corpus(c).empty());
  EXPECT_NE(c.find("tda100-n-f01"), nullptr);
  EXPECT_EQ(c.find("nope"), nullptr);
  EXPECT_NE(c.layout_for(Scale::TDA100), nullptr);
  EXPECT_EQ(c.layout_for(Scale::BFI44), nullptr);
}

TEST(Corpus, SaveLoadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "congruence_corpus_rt";
  std::filesystem::create_directories(dir);
  for (const auto& original : {load_corpus(kTable5), make_placeholder_corpus(make_tda100_layout())}) {
    save_corpus(original, dir / "c.jsonl");
    std::ofstream(dir / "layout.json") << (original.layouts.empty() ? "" : serialize_layout(original.layouts[0]));
    std::vector<std::filesystem::path> layouts;
    if (!original.layouts.empty()) layouts.push_back(dir / "layout.json");
    const auto back = load_corpus(dir / "c.jsonl", layouts);
    EXPECT_EQ(serialize_corpus(back), serialize_corpus(original));
    EXPECT_EQ(back.metadata.version, original.metadata.version);
    ASSERT_EQ(back.items.size(), original.items.size());
    for (std::size_t i = 0; i < back.items.size(); ++i) {
      EXPECT_EQ(back.items[i].statement.dimension, original.items[i].statement.dimension);
      EXPECT_EQ(back.items[i].scenario.aligned_action, original.items[i].scenario.aligned_action);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(Corpus, ExplicitAlignedActionKept) {
  const auto c = parse_corpus(record("a1") + record("b1", R"(, "scenario_item_id": "b1")"));
  EXPECT_EQ(c.items[0].scenario.aligned_action, Action::A);
}
