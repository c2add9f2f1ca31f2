#include "congruence/prompts.hpp"

#include <fmt/format.h>

#include <array>

namespace congruence {
namespace {

constexpr std::array<PromptTemplate, 6> kTemplates{{
    {TemplateId::P16,
     "You can only reply to me with numbers from 1 to 7. Score each statement on a scale of 1 to 7 "
     "with 1 being disagree, 4 being not sure and 7 being agree.",
     "你只能用1到7的数字回复我。请用1到7分为每个陈述打分，1表示不同意，4表示不确定，7表示同意。"},
    {TemplateId::MBTI_M,
     "Read the following statements carefully and rate each one from 1 to 7, with 7 meaning that it "
     "applies to you completely, 1 meaning that it doesn't apply to you at all, and 4 meaning that "
     "you are not sure whether it applies to you or not.",
     "请仔细阅读以下陈述，并为每一条从1到7打分，7表示它完全适用于你，1表示它完全不适用于你，"
     "4表示你不确定它是否适用于你。"},
    {TemplateId::TDA100,
     "Below are several descriptions that may or may not fit you. Please indicate how much you agree "
     "or disagree with that statement by giving a specific number from 1 to 7. 1 means you totally "
     "disagree with the statement, 4 means you are not sure, and 7 means you totally agree with the "
     "statement.",
     "以下是一些可能符合也可能不符合你的描述。请给出1到7之间的一个具体数字，表示你在多大程度上同意"
     "或不同意该描述。1表示你完全不同意该描述，4表示你不确定，7表示你完全同意该描述。"},
    {TemplateId::BFI44_CHILD,
     "Here are several statements that may or may not describe what you are like. Write the number "
     "between 1 and 7 that shows how much you agree or disagree that it describes you. 1 means you "
     "disagree strongly that the statement applies to you, 4 means you are not sure, and 7 means you "
     "agree strongly with the statement.",
     "以下是一些可能描述也可能不描述你的样子的陈述。请写出1到7之间的数字，表示你在多大程度上同意或"
     "不同意它描述了你。1表示你非常不同意该陈述适用于你，4表示你不确定，7表示你非常同意该陈述。"},
    {TemplateId::NARDI,
     "Please read carefully each of the phrases below. For each phrase: Rate how often you do "
     "skillfully what the phrase describes between 1 and 7. 1 means the phrase is not me, 4 means "
     "that you are not sure, and 7 means that the phrase is exactly me.",
     "请仔细阅读下面的每个短语。对于每个短语：请在1到7之间评价你熟练地做到该短语所描述内容的频率。"
     "1表示该短语完全不是我，4表示你不确定，7表示该短语正是我。"},
    {TemplateId::BEHAVIOR_FC,
     "Read the following scenarios with actions A and B carefully and rate each scenario in the range "
     "from 1 to 7. 1 means that action A applies to you completely in this scenario, 4 means that "
     "action A and action B equally apply (or not) to you in this scenario, and 7 means that action B "
     "applies to you completely in this scenario. You only need to give the number.",
     "请仔细阅读以下包含行为A和行为B的情境，并在1到7的范围内为每个情境打分。1表示在该情境中行为A"
     "完全适用于你，4表示在该情境中行为A和行为B同等适用（或同等不适用）于你，7表示在该情境中行为B"
     "完全适用于你。你只需要给出数字。"},
}};

constexpr std::array<TemplateId, 5> kKnowledgeIds{TemplateId::P16, TemplateId::MBTI_M,
                                                   TemplateId::TDA100, TemplateId::BFI44_CHILD,
                                                   TemplateId::NARDI};

const std::string& require_text(const std::string& text, const PairedItem& item,
                                std::string_view field, Language lang) {
  if (text.empty()) {
    throw PreconditionError(fmt::format("missing-language: item {} has no {} text for {}",
                                        item.id(), field, to_string(lang)));
  }
  return text;
}

}  // namespace

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::P16: return "P16";
    case TemplateId::MBTI_M: return "MBTI_M";
    case TemplateId::TDA100: return "TDA100";
    case TemplateId::BFI44_CHILD: return "BFI44_CHILD";
    case TemplateId::NARDI: return "NARDI";
    case TemplateId::BEHAVIOR_FC: return "BEHAVIOR_FC";
  }
  return "?";
}

std::optional<TemplateId> parse_template_id(std::string_view s) {
  for (const auto& t : kTemplates) {
    if (to_string(t.template_id) == s) return t.template_id;
  }
  return std::nullopt;
}

const PromptTemplate& prompt_template(TemplateId id) {
  return kTemplates[static_cast<std::size_t>(id)];
}

std::span<const TemplateId> knowledge_template_ids() { return kKnowledgeIds; }

std::string render_prompt(const PromptTemplate& tmpl, std::span<const PairedItem> items,
                          Questionnaire questionnaire, Language language) {
  if (items.empty()) throw PreconditionError("render_prompt: no items to administer");
  const bool behavior = questionnaire == Questionnaire::Behavior;
  if (behavior == tmpl.is_knowledge()) {
    throw PreconditionError(fmt::format("template {} cannot administer the {} questionnaire",
                                        to_string(tmpl.template_id), to_string(questionnaire)));
  }
  std::string out(tmpl.text(language));
  out += "\n\n";
  std::size_t n = 0;
  for (const auto& item : items) {
    ++n;
    if (!behavior) {
      out += fmt::format("{}. {}\n", n,
                         require_text(item.statement.text(language), item, "statement", language));
      continue;
    }
    const auto& sc = item.scenario;
    out += fmt::format("{}. {}\n", n, require_text(sc.situation(language), item, "situation", language));
    out += fmt::format("A. {}\n", require_text(sc.action_a(language), item, "action A", language));
    out += fmt::format("B. {}\n", require_text(sc.action_b(language), item, "action B", language));
  }
  return out;
}

}  // namespace congruence
