#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "congruence/corpus.hpp"
#include "congruence/types.hpp"

namespace congruence {

// Instruction variants. The first five are knowledge-questionnaire prompts
// adapted from the source scales' own instructions; BEHAVIOR_FC is the 7-point
// graded forced-choice prompt for scenarios.
enum class TemplateId { P16, MBTI_M, TDA100, BFI44_CHILD, NARDI, BEHAVIOR_FC };

std::string_view to_string(TemplateId id);
std::optional<TemplateId> parse_template_id(std::string_view s);

struct PromptTemplate {
  TemplateId template_id;
  std::string_view text_en;
  std::string_view text_zh;

  std::string_view text(Language lang) const { return lang == Language::EN ? text_en : text_zh; }
  bool is_knowledge() const { return template_id != TemplateId::BEHAVIOR_FC; }
};

const PromptTemplate& prompt_template(TemplateId id);

// P16, MBTI_M, TDA100, BFI44_CHILD, NARDI.
std::span<const TemplateId> knowledge_template_ids();

// Template text, a blank line, then numbered items. Knowledge mode emits the
// statement only; behavior mode emits the situation followed by "A. " and
// "B. " action lines. Throws PreconditionError for an empty item list or an
// item without text in the requested language.
std::string render_prompt(const PromptTemplate& tmpl, std::span<const PairedItem> items,
                          Questionnaire questionnaire, Language language);

}  // namespace congruence
