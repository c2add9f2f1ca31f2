#include "congruence/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

namespace congruence {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(std::string_view s, const std::array<Enum, N>& values) {
  for (Enum v : values) {
    if (iequals(s, to_string(v))) return v;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Scale s) {
  switch (s) {
    case Scale::TDA100: return "TDA100";
    case Scale::BFI44: return "BFI44";
    case Scale::SIXTEEN_P: return "SIXTEEN_P";
  }
  return "?";
}

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::Neuroticism: return "Neuroticism";
    case Dimension::Extraversion: return "Extraversion";
    case Dimension::Openness: return "Openness";
    case Dimension::Agreeableness: return "Agreeableness";
    case Dimension::Conscientiousness: return "Conscientiousness";
  }
  return "?";
}

std::string_view to_string(Direction d) {
  return d == Direction::Forward ? "Forward" : "Reverse";
}

std::string_view to_string(Action a) { return a == Action::A ? "A" : "B"; }

std::string_view to_string(Questionnaire q) {
  return q == Questionnaire::Knowledge ? "knowledge" : "behavior";
}

std::string_view to_string(Language l) { return l == Language::EN ? "en" : "zh"; }

std::optional<Scale> parse_scale(std::string_view s) {
  return lookup(s, std::array{Scale::TDA100, Scale::BFI44, Scale::SIXTEEN_P});
}

std::optional<Dimension> parse_dimension(std::string_view s) {
  return lookup(s, std::array{Dimension::Neuroticism, Dimension::Extraversion, Dimension::Openness,
                              Dimension::Agreeableness, Dimension::Conscientiousness});
}

std::optional<Direction> parse_direction(std::string_view s) {
  return lookup(s, std::array{Direction::Forward, Direction::Reverse});
}

std::optional<Action> parse_action(std::string_view s) {
  return lookup(s, std::array{Action::A, Action::B});
}

std::optional<Questionnaire> parse_questionnaire(std::string_view s) {
  return lookup(s, std::array{Questionnaire::Knowledge, Questionnaire::Behavior});
}

std::optional<Language> parse_language(std::string_view s) {
  return lookup(s, std::array{Language::EN, Language::ZH});
}

ParseError::ParseError(const std::string& what, std::size_t line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

InvariantError::InvariantError(std::string item_id, std::string rule, const std::string& detail)
    : Error("[" + rule + "] " + (item_id.empty() ? std::string() : item_id + ": ") + detail),
      item_id_(std::move(item_id)),
      rule_(std::move(rule)) {}

}  // namespace congruence
