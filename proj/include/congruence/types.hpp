#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace congruence {

enum class Scale { TDA100, BFI44, SIXTEEN_P };

enum class Dimension { Neuroticism, Extraversion, Openness, Agreeableness, Conscientiousness };

enum class Direction { Forward, Reverse };

// Which scenario action embodies the statement.
enum class Action { A, B };

enum class Questionnaire { Knowledge, Behavior };

enum class Language { EN, ZH };

std::string_view to_string(Scale s);
std::string_view to_string(Dimension d);
std::string_view to_string(Direction d);
std::string_view to_string(Action a);
std::string_view to_string(Questionnaire q);
std::string_view to_string(Language l);

// Parsers accept the names produced by to_string (case-insensitive) and
// return nullopt for anything else.
std::optional<Scale> parse_scale(std::string_view s);
std::optional<Dimension> parse_dimension(std::string_view s);
std::optional<Direction> parse_direction(std::string_view s);
std::optional<Action> parse_action(std::string_view s);
std::optional<Questionnaire> parse_questionnaire(std::string_view s);
std::optional<Language> parse_language(std::string_view s);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based line (or record) number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A domain invariant does not hold (corpus pairing, layout, profile coverage).
class InvariantError : public Error {
 public:
  InvariantError(std::string item_id, std::string rule, const std::string& detail);
  const std::string& item_id() const noexcept { return item_id_; }
  const std::string& rule() const noexcept { return rule_; }

 private:
  std::string item_id_;
  std::string rule_;
};

// Caller violated an operation precondition (empty input, out-of-range score).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A statistic is undefined for the given data (constant vector, zero norm).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace congruence
