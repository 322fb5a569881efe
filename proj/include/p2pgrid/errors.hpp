#pragma once

#include <stdexcept>
#include <string>

namespace p2pgrid {

// Bad arguments to a pure operation (negative prices, duplicate ids, ...).
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A configuration object is incomplete or violates its invariants.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A transacting prosumer has no bus placement.
class PlacementError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Text input could not be parsed. Carries the source, line (0 if unknown) and field.
class ParseError : public std::runtime_error {
public:
  ParseError(std::string source, std::size_t line, std::string field, const std::string& what)
      : std::runtime_error(format(source, line, field, what)),
        source_(std::move(source)),
        line_(line),
        field_(std::move(field)) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

private:
  static std::string format(const std::string& source, std::size_t line, const std::string& field,
                            const std::string& what) {
    std::string msg = source;
    if (line > 0) msg += ":" + std::to_string(line);
    if (!field.empty()) msg += " [" + field + "]";
    return msg + ": " + what;
  }

  std::string source_;
  std::size_t line_;
  std::string field_;
};

// A scenario references an identifier (bus, prosumer) that does not exist.
class CrossReferenceError : public std::runtime_error {
public:
  CrossReferenceError(std::string identifier, const std::string& what)
      : std::runtime_error(what), identifier_(std::move(identifier)) {}

  const std::string& identifier() const noexcept { return identifier_; }

private:
  std::string identifier_;
};

}  // namespace p2pgrid
