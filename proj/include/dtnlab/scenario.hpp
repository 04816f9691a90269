#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "dtnlab/harness.hpp"

namespace dtnlab {

// Malformed scenario text: bad JSON, unknown keys, wrong types. The message
// carries the byte offset for JSON syntax errors.
class ScenarioParseError : public std::runtime_error {
 public:
  explicit ScenarioParseError(const std::string& what)
      : std::runtime_error(what) {}
};

// Strict parser: every key must be known, every value well-typed. Missing
// keys keep their ScenarioConfig defaults. A seed override replaces the
// scenario seed before seeded recipes are derived.
ScenarioConfig parse_scenario(const std::string& json_text,
                              std::optional<uint64_t> seed_override = {});

// Reads the file and parses it; missing file is a parse error.
ScenarioConfig load_scenario(const std::string& path,
                             std::optional<uint64_t> seed_override = {});

}  // namespace dtnlab
