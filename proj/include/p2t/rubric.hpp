#pragma once

#include "p2t/jsonio.hpp"

#include <string>
#include <vector>

namespace p2t {

/// Verifiable-verb rubric for testability tagging: maps verb classes found in
/// a requirement to the evidence channel that could verify them. Ships as
/// editable JSON; these defaults are a reconstruction.
struct TestabilityRubric {
    std::vector<std::pair<std::string, std::string>> verb_signals;

    static TestabilityRubric defaults();
    static TestabilityRubric from_json(const jsonio::json& value);
    static TestabilityRubric load(const std::filesystem::path& path);

    /// Sorted, unique evidence signals suggested by verbs in `text`
    /// (inflection-tolerant token match).
    std::vector<std::string> signals_for(const std::string& text) const;
    bool has_verifiable_verb(const std::string& text) const;
};

}  // namespace p2t
