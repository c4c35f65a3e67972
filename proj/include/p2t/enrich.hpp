#pragma once

#include "p2t/dsl.hpp"
#include "p2t/providers.hpp"
#include "p2t/rubric.hpp"

#include <optional>
#include <string>
#include <vector>

namespace p2t {

struct ExampleSet {
    std::string rule_id;
    std::vector<std::string> benign;
    std::vector<std::string> adversarial;
    long generator_seed = 0;
};

json example_set_to_json(const ExampleSet& set);

struct TagOutcome {
    Rule rule;
    bool tagged = false;                       // false: output unparseable, rule untouched
    std::vector<std::string> dropped_signals;  // outside the closed set
    std::string note;
};

/// Fills is_testable/testability from the model under the fixed rubric; the
/// verifiable-verb override downgrades is_testable when no rubric verb is
/// present. No other field is touched.
TagOutcome tag_testability(const Rule& rule, Provider& provider, const PromptLibrary& prompts,
                           const TestabilityRubric& rubric = TestabilityRubric::defaults());

/// Benign + adversarial prompt sets for testable io_check rules; retries once
/// on arity/empty-prompt violations, then gives up (nullopt, note filled).
std::optional<ExampleSet> generate_examples(const Rule& rule, Provider& provider,
                                            const PromptLibrary& prompts, int n_per_side,
                                            long seed, std::string* note = nullptr);

/// True when the rule qualifies for example generation.
bool wants_examples(const Rule& rule);

}  // namespace p2t
