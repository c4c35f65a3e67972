#pragma once

#include "p2t/dsl.hpp"
#include "p2t/miner.hpp"

#include <optional>
#include <string>
#include <vector>

namespace p2t {

struct PredicateKey {
    std::vector<std::string> tokens;  // sorted content tokens of the requirement
    DeonticPolarity polarity = DeonticPolarity::require;
};

struct Conflict {
    std::string rule_a;  // rule_a < rule_b
    std::string rule_b;
    Scope shared_scope;
    std::vector<std::string> predicate;
    std::string kind = "direct_contradiction";
};

json conflict_to_json(const Conflict& c);

enum class ConditionMode { ignore, strict };
std::optional<ConditionMode> condition_mode_from(const std::string& name);

/// Actors must intersect; an empty data_domain or context list means
/// unrestricted on that axis.
bool scopes_overlap(const Scope& a, const Scope& b);

/// Content tokens of the requirement (deontic phrases, stopwords, and
/// negation particles removed) plus its deontic polarity. nullopt when the
/// requirement reduces to an empty token set (rule excluded from checking).
std::optional<PredicateKey> requirement_predicate(
    const Rule& rule, const MinerLexicons& lexicons = MinerLexicons::defaults());

/// Pairs with overlapping scope, identical predicate tokens, and opposite
/// polarity; in strict mode pairs whose conditions+exceptions guards differ
/// are suppressed. Output sorted by (rule_a, rule_b).
std::vector<Conflict> find_conflicts(const std::vector<Rule>& rules, ConditionMode mode,
                                     const MinerLexicons& lexicons = MinerLexicons::defaults());

/// Exports conflicting pairs as SMT-LIB2 problems (one per conflict) for an
/// external solver: each rule's guards become Bool variables and the pair's
/// shared predicate is asserted both required and forbidden when active.
std::string conflicts_to_smtlib(const std::vector<Rule>& rules,
                                const std::vector<Conflict>& conflicts);

}  // namespace p2t
