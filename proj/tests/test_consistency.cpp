#include "p2t/consistency.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace p2t;
using p2t::testing::make_rule;

TEST_CASE("requirement_predicate strips deontics and stopwords") {
    auto a = requirement_predicate(make_rule("r1", "s1", "must encrypt PHI at rest"));
    REQUIRE(a.has_value());
    CHECK(a->polarity == DeonticPolarity::require);
    CHECK(a->tokens == std::vector<std::string>{"encrypt", "phi", "rest"});

    auto b = requirement_predicate(make_rule("r2", "s2", "must not encrypt PHI at rest"));
    REQUIRE(b.has_value());
    CHECK(b->polarity == DeonticPolarity::forbid);
    CHECK(b->tokens == a->tokens);

    auto c = requirement_predicate(make_rule("r3", "s3",
                                             "shall disclose payment for marketing"));
    REQUIRE(c.has_value());
    CHECK(c->polarity == DeonticPolarity::require);
    CHECK(c->tokens == std::vector<std::string>{"disclose", "marketing", "payment"});
}

TEST_CASE("a requirement that reduces to nothing is excluded") {
    CHECK_FALSE(requirement_predicate(make_rule("r", "s", "shall not")).has_value());
}

TEST_CASE("scopes_overlap semantics") {
    Scope a, b;
    a.actor = {"provider"};
    b.actor = {"provider", "deployer"};
    CHECK(scopes_overlap(a, b));

    b.actor = {"deployer"};
    CHECK_FALSE(scopes_overlap(a, b));

    b.actor = {"provider"};
    a.data_domain = {};
    b.data_domain = {"health"};
    CHECK(scopes_overlap(a, b));  // empty axis = unrestricted

    a.data_domain = {"finance"};
    CHECK_FALSE(scopes_overlap(a, b));

    a.data_domain = {};
    a.context = {"marketing"};
    b.context = {"marketing", "research"};
    CHECK(scopes_overlap(a, b));
}

namespace {

Rule scoped_rule(const std::string& id, const std::string& requirement,
                 const std::vector<std::string>& actors,
                 const std::vector<std::string>& conditions = {}) {
    Rule r = make_rule(id, "span_" + id, requirement, actors);
    r.conditions = conditions;
    return r;
}

}  // namespace

TEST_CASE("a planted require/forbid pair is found exactly once") {
    std::vector<Rule> rules = {
        scoped_rule("r1", "must encrypt PHI at rest", {"covered_entity"}),
        scoped_rule("r2", "must not encrypt PHI at rest", {"covered_entity"}),
        scoped_rule("r3", "must log access events", {"covered_entity"}),
    };
    auto conflicts = find_conflicts(rules, ConditionMode::ignore);
    REQUIRE(conflicts.size() == 1);
    CHECK(conflicts[0].rule_a == "r1");
    CHECK(conflicts[0].rule_b == "r2");
    CHECK(conflicts[0].kind == "direct_contradiction");
    CHECK(conflicts[0].shared_scope.actor == std::vector<std::string>{"covered_entity"});
    CHECK(conflicts[0].predicate == std::vector<std::string>{"encrypt", "phi", "rest"});
}

TEST_CASE("disjoint actors gate the conflict") {
    std::vector<Rule> rules = {
        scoped_rule("r1", "must encrypt PHI at rest", {"provider"}),
        scoped_rule("r2", "must not encrypt PHI at rest", {"deployer"}),
    };
    CHECK(find_conflicts(rules, ConditionMode::ignore).empty());
}

TEST_CASE("strict mode suppresses pairs whose guards differ") {
    std::vector<Rule> rules = {
        scoped_rule("r1", "must disclose PHI records", {"covered_entity"},
                    {"when emergency treatment requires it"}),
        scoped_rule("r2", "must not disclose PHI records", {"covered_entity"}),
    };
    // Exhaustive truth table over the two guard booleans (g1 = rule1's
    // condition applies, g2 = rule2 unconditional): with differing guards
    // there is an assignment (g1 false) under which only one rule is active,
    // so the pair is jointly satisfiable and strict mode stays quiet.
    bool satisfiable = false;
    for (int g1 = 0; g1 <= 1; ++g1) {
        bool rule1_active = g1 == 1;
        bool rule2_active = true;
        if (!(rule1_active && rule2_active)) satisfiable = true;
    }
    CHECK(satisfiable);
    CHECK(find_conflicts(rules, ConditionMode::strict).empty());
    CHECK(find_conflicts(rules, ConditionMode::ignore).size() == 1);

    // identical guards conflict even in strict mode
    std::vector<Rule> same_guards = {
        scoped_rule("r1", "must disclose PHI records", {"covered_entity"}, {"when asked"}),
        scoped_rule("r2", "must not disclose PHI records", {"covered_entity"}, {"when asked"}),
    };
    CHECK(find_conflicts(same_guards, ConditionMode::strict).size() == 1);
}

TEST_CASE("all-require rule sets never conflict") {
    std::mt19937 rng(17);
    const std::vector<std::string> verbs = {"encrypt", "log", "retain", "notify", "restrict"};
    const std::vector<std::string> objects = {"phi", "records", "access", "events"};
    std::vector<Rule> rules;
    for (int i = 0; i < 50; ++i) {
        rules.push_back(scoped_rule("r" + std::to_string(i),
                                    "must " + verbs[rng() % verbs.size()] + " " +
                                        objects[rng() % objects.size()],
                                    {"organization"}));
    }
    CHECK(find_conflicts(rules, ConditionMode::ignore).empty());
}

TEST_CASE("conflict output is independent of input order") {
    std::vector<Rule> rules = {
        scoped_rule("r1", "must encrypt PHI", {"org"}),
        scoped_rule("r2", "must not encrypt PHI", {"org"}),
        scoped_rule("r3", "must log access", {"org"}),
        scoped_rule("r4", "must not log access", {"org"}),
    };
    auto a = find_conflicts(rules, ConditionMode::ignore);
    std::reverse(rules.begin(), rules.end());
    auto b = find_conflicts(rules, ConditionMode::ignore);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].rule_a == b[i].rule_a);
        CHECK(a[i].rule_b == b[i].rule_b);
    }
}

TEST_CASE("the planted 50-rule fixture yields exactly the expected conflicts") {
    std::vector<Rule> rules;
    for (const auto& row : jsonio::load_jsonl(p2t::testing::fixture("consistency/planted_50.jsonl"))) {
        rules.push_back(rule_from_json(row));
    }
    REQUIRE(rules.size() == 50);
    auto conflicts = find_conflicts(rules, ConditionMode::ignore);
    REQUIRE(conflicts.size() == 2);  // third planted pair is scope-blocked
    CHECK(conflicts[0].rule_a == "plant:a1");
    CHECK(conflicts[0].rule_b == "plant:a2");
    CHECK(conflicts[1].rule_a == "plant:b1");
    CHECK(conflicts[1].rule_b == "plant:b2");
}
