#include "p2t/dsl.hpp"

#include "helpers.hpp"
#include "invalid_cases.hpp"

#include <doctest.h>

#include <random>

using namespace p2t;
using p2t::testing::invalid_rule_cases;
using p2t::testing::valid_rule_json;

TEST_CASE("a schema-conforming rule validates") {
    CHECK(validate_rule(valid_rule_json()).ok());
}

TEST_CASE("missing testability reports the right path and kind") {
    json c = valid_rule_json();
    c.erase("testability");
    auto result = validate_rule(c);
    REQUIRE(result.violations.size() == 1);
    CHECK(result.violations[0].path == "$.testability");
    CHECK(result.violations[0].kind == ViolationKind::missing_required);
}

TEST_CASE("severity outside low/medium/high is an enum violation") {
    json c = valid_rule_json();
    c["severity"] = "critical";
    auto result = validate_rule(c);
    REQUIRE(result.violations.size() == 1);
    CHECK(result.violations[0].path == "$.severity");
    CHECK(result.violations[0].kind == ViolationKind::enum_violation);
}

TEST_CASE("all 25 invalid fixtures are rejected with the expected path") {
    auto cases = invalid_rule_cases();
    REQUIRE(cases.size() == 25);
    for (const auto& c : cases) {
        CAPTURE(c.name);
        auto result = validate_rule(c.candidate);
        REQUIRE_FALSE(result.ok());
        bool found = false;
        for (const auto& v : result.violations) {
            if (v.path == c.path && v.kind == c.kind) found = true;
        }
        CHECK_MESSAGE(found, c.name, ": expected ", c.path, " ",
                      violation_kind_name(c.kind), " got ", result.summary());
    }
}

TEST_CASE("rule json round-trip preserves and re-validates") {
    Rule r = rule_from_json(valid_rule_json());
    json dumped = rule_to_json(r);
    CHECK(validate_rule(dumped).ok());
    Rule r2 = rule_from_json(dumped);
    CHECK(r == r2);
}

TEST_CASE("additional_spans survive the schema") {
    Rule r = rule_from_json(valid_rule_json());
    r.source.additional_spans.push_back({"Subpart E ¶4", "hipaa:001:003"});
    CHECK(validate_rule(rule_to_json(r)).ok());
}

// ---------------------------------------------------------------------------

TEST_CASE("normalize_scope applies the vocabulary") {
    ScopeVocabulary vocab = ScopeVocabulary::from_json(json{
        {"providers", "provider"}, {"covered entity", "covered_entity"}});
    Rule r = testing::make_rule("r1", "s1", "must log events", {"Providers", "provider"});

    SUBCASE("case-fold, map, dedupe") {
        auto out = normalize_scope(r, vocab);
        CHECK(out.rule.scope.actor == std::vector<std::string>{"provider"});
        CHECK(out.unmapped.empty());
    }
    SUBCASE("HIPAA actor term") {
        r.scope.actor = {"covered entity"};
        auto out = normalize_scope(r, vocab);
        CHECK(out.rule.scope.actor == std::vector<std::string>{"covered_entity"});
    }
    SUBCASE("empty list preserved") {
        r.scope.actor = {};
        auto out = normalize_scope(r, vocab);
        CHECK(out.rule.scope.actor.empty());
    }
    SUBCASE("unmapped entries are kept case-folded and flagged") {
        r.scope.actor = {"Quantum Auditor"};
        auto out = normalize_scope(r, vocab);
        CHECK(out.rule.scope.actor == std::vector<std::string>{"quantum auditor"});
        REQUIRE(out.unmapped.size() == 1);
        CHECK(out.unmapped[0] == "Quantum Auditor");
    }
    SUBCASE("identity vocabulary flags nothing") {
        ScopeVocabulary identity;
        r.scope.actor = {"Anything Goes"};
        auto out = normalize_scope(r, identity);
        CHECK(out.unmapped.empty());
        CHECK(out.rule.scope.actor == std::vector<std::string>{"anything goes"});
    }
}

TEST_CASE("normalize_scope is idempotent, even with chained vocabularies") {
    std::mt19937 rng(7);
    ScopeVocabulary vocab = ScopeVocabulary::from_json(json{
        {"a", "B"}, {"b", "c"}, {"providers", "provider"}, {"x", "x"}});
    std::vector<std::string> pool = {"a", "b", "c", "A", "Providers", "x", "unknown term",
                                     "Covered  Entity", "provider"};
    for (int i = 0; i < 200; ++i) {
        Rule r = testing::make_rule("r", "s", "must log");
        r.scope.actor.clear();
        int n = static_cast<int>(rng() % 5);
        for (int k = 0; k < n; ++k) r.scope.actor.push_back(pool[rng() % pool.size()]);
        r.scope.data_domain.push_back(pool[rng() % pool.size()]);
        Rule once = normalize_scope(r, vocab).rule;
        Rule twice = normalize_scope(once, vocab).rule;
        CHECK(once == twice);
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("canonical signature ignores provenance and confidence") {
    Rule a = rule_from_json(valid_rule_json());
    Rule b = a;
    b.rule_id = "other";
    b.source.span_id = "hipaa:009:001";
    b.confidence = 0.1;
    b.testability.reason = "different";
    CHECK(canonical_signature(a) == canonical_signature(b));
}

TEST_CASE("canonical signature normalizes text") {
    Rule a = testing::make_rule("r1", "s1", "Must   Encrypt PHI At Rest.");
    Rule b = testing::make_rule("r2", "s2", "must encrypt phi at rest");
    CHECK(canonical_signature(a) == canonical_signature(b));
}

TEST_CASE("severity participates in the signature") {
    Rule a = testing::make_rule("r1", "s1", "must encrypt phi");
    Rule b = a;
    a.severity = Severity::low;
    b.severity = Severity::high;
    CHECK(canonical_signature(a) != canonical_signature(b));
}

TEST_CASE("signature is invariant under list permutations (10k fixtures)") {
    std::mt19937 rng(20240809);
    const std::vector<std::string> words = {"encrypt", "log",    "notify", "phi",
                                            "records", "access", "limit",  "disclose"};
    auto random_list = [&](int max_len) {
        std::vector<std::string> out;
        int n = static_cast<int>(rng() % (max_len + 1));
        for (int i = 0; i < n; ++i) out.push_back(words[rng() % words.size()]);
        return out;
    };
    for (int i = 0; i < 10000; ++i) {
        Rule r = testing::make_rule("r", "s", "must encrypt phi");
        r.scope.actor = random_list(3);
        r.scope.data_domain = random_list(3);
        r.scope.context = random_list(2);
        r.conditions = random_list(3);
        r.exceptions = random_list(2);
        Rule shuffled = r;
        std::shuffle(shuffled.scope.actor.begin(), shuffled.scope.actor.end(), rng);
        std::shuffle(shuffled.conditions.begin(), shuffled.conditions.end(), rng);
        std::shuffle(shuffled.exceptions.begin(), shuffled.exceptions.end(), rng);
        std::shuffle(shuffled.scope.data_domain.begin(), shuffled.scope.data_domain.end(), rng);
        REQUIRE(canonical_signature(r) == canonical_signature(shuffled));
    }
}

TEST_CASE("scope vocabulary files load case-insensitively") {
    ScopeVocabulary vocab =
        ScopeVocabulary::load(p2t::testing::source_dir() / "data" / "scope_vocab.json");
    CHECK(vocab.canon("Covered Entities").first == "covered_entity");
    CHECK(vocab.canon("AI Provider").first == "provider");
}
