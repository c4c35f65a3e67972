#pragma once

#include "p2t/jsonio.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace p2t {

using jsonio::json;

enum class Severity { low, medium, high };

std::string severity_name(Severity s);
std::optional<Severity> severity_from(const std::string& name);

/// The closed evidence-channel set of the DSL.
const std::vector<std::string>& evidence_signal_names();
bool is_evidence_signal(const std::string& name);

struct SpanRef {
    std::string citation;
    std::string span_id;
    bool operator==(const SpanRef&) const = default;
};

struct SourceRef {
    std::string doc;
    std::string citation;
    std::string span_id;
    std::vector<SpanRef> additional_spans;  // filled by dedup span aggregation
    bool operator==(const SourceRef&) const = default;
};

struct Scope {
    std::vector<std::string> actor;
    std::vector<std::string> data_domain;
    std::vector<std::string> context;
    bool operator==(const Scope&) const = default;
};

struct Testability {
    std::vector<std::string> evidence_signals;
    std::string reason;
    bool operator==(const Testability&) const = default;
};

struct Rule {
    std::string rule_id;
    SourceRef source;
    Scope scope;
    std::string hazard;
    std::vector<std::string> conditions;
    std::vector<std::string> exceptions;
    std::string requirement;
    std::vector<std::string> evidence;
    std::optional<Severity> severity;
    bool is_testable = false;
    Testability testability;
    std::optional<double> confidence;
    bool operator==(const Rule&) const = default;
};

json rule_to_json(const Rule& rule);
Rule rule_from_json(const json& value);  // throws InputError on schema violations

/// The extended rule schema as a JSON-Schema document (embedded in extraction
/// prompts and exported for downstream consumers).
json dsl_schema_json();

// ---------------------------------------------------------------------------
// Schema validation

enum class ViolationKind { missing_required, unknown_field, wrong_type, enum_violation };

std::string violation_kind_name(ViolationKind k);

struct Violation {
    std::string path;  // JSON path, e.g. "$.testability" or "$.scope.actor[1]"
    ViolationKind kind;
    std::string detail;
};

struct ValidationResult {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

/// Validates a parsed JSON value against the rule schema (strict: unknown
/// fields rejected at every level). Malformed input yields violations, never
/// throws.
ValidationResult validate_rule(const json& candidate);

// ---------------------------------------------------------------------------
// Scope vocabulary

class ScopeVocabulary {
public:
    ScopeVocabulary() = default;  // identity vocabulary

    /// Keys are case-insensitive; values are normalized and mapping chains are
    /// resolved to their fixed point at load so normalization is idempotent.
    static ScopeVocabulary from_json(const json& object);
    static ScopeVocabulary load(const std::filesystem::path& path);

    /// Canonical form of one entry plus whether the vocabulary knew it
    /// (either as a variant key or as a canonical value).
    std::pair<std::string, bool> canon(const std::string& entry) const;

    bool empty() const { return map_.empty(); }

private:
    std::map<std::string, std::string> map_;
    std::set<std::string> canonical_;
};

struct NormalizeOutcome {
    Rule rule;
    std::vector<std::string> unmapped;  // entries the vocabulary did not know
};

/// Canonicalizes every scope entry, sorts lexicographically, removes
/// duplicates. Unknown entries are kept (case-folded) and reported.
NormalizeOutcome normalize_scope(const Rule& rule, const ScopeVocabulary& vocab);

/// Stable 256-bit hex digest over the rule's semantic fields (scope, hazard,
/// conditions, exceptions, requirement, severity) after text normalization.
/// Provenance, rule_id, confidence and testability are excluded.
std::string canonical_signature(const Rule& rule);

}  // namespace p2t
