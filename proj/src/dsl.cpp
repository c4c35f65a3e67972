#include "p2t/dsl.hpp"

#include "p2t/errors.hpp"
#include "p2t/text.hpp"

#include <algorithm>
#include <set>

namespace p2t {

std::string severity_name(Severity s) {
    switch (s) {
        case Severity::low: return "low";
        case Severity::medium: return "medium";
        case Severity::high: return "high";
    }
    return "medium";
}

std::optional<Severity> severity_from(const std::string& name) {
    if (name == "low") return Severity::low;
    if (name == "medium") return Severity::medium;
    if (name == "high") return Severity::high;
    return std::nullopt;
}

const std::vector<std::string>& evidence_signal_names() {
    static const std::vector<std::string> kSignals = {
        "io_check", "log_check", "config_check", "ci_gate",
        "data_check", "repo_check", "access_check", "attest_check",
    };
    return kSignals;
}

bool is_evidence_signal(const std::string& name) {
    const auto& sig = evidence_signal_names();
    return std::find(sig.begin(), sig.end(), name) != sig.end();
}

json rule_to_json(const Rule& rule) {
    json src{{"doc", rule.source.doc},
             {"citation", rule.source.citation},
             {"span_id", rule.source.span_id}};
    if (!rule.source.additional_spans.empty()) {
        json extra = json::array();
        for (const auto& s : rule.source.additional_spans) {
            extra.push_back({{"citation", s.citation}, {"span_id", s.span_id}});
        }
        src["additional_spans"] = std::move(extra);
    }
    json scope{{"actor", rule.scope.actor}};
    if (!rule.scope.data_domain.empty()) scope["data_domain"] = rule.scope.data_domain;
    if (!rule.scope.context.empty()) scope["context"] = rule.scope.context;

    json testability{{"evidence_signals", rule.testability.evidence_signals}};
    if (!rule.testability.reason.empty()) testability["reason"] = rule.testability.reason;

    json out{{"rule_id", rule.rule_id},
             {"source", std::move(src)},
             {"scope", std::move(scope)},
             {"hazard", rule.hazard},
             {"requirement", rule.requirement},
             {"is_testable", rule.is_testable},
             {"testability", std::move(testability)}};
    if (!rule.conditions.empty()) out["conditions"] = rule.conditions;
    if (!rule.exceptions.empty()) out["exceptions"] = rule.exceptions;
    if (!rule.evidence.empty()) out["evidence"] = rule.evidence;
    if (rule.severity) out["severity"] = severity_name(*rule.severity);
    if (rule.confidence) out["confidence"] = *rule.confidence;
    return out;
}

Rule rule_from_json(const json& value) {
    ValidationResult check = validate_rule(value);
    if (!check.ok()) throw InputError("invalid rule: " + check.summary());
    Rule r;
    r.rule_id = value.at("rule_id").get<std::string>();
    const auto& src = value.at("source");
    r.source.doc = src.at("doc").get<std::string>();
    r.source.citation = src.at("citation").get<std::string>();
    r.source.span_id = src.at("span_id").get<std::string>();
    if (src.contains("additional_spans")) {
        for (const auto& s : src.at("additional_spans")) {
            r.source.additional_spans.push_back(
                {s.at("citation").get<std::string>(), s.at("span_id").get<std::string>()});
        }
    }
    const auto& scope = value.at("scope");
    r.scope.actor = scope.at("actor").get<std::vector<std::string>>();
    if (scope.contains("data_domain")) {
        r.scope.data_domain = scope.at("data_domain").get<std::vector<std::string>>();
    }
    if (scope.contains("context")) {
        r.scope.context = scope.at("context").get<std::vector<std::string>>();
    }
    if (value.contains("hazard")) r.hazard = value.at("hazard").get<std::string>();
    if (value.contains("conditions")) {
        r.conditions = value.at("conditions").get<std::vector<std::string>>();
    }
    if (value.contains("exceptions")) {
        r.exceptions = value.at("exceptions").get<std::vector<std::string>>();
    }
    r.requirement = value.at("requirement").get<std::string>();
    if (value.contains("evidence")) {
        r.evidence = value.at("evidence").get<std::vector<std::string>>();
    }
    if (value.contains("severity")) {
        r.severity = severity_from(value.at("severity").get<std::string>());
    }
    r.is_testable = value.at("is_testable").get<bool>();
    const auto& t = value.at("testability");
    r.testability.evidence_signals = t.at("evidence_signals").get<std::vector<std::string>>();
    if (t.contains("reason")) r.testability.reason = t.at("reason").get<std::string>();
    if (value.contains("confidence")) r.confidence = value.at("confidence").get<double>();
    return r;
}

json dsl_schema_json() {
    json string_array{{"type", "array"}, {"items", {{"type", "string"}}}};
    return json{
        {"$schema", "https://json-schema.org/draft/2020-12/schema"},
        {"title", "Policy rule DSL"},
        {"type", "object"},
        {"additionalProperties", false},
        {"required",
         {"rule_id", "source", "scope", "requirement", "is_testable", "testability"}},
        {"properties",
         {{"rule_id", {{"type", "string"}}},
          {"source",
           {{"type", "object"},
            {"additionalProperties", false},
            {"required", {"doc", "citation", "span_id"}},
            {"properties",
             {{"doc", {{"type", "string"}}},
              {"citation", {{"type", "string"}}},
              {"span_id", {{"type", "string"}}},
              {"additional_spans",
               {{"type", "array"},
                {"items",
                 {{"type", "object"},
                  {"additionalProperties", false},
                  {"required", {"citation", "span_id"}},
                  {"properties",
                   {{"citation", {{"type", "string"}}},
                    {"span_id", {{"type", "string"}}}}}}}}}}}}},
          {"scope",
           {{"type", "object"},
            {"additionalProperties", false},
            {"required", {"actor"}},
            {"properties",
             {{"actor", string_array},
              {"data_domain", string_array},
              {"context", string_array}}}}},
          {"hazard", {{"type", "string"}}},
          {"conditions", string_array},
          {"exceptions", string_array},
          {"requirement", {{"type", "string"}}},
          {"evidence", string_array},
          {"severity", {{"type", "string"}, {"enum", {"low", "medium", "high"}}}},
          {"is_testable", {{"type", "boolean"}}},
          {"testability",
           {{"type", "object"},
            {"additionalProperties", false},
            {"required", {"evidence_signals"}},
            {"properties",
             {{"evidence_signals",
               {{"type", "array"},
                {"items", {{"type", "string"}, {"enum", evidence_signal_names()}}}}},
              {"reason", {{"type", "string"}}}}}}},
          {"confidence", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}}}},
    };
}

// ---------------------------------------------------------------------------

std::string violation_kind_name(ViolationKind k) {
    switch (k) {
        case ViolationKind::missing_required: return "missing-required";
        case ViolationKind::unknown_field: return "unknown-field";
        case ViolationKind::wrong_type: return "wrong-type";
        case ViolationKind::enum_violation: return "enum-violation";
    }
    return "unknown";
}

std::string ValidationResult::summary() const {
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        out += v.path + " " + violation_kind_name(v.kind) + " (" + v.detail + ")";
    }
    return out;
}

namespace {

struct Checker {
    std::vector<Violation>& out;

    void add(const std::string& path, ViolationKind kind, const std::string& detail) {
        out.push_back({path, kind, detail});
    }

    // Returns true when the field exists and has the right type.
    bool require_string(const json& obj, const std::string& path, const std::string& key,
                        bool non_empty) {
        if (!obj.contains(key)) {
            add(path + "." + key, ViolationKind::missing_required, "required field is missing");
            return false;
        }
        if (!obj.at(key).is_string()) {
            add(path + "." + key, ViolationKind::wrong_type, "expected string");
            return false;
        }
        if (non_empty && obj.at(key).get<std::string>().empty()) {
            add(path + "." + key, ViolationKind::missing_required,
                "required field must be non-empty");
            return false;
        }
        return true;
    }

    void optional_string(const json& obj, const std::string& path, const std::string& key) {
        if (obj.contains(key) && !obj.at(key).is_string()) {
            add(path + "." + key, ViolationKind::wrong_type, "expected string");
        }
    }

    void string_array(const json& obj, const std::string& path, const std::string& key) {
        const auto& v = obj.at(key);
        if (!v.is_array()) {
            add(path + "." + key, ViolationKind::wrong_type, "expected array of strings");
            return;
        }
        for (size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_string()) {
                add(path + "." + key + "[" + std::to_string(i) + "]", ViolationKind::wrong_type,
                    "expected string");
            }
        }
    }

    void unknown_fields(const json& obj, const std::string& path,
                        const std::set<std::string>& allowed) {
        for (const auto& [key, _] : obj.items()) {
            if (!allowed.count(key)) {
                add(path + "." + key, ViolationKind::unknown_field,
                    "field is not part of the schema");
            }
        }
    }
};

}  // namespace

ValidationResult validate_rule(const json& candidate) {
    ValidationResult result;
    Checker c{result.violations};

    if (!candidate.is_object()) {
        c.add("$", ViolationKind::wrong_type, "rule must be a JSON object");
        return result;
    }

    c.unknown_fields(candidate, "$",
                     {"rule_id", "source", "scope", "hazard", "conditions", "exceptions",
                      "requirement", "evidence", "severity", "is_testable", "testability",
                      "confidence"});

    c.require_string(candidate, "$", "rule_id", /*non_empty=*/true);

    // source
    if (!candidate.contains("source")) {
        c.add("$.source", ViolationKind::missing_required, "required field is missing");
    } else if (!candidate.at("source").is_object()) {
        c.add("$.source", ViolationKind::wrong_type, "expected object");
    } else {
        const auto& src = candidate.at("source");
        c.unknown_fields(src, "$.source", {"doc", "citation", "span_id", "additional_spans"});
        c.require_string(src, "$.source", "doc", true);
        c.require_string(src, "$.source", "citation", true);
        c.require_string(src, "$.source", "span_id", true);
        if (src.contains("additional_spans")) {
            const auto& extra = src.at("additional_spans");
            if (!extra.is_array()) {
                c.add("$.source.additional_spans", ViolationKind::wrong_type, "expected array");
            } else {
                for (size_t i = 0; i < extra.size(); ++i) {
                    std::string p = "$.source.additional_spans[" + std::to_string(i) + "]";
                    if (!extra[i].is_object()) {
                        c.add(p, ViolationKind::wrong_type, "expected object");
                        continue;
                    }
                    c.unknown_fields(extra[i], p, {"citation", "span_id"});
                    c.require_string(extra[i], p, "citation", true);
                    c.require_string(extra[i], p, "span_id", true);
                }
            }
        }
    }

    // scope
    if (!candidate.contains("scope")) {
        c.add("$.scope", ViolationKind::missing_required, "required field is missing");
    } else if (!candidate.at("scope").is_object()) {
        c.add("$.scope", ViolationKind::wrong_type, "expected object");
    } else {
        const auto& scope = candidate.at("scope");
        c.unknown_fields(scope, "$.scope", {"actor", "data_domain", "context"});
        if (!scope.contains("actor")) {
            c.add("$.scope.actor", ViolationKind::missing_required, "required field is missing");
        } else {
            c.string_array(scope, "$.scope", "actor");
        }
        if (scope.contains("data_domain")) c.string_array(scope, "$.scope", "data_domain");
        if (scope.contains("context")) c.string_array(scope, "$.scope", "context");
    }

    c.optional_string(candidate, "$", "hazard");
    if (candidate.contains("conditions")) c.string_array(candidate, "$", "conditions");
    if (candidate.contains("exceptions")) c.string_array(candidate, "$", "exceptions");
    if (candidate.contains("evidence")) c.string_array(candidate, "$", "evidence");

    c.require_string(candidate, "$", "requirement", /*non_empty=*/true);

    if (candidate.contains("severity")) {
        if (!candidate.at("severity").is_string()) {
            c.add("$.severity", ViolationKind::wrong_type, "expected string");
        } else if (!severity_from(candidate.at("severity").get<std::string>())) {
            c.add("$.severity", ViolationKind::enum_violation, "allowed: low, medium, high");
        }
    }

    if (!candidate.contains("is_testable")) {
        c.add("$.is_testable", ViolationKind::missing_required, "required field is missing");
    } else if (!candidate.at("is_testable").is_boolean()) {
        c.add("$.is_testable", ViolationKind::wrong_type, "expected boolean");
    }

    if (!candidate.contains("testability")) {
        c.add("$.testability", ViolationKind::missing_required, "required field is missing");
    } else if (!candidate.at("testability").is_object()) {
        c.add("$.testability", ViolationKind::wrong_type, "expected object");
    } else {
        const auto& t = candidate.at("testability");
        c.unknown_fields(t, "$.testability", {"evidence_signals", "reason"});
        if (!t.contains("evidence_signals")) {
            c.add("$.testability.evidence_signals", ViolationKind::missing_required,
                  "required field is missing");
        } else if (!t.at("evidence_signals").is_array()) {
            c.add("$.testability.evidence_signals", ViolationKind::wrong_type, "expected array");
        } else {
            const auto& sig = t.at("evidence_signals");
            for (size_t i = 0; i < sig.size(); ++i) {
                std::string p = "$.testability.evidence_signals[" + std::to_string(i) + "]";
                if (!sig[i].is_string()) {
                    c.add(p, ViolationKind::wrong_type, "expected string");
                } else if (!is_evidence_signal(sig[i].get<std::string>())) {
                    c.add(p, ViolationKind::enum_violation,
                          "unknown evidence signal: " + sig[i].get<std::string>());
                }
            }
        }
        c.optional_string(t, "$.testability", "reason");
    }

    if (candidate.contains("confidence")) {
        if (!candidate.at("confidence").is_number()) {
            c.add("$.confidence", ViolationKind::wrong_type, "expected number");
        } else {
            double v = candidate.at("confidence").get<double>();
            if (v < 0.0 || v > 1.0) {
                c.add("$.confidence", ViolationKind::enum_violation, "must be within [0,1]");
            }
        }
    }

    return result;
}

// ---------------------------------------------------------------------------

ScopeVocabulary ScopeVocabulary::from_json(const json& object) {
    if (!object.is_object()) throw InputError("scope vocabulary must be a JSON object");
    ScopeVocabulary vocab;
    for (const auto& [key, value] : object.items()) {
        if (!value.is_string()) throw InputError("scope vocabulary values must be strings");
        std::string k = text::collapse_ws(text::lowercase(key));
        std::string v = text::collapse_ws(text::lowercase(value.get<std::string>()));
        if (!k.empty() && !v.empty()) vocab.map_[k] = v;
    }
    // Resolve chains (a->b, b->c) so every value is a fixed point.
    for (auto& [key, value] : vocab.map_) {
        std::set<std::string> seen{key};
        while (vocab.map_.count(value) && !seen.count(value)) {
            seen.insert(value);
            value = vocab.map_.at(value);
        }
    }
    for (const auto& [_, value] : vocab.map_) vocab.canonical_.insert(value);
    return vocab;
}

ScopeVocabulary ScopeVocabulary::load(const std::filesystem::path& path) {
    return from_json(jsonio::load_json(path));
}

std::pair<std::string, bool> ScopeVocabulary::canon(const std::string& entry) const {
    std::string key = text::collapse_ws(text::lowercase(entry));
    auto it = map_.find(key);
    if (it != map_.end()) return {it->second, true};
    return {key, canonical_.count(key) > 0};
}

namespace {

std::vector<std::string> normalize_list(const std::vector<std::string>& entries,
                                        const ScopeVocabulary& vocab,
                                        std::vector<std::string>& unmapped) {
    std::set<std::string> out;
    for (const auto& entry : entries) {
        auto [canon, known] = vocab.canon(entry);
        if (canon.empty()) continue;
        if (!known && !vocab.empty()) unmapped.push_back(entry);
        out.insert(canon);
    }
    return {out.begin(), out.end()};
}

}  // namespace

NormalizeOutcome normalize_scope(const Rule& rule, const ScopeVocabulary& vocab) {
    NormalizeOutcome result;
    result.rule = rule;
    result.rule.scope.actor = normalize_list(rule.scope.actor, vocab, result.unmapped);
    result.rule.scope.data_domain = normalize_list(rule.scope.data_domain, vocab, result.unmapped);
    result.rule.scope.context = normalize_list(rule.scope.context, vocab, result.unmapped);
    return result;
}

std::string canonical_signature(const Rule& rule) {
    auto norm_sorted = [](const std::vector<std::string>& list) {
        std::vector<std::string> out;
        out.reserve(list.size());
        for (const auto& item : list) out.push_back(text::norm(item));
        std::sort(out.begin(), out.end());
        return out;
    };
    json tuple = json::array({
        norm_sorted(rule.scope.actor),
        norm_sorted(rule.scope.data_domain),
        norm_sorted(rule.scope.context),
        text::norm(rule.hazard),
        norm_sorted(rule.conditions),
        norm_sorted(rule.exceptions),
        text::norm(rule.requirement),
        rule.severity ? severity_name(*rule.severity) : "",
    });
    return text::sha256_hex(tuple.dump());
}

}  // namespace p2t
