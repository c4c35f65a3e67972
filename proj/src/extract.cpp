#include "p2t/extract.hpp"

#include "p2t/errors.hpp"
#include "p2t/text.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <set>
#include <thread>

namespace p2t {

std::string issue_code_name(IssueCode c) {
    switch (c) {
        case IssueCode::missing_hazard: return "missing_hazard";
        case IssueCode::empty_scope: return "empty_scope";
        case IssueCode::unverifiable_evidence: return "unverifiable_evidence";
        case IssueCode::requirement_exception_conflict: return "requirement_exception_conflict";
        case IssueCode::schema_invalid: return "schema_invalid";
        case IssueCode::other: return "other";
    }
    return "other";
}

std::optional<IssueCode> issue_code_from(const std::string& name) {
    if (name == "missing_hazard") return IssueCode::missing_hazard;
    if (name == "empty_scope") return IssueCode::empty_scope;
    if (name == "unverifiable_evidence") return IssueCode::unverifiable_evidence;
    if (name == "requirement_exception_conflict") {
        return IssueCode::requirement_exception_conflict;
    }
    if (name == "schema_invalid") return IssueCode::schema_invalid;
    if (name == "other") return IssueCode::other;
    return std::nullopt;
}

std::string gate_outcome_name(GateOutcome g) {
    switch (g) {
        case GateOutcome::passed: return "passed";
        case GateOutcome::failed: return "failed";
        case GateOutcome::skipped: return "skipped";
    }
    return "skipped";
}

std::string probe_outcome_name(ProbeOutcome p) {
    switch (p) {
        case ProbeOutcome::stable: return "stable";
        case ProbeOutcome::fragile: return "fragile";
        case ProbeOutcome::skipped: return "skipped";
    }
    return "skipped";
}

json trace_to_json(const TraceRecord& t) {
    json issues = json::array();
    for (const auto& i : t.issues) {
        issues.push_back({{"code", issue_code_name(i.code)}, {"detail", i.detail}});
    }
    json repairs = json::array();
    for (const auto& r : t.repairs) {
        repairs.push_back({{"field", r.field}, {"before", r.before}, {"after", r.after}});
    }
    return json{{"span_id", t.span_id},
                {"attempts", t.attempts},
                {"issues", issues},
                {"repairs", repairs},
                {"gate", gate_outcome_name(t.gate)},
                {"probe", probe_outcome_name(t.probe)},
                {"accepted_rule_ids", t.accepted_rule_ids},
                {"confidence", t.confidence}};
}

std::pair<bool, std::string> evidence_gate(const Rule& rule, const GateConfig& config) {
    if (!config.enabled) return {true, "gate disabled"};
    if (rule.is_testable && rule.testability.evidence_signals.empty()) {
        return {false, "no evidence signal"};
    }
    if (!config.trusted_evidence.empty()) {
        for (const auto& artifact : rule.evidence) {
            bool trusted = false;
            for (const auto& pattern : config.trusted_evidence) {
                if (text::glob_match(pattern, artifact)) {
                    trusted = true;
                    break;
                }
            }
            if (!trusted) return {false, "untrusted evidence: " + artifact};
        }
    }
    return {true, "ok"};
}

namespace {

/// Tolerant parse of model output: strips markdown fences, then falls back to
/// the outermost bracketed JSON value.
json parse_lenient(const std::string& raw, bool want_array) {
    std::string s = text::trim(raw);
    if (s.rfind("```", 0) == 0) {
        size_t nl = s.find('\n');
        if (nl != std::string::npos) s = s.substr(nl + 1);
        size_t fence = s.rfind("```");
        if (fence != std::string::npos) s = s.substr(0, fence);
        s = text::trim(s);
    }
    json v = json::parse(s, nullptr, false);
    if (!v.is_discarded()) return v;
    char open = want_array ? '[' : '{';
    char close = want_array ? ']' : '}';
    size_t b = s.find(open);
    size_t e = s.rfind(close);
    if (b != std::string::npos && e != std::string::npos && e > b) {
        v = json::parse(s.substr(b, e - b + 1), nullptr, false);
    }
    return v;
}

std::string default_few_shot() {
    return R"(Clause: "Providers shall document the testing procedures applied before release."
Rules: [{"rule_id":"x","source":{"doc":"x","citation":"x","span_id":"x"},"scope":{"actor":["provider"]},"hazard":"unverified system behavior","requirement":"Providers shall document the testing procedures applied before release.","severity":"medium","is_testable":true,"testability":{"evidence_signals":["attest_check"],"reason":"documentation can be inspected"},"confidence":0.9}]
)";
}

std::string render_few_shot(const json& examples) {
    std::string out;
    for (const auto& ex : examples) {
        out += "Clause: " + json(ex.value("clause", "")).dump() + "\n";
        out += "Rules: " + ex.value("rules", json::array()).dump() + "\n";
    }
    return out;
}

}  // namespace

Extractor::Extractor(Provider& provider, const PromptLibrary& prompts,
                     const ScopeVocabulary& vocab, ExtractorConfig config,
                     MinerLexicons lexicons)
    : provider_(provider),
      prompts_(prompts),
      vocab_(vocab),
      config_(std::move(config)),
      lexicons_(std::move(lexicons)) {
    if (config_.few_shot_path.empty()) {
        few_shot_text_ = default_few_shot();
    } else {
        json examples = jsonio::load_json(config_.few_shot_path);
        if (!examples.is_array()) {
            throw InputError("few-shot file must be a JSON array: " + config_.few_shot_path);
        }
        few_shot_text_ = render_few_shot(examples);
    }
    schema_text_ = dsl_schema_json().dump(2);
}

std::string Extractor::render_extract_prompt(const Clause& clause,
                                             const std::string& violations) const {
    return prompts_.render(TaskTag::extract,
                           {{"schema", schema_text_},
                            {"few_shot", few_shot_text_},
                            {"doc", clause.span.doc_id},
                            {"citation", clause.span.citation},
                            {"clause_text", clause.span.text},
                            {"context", clause.span.section_path},
                            {"violations", violations}});
}

Extractor::Attempted Extractor::extract_candidates(const Clause& clause, long seed) {
    Attempted out;
    std::string violations_note;
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
        ++out.attempts;
        TextRequest req;
        req.task_tag = TaskTag::extract;
        req.prompt = render_extract_prompt(clause, violations_note);
        req.temperature = provider_.config().temperature;
        req.seed = seed;
        req.payload = json{{"clause_text", clause.span.text},
                           {"doc", clause.span.doc_id},
                           {"citation", clause.span.citation},
                           {"span_id", clause.span.span_id},
                           {"context", clause.span.section_path},
                           {"clause_type", clause_type_name(clause.clause_type)},
                           {"attempt", attempt}};
        TextResponse resp;
        try {
            resp = provider_.generate(req);
        } catch (const ProviderError& e) {
            out.provider_failed = true;
            out.issues.push_back({IssueCode::other, std::string("provider failure: ") + e.what()});
            return out;
        }

        json parsed = parse_lenient(resp.text, /*want_array=*/true);
        std::vector<std::string> attempt_violations;
        std::vector<Rule> rules;
        if (!parsed.is_array()) {
            attempt_violations.push_back("$ response is not a JSON array of rules");
        } else {
            bool from_stub = resp.provider_id.rfind("stub", 0) == 0 ||
                             resp.provider_id.rfind("fallback", 0) == 0;
            for (size_t i = 0; i < parsed.size(); ++i) {
                json cand = parsed[i];
                if (!cand.is_object()) {
                    attempt_violations.push_back("$[" + std::to_string(i) +
                                                 "] wrong-type (expected rule object)");
                    continue;
                }
                // Provenance and identity are pipeline-owned, never model-owned.
                cand["rule_id"] =
                    clause.span.span_id + ":r" + text::zero_pad(static_cast<int>(i), 2);
                cand["source"] = json{{"doc", clause.span.doc_id},
                                      {"citation", clause.span.citation},
                                      {"span_id", clause.span.span_id}};
                ValidationResult check = validate_rule(cand);
                if (!check.ok()) {
                    for (const auto& v : check.violations) {
                        attempt_violations.push_back("$[" + std::to_string(i) + "] " + v.path +
                                                     " " + violation_kind_name(v.kind) + " (" +
                                                     v.detail + ")");
                    }
                    continue;
                }
                Rule rule = rule_from_json(cand);
                if (!rule.confidence) rule.confidence = from_stub ? 1.0 : 0.5;
                rules.push_back(std::move(rule));
            }
        }

        if (attempt_violations.empty()) {
            out.rules = std::move(rules);
            return out;
        }
        std::string joined;
        for (const auto& v : attempt_violations) joined += "- " + v + "\n";
        out.issues.push_back({IssueCode::schema_invalid, joined});
        violations_note =
            "\nYour previous output failed schema validation. Fix these violations:\n" + joined;
        if (attempt + 1 == config_.max_attempts) {
            out.rules = std::move(rules);  // keep whatever validated on the final attempt
        }
    }
    return out;
}

std::vector<Issue> Extractor::judge_rule(const Rule& rule, const Clause& clause) {
    std::vector<Issue> issues;
    // Deterministic pre-checks; no model call involved.
    if (text::trim(rule.hazard).empty()) {
        issues.push_back({IssueCode::missing_hazard, "hazard is empty"});
    }
    if (rule.scope.actor.empty() && rule.scope.data_domain.empty() &&
        rule.scope.context.empty()) {
        issues.push_back({IssueCode::empty_scope, "all scope lists are empty"});
    }
    if (rule.is_testable && rule.testability.evidence_signals.empty()) {
        issues.push_back(
            {IssueCode::unverifiable_evidence, "is_testable without evidence signals"});
    }

    json rule_json = rule_to_json(rule);
    TextRequest req;
    req.task_tag = TaskTag::judge;
    req.prompt = prompts_.render(TaskTag::judge, {{"rule_json", rule_json.dump(2)},
                                                  {"clause_text", clause.span.text}});
    req.temperature = 0.0;
    req.payload = json{{"rule", rule_json}, {"clause_text", clause.span.text}};
    try {
        TextResponse resp = provider_.generate(req);
        json parsed = parse_lenient(resp.text, /*want_array=*/true);
        if (!parsed.is_array()) {
            std::cerr << "p2t: judge output unparseable for " << rule.rule_id
                      << "; treating as no issues\n";
            return issues;
        }
        auto have = [&](IssueCode code, const std::string& detail) {
            for (const auto& i : issues) {
                if (i.code == code && i.detail == detail) return true;
            }
            return false;
        };
        for (const auto& item : parsed) {
            std::string code_name =
                item.is_string() ? item.get<std::string>() : item.value("code", "");
            auto code = issue_code_from(code_name);
            if (!code || *code == IssueCode::schema_invalid) continue;
            std::string detail =
                item.is_object() ? item.value("detail", code_name) : code_name;
            if (detail.empty()) detail = code_name;
            if (!have(*code, detail)) issues.push_back({*code, detail});
        }
    } catch (const ProviderError& e) {
        std::cerr << "p2t: judge call failed for " << rule.rule_id << ": " << e.what() << "\n";
    }
    return issues;
}

Extractor::RepairResult Extractor::repair_rule(const Rule& rule,
                                               const std::vector<Issue>& issues,
                                               const Clause& clause) {
    RepairResult result;
    result.rule = rule;
    if (issues.empty()) {
        result.reject_reason = "no issues to repair";
        return result;
    }
    json orig = rule_to_json(rule);
    json issues_json = json::array();
    for (const auto& i : issues) {
        issues_json.push_back({{"code", issue_code_name(i.code)}, {"detail", i.detail}});
    }
    TextRequest req;
    req.task_tag = TaskTag::repair;
    req.prompt = prompts_.render(TaskTag::repair,
                                 {{"rule_json", orig.dump(2)},
                                  {"issues_json", issues_json.dump(2)},
                                  {"clause_text", clause.span.text},
                                  {"max_edits", std::to_string(config_.max_edit_fields)}});
    req.temperature = 0.0;
    req.payload =
        json{{"rule", orig}, {"issues", issues_json}, {"clause_text", clause.span.text}};

    json repaired;
    try {
        TextResponse resp = provider_.generate(req);
        repaired = parse_lenient(resp.text, /*want_array=*/false);
    } catch (const ProviderError& e) {
        result.reject_reason = std::string("repair call failed: ") + e.what();
        return result;
    }
    if (!repaired.is_object()) {
        result.reject_reason = "repair output is not a JSON object";
        return result;
    }
    ValidationResult check = validate_rule(repaired);
    if (!check.ok()) {
        result.reject_reason = "repair is schema-invalid: " + check.summary();
        return result;
    }
    if (repaired.at("source").dump() != orig.at("source").dump()) {
        result.reject_reason = "repair modified provenance";
        return result;
    }
    std::set<std::string> keys;
    for (const auto& [k, _] : orig.items()) keys.insert(k);
    for (const auto& [k, _] : repaired.items()) keys.insert(k);
    std::vector<FieldEdit> edits;
    for (const auto& key : keys) {
        std::string before = orig.contains(key) ? orig.at(key).dump() : "";
        std::string after = repaired.contains(key) ? repaired.at(key).dump() : "";
        if (before != after) edits.push_back({rule.rule_id + ":$." + key, before, after});
    }
    if (static_cast<int>(edits.size()) > config_.max_edit_fields) {
        result.reject_reason = "edit budget exceeded (" + std::to_string(edits.size()) +
                               " fields changed, budget " +
                               std::to_string(config_.max_edit_fields) + ")";
        return result;
    }
    result.rule = rule_from_json(repaired);
    if (!result.rule.confidence) result.rule.confidence = rule.confidence;
    result.accepted = true;
    result.edits = std::move(edits);
    return result;
}

std::optional<Rule> Extractor::extract_one(const std::string& clause_text, const Clause& origin,
                                           long seed) {
    Clause probe_clause = origin;
    probe_clause.span.text = clause_text;
    TextRequest req;
    req.task_tag = TaskTag::extract;
    req.prompt = render_extract_prompt(probe_clause, "");
    req.temperature = provider_.config().temperature;
    req.seed = seed;
    req.payload = json{{"clause_text", clause_text},
                       {"doc", origin.span.doc_id},
                       {"citation", origin.span.citation},
                       {"span_id", origin.span.span_id},
                       {"context", origin.span.section_path},
                       {"clause_type", clause_type_name(origin.clause_type)},
                       {"probe", true}};
    TextResponse resp;
    try {
        resp = provider_.generate(req);
    } catch (const ProviderError&) {
        return std::nullopt;
    }
    json parsed = parse_lenient(resp.text, /*want_array=*/true);
    if (!parsed.is_array()) return std::nullopt;
    for (size_t i = 0; i < parsed.size(); ++i) {
        json cand = parsed[i];
        if (!cand.is_object()) continue;
        cand["rule_id"] = origin.span.span_id + ":probe";
        cand["source"] = json{{"doc", origin.span.doc_id},
                              {"citation", origin.span.citation},
                              {"span_id", origin.span.span_id}};
        if (validate_rule(cand).ok()) return rule_from_json(cand);
    }
    return std::nullopt;
}

ProbeOutcome Extractor::counterfactual_probe(const Clause& clause, const Rule& rule,
                                             long seed) {
    auto polarity = deontic_polarity(clause.span.text, lexicons_);
    if (!polarity) return ProbeOutcome::skipped;
    auto flipped = flip_polarity(clause.span.text, lexicons_);
    if (!flipped) return ProbeOutcome::skipped;

    std::vector<std::string> paraphrases{*flipped};
    if (config_.probe_model_paraphrase) {
        TextRequest req;
        req.task_tag = TaskTag::paraphrase;
        req.prompt =
            prompts_.render(TaskTag::paraphrase, {{"clause_text", clause.span.text}});
        req.seed = seed;
        req.payload = json{{"clause_text", clause.span.text}};
        try {
            TextResponse resp = provider_.generate(req);
            std::string para = text::trim(resp.text);
            if (!para.empty()) paraphrases.push_back(para);
        } catch (const ProviderError&) {
            // deterministic flip still carries the probe
        }
    }

    for (const auto& paraphrase : paraphrases) {
        auto reextracted = extract_one(paraphrase, clause, seed);
        if (!reextracted) return ProbeOutcome::fragile;
        auto flipped_polarity = deontic_polarity(reextracted->requirement, lexicons_);
        if (!flipped_polarity || *flipped_polarity == *polarity) {
            return ProbeOutcome::fragile;
        }
    }
    return ProbeOutcome::stable;
    (void)rule;
}

std::pair<std::vector<Rule>, TraceRecord> Extractor::process(const Clause& clause, long seed) {
    TraceRecord trace;
    trace.span_id = clause.span.span_id;

    Attempted att = extract_candidates(clause, seed);
    trace.attempts = att.attempts;
    trace.issues = att.issues;
    if (att.provider_failed) {
        return {{}, trace};
    }

    std::vector<Rule> rules;
    for (auto& rule : att.rules) {
        NormalizeOutcome norm = normalize_scope(rule, vocab_);
        for (const auto& term : norm.unmapped) {
            trace.issues.push_back(
                {IssueCode::other, rule.rule_id + ": unmapped scope term: " + term});
        }
        rules.push_back(std::move(norm.rule));
    }

    if (config_.judge) {
        for (auto& rule : rules) {
            std::vector<Issue> issues = judge_rule(rule, clause);
            if (issues.empty()) continue;
            for (const auto& i : issues) {
                trace.issues.push_back({i.code, rule.rule_id + ": " + i.detail});
            }
            if (!config_.repair) continue;
            for (int round = 0; round < config_.repair_rounds; ++round) {
                RepairResult rr = repair_rule(rule, issues, clause);
                if (!rr.accepted) {
                    trace.issues.push_back({IssueCode::other, rule.rule_id +
                                                                  ": repair rejected: " +
                                                                  rr.reject_reason});
                    break;
                }
                if (rr.edits.empty()) {
                    trace.issues.push_back(
                        {IssueCode::other, rule.rule_id + ": repair made no changes"});
                    break;
                }
                for (const auto& e : rr.edits) trace.repairs.push_back(e);
                NormalizeOutcome norm = normalize_scope(rr.rule, vocab_);
                for (const auto& term : norm.unmapped) {
                    trace.issues.push_back(
                        {IssueCode::other, rule.rule_id + ": unmapped scope term: " + term});
                }
                rule = std::move(norm.rule);
                break;  // single judge+repair pass by default
            }
        }
    }

    // Provenance must be pipeline-owned end to end.
    for (const auto& rule : rules) {
        if (rule.source.doc != clause.span.doc_id ||
            rule.source.citation != clause.span.citation ||
            rule.source.span_id != clause.span.span_id) {
            throw std::logic_error("provenance invariant broken for " + rule.rule_id);
        }
    }

    if (!config_.gate.enabled || rules.empty()) {
        trace.gate = GateOutcome::skipped;
    } else {
        bool any_failed = false;
        std::vector<Rule> kept;
        for (auto& rule : rules) {
            auto [ok, reason] = evidence_gate(rule, config_.gate);
            if (!ok) {
                any_failed = true;
                trace.issues.push_back(
                    {IssueCode::other, rule.rule_id + ": gate failed: " + reason});
                if (!config_.keep_gated) continue;
            }
            kept.push_back(std::move(rule));
        }
        rules = std::move(kept);
        trace.gate = any_failed ? GateOutcome::failed : GateOutcome::passed;
    }

    if (config_.probe && !rules.empty()) {
        trace.probe = counterfactual_probe(clause, rules.front(), seed);
    }

    for (const auto& rule : rules) {
        trace.accepted_rule_ids.push_back(rule.rule_id);
        trace.confidence = std::max(trace.confidence, rule.confidence.value_or(0.0));
    }
    return {rules, trace};
}

ExtractionRun run_extraction(const std::vector<Clause>& clauses, Extractor& extractor,
                             long seed, int parallelism) {
    std::vector<std::pair<std::vector<Rule>, TraceRecord>> results(clauses.size());
    std::atomic<size_t> next{0};
    int workers = std::max(1, std::min<int>(parallelism, static_cast<int>(clauses.size())));
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < clauses.size(); i = next.fetch_add(1)) {
                if (failed.load()) return;
                try {
                    results[i] = extractor.process(clauses[i], seed);
                } catch (const std::exception& e) {
                    std::lock_guard lock(failure_mutex);
                    failed = true;
                    failure = e.what();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed) throw std::runtime_error("extraction failed: " + failure);

    ExtractionRun run;
    for (auto& [rules, trace] : results) {
        for (auto& r : rules) run.rules.push_back(std::move(r));
        run.traces.push_back(std::move(trace));
    }
    std::sort(run.rules.begin(), run.rules.end(),
              [](const Rule& a, const Rule& b) { return a.rule_id < b.rule_id; });
    std::sort(run.traces.begin(), run.traces.end(),
              [](const TraceRecord& a, const TraceRecord& b) { return a.span_id < b.span_id; });
    return run;
}

}  // namespace p2t
