#pragma once

#include "p2t/dsl.hpp"
#include "p2t/miner.hpp"
#include "p2t/providers.hpp"

#include <optional>
#include <string>
#include <vector>

namespace p2t {

enum class IssueCode {
    missing_hazard,
    empty_scope,
    unverifiable_evidence,
    requirement_exception_conflict,
    schema_invalid,
    other,
};

std::string issue_code_name(IssueCode c);
std::optional<IssueCode> issue_code_from(const std::string& name);

struct Issue {
    IssueCode code = IssueCode::other;
    std::string detail;
};

enum class GateOutcome { passed, failed, skipped };
enum class ProbeOutcome { stable, fragile, skipped };

std::string gate_outcome_name(GateOutcome g);
std::string probe_outcome_name(ProbeOutcome p);

struct FieldEdit {
    std::string field;   // "$.hazard"
    std::string before;  // JSON-encoded value (or "" when absent)
    std::string after;
};

struct TraceRecord {
    std::string span_id;
    int attempts = 0;
    std::vector<Issue> issues;
    std::vector<FieldEdit> repairs;
    GateOutcome gate = GateOutcome::skipped;
    ProbeOutcome probe = ProbeOutcome::skipped;
    std::vector<std::string> accepted_rule_ids;
    double confidence = 0.0;
};

json trace_to_json(const TraceRecord& t);

struct GateConfig {
    bool enabled = true;
    std::vector<std::string> trusted_evidence;  // glob patterns
};

struct ExtractorConfig {
    bool judge = true;
    bool repair = true;
    int repair_rounds = 1;
    int max_edit_fields = 3;
    GateConfig gate;
    bool probe = true;
    bool probe_model_paraphrase = false;
    bool keep_gated = false;
    int max_attempts = 3;  // 1 initial + 2 schema retries
    std::string few_shot_path;
};

/// Checks a rule against the evidence gate: testable rules need at least one
/// evidence signal, and named artifacts must match a trusted pattern when
/// patterns are configured.
std::pair<bool, std::string> evidence_gate(const Rule& rule, const GateConfig& config);

class Extractor {
public:
    Extractor(Provider& provider, const PromptLibrary& prompts, const ScopeVocabulary& vocab,
              ExtractorConfig config, MinerLexicons lexicons = MinerLexicons::defaults());

    /// Full per-clause chain: extract -> judge -> repair -> gate -> probe.
    std::pair<std::vector<Rule>, TraceRecord> process(const Clause& clause, long seed);

    std::vector<Issue> judge_rule(const Rule& rule, const Clause& clause);

    struct RepairResult {
        Rule rule;
        bool accepted = false;
        std::vector<FieldEdit> edits;
        std::string reject_reason;
    };
    RepairResult repair_rule(const Rule& rule, const std::vector<Issue>& issues,
                             const Clause& clause);

    ProbeOutcome counterfactual_probe(const Clause& clause, const Rule& rule, long seed);

    const ExtractorConfig& config() const { return config_; }

private:
    struct Attempted {
        std::vector<Rule> rules;
        int attempts = 0;
        std::vector<Issue> issues;
        bool provider_failed = false;
    };
    Attempted extract_candidates(const Clause& clause, long seed);
    std::string render_extract_prompt(const Clause& clause, const std::string& violations) const;
    std::optional<Rule> extract_one(const std::string& clause_text, const Clause& origin,
                                    long seed);

    Provider& provider_;
    const PromptLibrary& prompts_;
    const ScopeVocabulary& vocab_;
    ExtractorConfig config_;
    MinerLexicons lexicons_;
    std::string few_shot_text_;
    std::string schema_text_;
};

/// Processes clauses under a bounded worker pool (provider parallelism) and
/// re-sorts output by span_id for determinism.
struct ExtractionRun {
    std::vector<Rule> rules;
    std::vector<TraceRecord> traces;
};
ExtractionRun run_extraction(const std::vector<Clause>& clauses, Extractor& extractor,
                             long seed, int parallelism);

}  // namespace p2t
