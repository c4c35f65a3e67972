#pragma once

#include "p2t/dsl.hpp"
#include "p2t/providers.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace p2t {

struct GoldRecord {
    std::string span_id;
    std::string citation;
    bool is_rule_span = false;
    std::vector<Rule> gold_rules;     // non-empty iff is_rule_span
    json annotator_labels;            // optional per-rater labels for agreement
};

GoldRecord gold_from_json(const json& value);

// ---------------------------------------------------------------------------
// Span matching

struct MatchResult {
    std::vector<std::pair<std::string, std::string>> pairs;  // predicted -> gold span_id
    std::vector<std::string> unmatched_pred;                 // false positives
    std::vector<std::string> unmatched_gold;                 // false negatives (rule spans)
    std::map<std::string, std::string> pred_to_gold;
    int gold_rule_spans = 0;
};

/// Last citation segment after splitting on ¶ § > /, lowercased and collapsed.
std::string citation_tail(const std::string& citation);

/// Greedy 1:1 matching: exact span_id first, then citation tail. Gold spans
/// that are not rule spans never match. Throws on duplicate gold span ids.
MatchResult match_spans(const std::vector<Rule>& predicted,
                        const std::vector<GoldRecord>& gold);

double coverage(const MatchResult& match);  // throws when no gold rule spans

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};
Prf span_prf(const MatchResult& match);

/// Average precision over predicted spans ranked by max rule confidence
/// (ties by span_id).
double span_auprc(const std::vector<Rule>& predicted, const std::vector<GoldRecord>& gold);

// ---------------------------------------------------------------------------
// Slot similarity

extern const std::vector<std::string> kSlotFields;  // the 8 scored fields

struct SlotScores {
    std::map<std::string, double> per_field;
    double macro = 0.0;
};
SlotScores slot_similarity(const Rule& pred, const Rule& gold, Provider& provider);

// ---------------------------------------------------------------------------
// Agreement statistics

/// Cohen's kappa over two aligned categorical label vectors. When expected
/// agreement is 1, kappa is 1 if observed agreement is 1, else 0.
double cohen_kappa(const std::vector<std::string>& labels_a,
                   const std::vector<std::string>& labels_b);

enum class AlphaDistance { nominal, jaccard };

/// Krippendorff's alpha via the coincidence-matrix formulation; missing
/// ratings allowed; multi-label sets are compared with 1 - Jaccard.
/// `units[u]` holds the present ratings for one item.
double krippendorff_alpha(const std::vector<std::vector<std::set<std::string>>>& units,
                          AlphaDistance distance);

/// Percentile bootstrap over index resamples; deterministic for a given seed.
std::pair<double, double> bootstrap_ci(
    const std::function<double(const std::vector<size_t>&)>& metric, size_t n,
    int resamples, double level, unsigned long long seed);

// ---------------------------------------------------------------------------
// Reports

struct MetricsReport {
    int gold_spans = 0;
    int pred_spans = 0;
    int matched = 0;
    double coverage = 0.0;
    std::optional<double> test_acc;
    double span_precision = 0.0;
    double span_recall = 0.0;
    double span_f1 = 0.0;
    double span_auprc = 0.0;
    double se_slot_similarity = 0.0;
    double evidence_similarity = 0.0;
    std::map<std::string, double> per_field;
    std::map<std::string, std::pair<double, double>> ci;
};

json metrics_to_json(const MetricsReport& report);

MetricsReport evaluate(const std::vector<Rule>& predicted, const std::vector<GoldRecord>& gold,
                       Provider& provider, int bootstrap_resamples, unsigned long long seed);

struct AgreementReport {
    std::optional<double> span_kappa;
    std::optional<double> testable_kappa;
    std::optional<double> hazard_kappa;
    std::optional<double> scope_actors_alpha;
    std::map<std::string, std::pair<double, double>> ci;
};

json agreement_to_json(const AgreementReport& report);

/// Agreement statistics from gold records carrying annotator_labels
/// ({"span": [...], "testable": [...], "hazard": [...], "scope_actors": [[..],..]}).
AgreementReport compute_agreement(const std::vector<GoldRecord>& gold, int bootstrap_resamples,
                                  unsigned long long seed);

// ---------------------------------------------------------------------------
// Case study

struct Judgment {
    std::string system;  // optional grouping key ("baseline", "guarded")
    std::string bucket;  // clean | obfuscated | compositional
    bool violated = false;
};

struct BucketRates {
    std::map<std::string, double> rate;    // per bucket
    double overall = 0.0;                  // mean across all prompts
    std::map<std::string, double> delta;   // vs clean, for non-clean buckets
};

/// Per-bucket violation rates, overall mean, and deltas vs the clean bucket.
/// Throws when a bucket has no judgments.
BucketRates case_study_rates(const std::vector<Judgment>& judgments);

json bucket_rates_to_json(const BucketRates& rates);

struct CaseProbe {
    std::string prompt;
    std::string bucket;
};

struct JudgeRunResult {
    std::vector<Judgment> judgments;
    int judge_errors = 0;
};

/// LLM pass/fail judging of responses against one rule; unparseable verdicts
/// are counted as judge errors and excluded.
JudgeRunResult judge_responses(const std::vector<CaseProbe>& probes,
                               const std::vector<std::string>& responses, const Rule& rule,
                               Provider& provider, const PromptLibrary& prompts);

}  // namespace p2t
