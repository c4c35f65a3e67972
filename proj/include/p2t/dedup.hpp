#pragma once

#include "p2t/dsl.hpp"
#include "p2t/providers.hpp"

#include <string>
#include <vector>

namespace p2t {

struct Merge {
    std::string kept_rule_id;
    std::vector<std::string> absorbed_rule_ids;
    std::string method;  // "structural" | "semantic"
    double similarity = 1.0;
};

struct DedupReport {
    int kept = 0;
    int removed = 0;
    double dup_idx = 0.0;
    std::vector<Merge> merges;
};

json dedup_report_to_json(const DedupReport& report);

/// removed / (kept + removed); 0 when both are zero.
double dup_index(long kept, long removed);

/// Groups by canonical signature; the lexicographically smallest rule_id
/// survives, span provenance is aggregated into source.additional_spans, and
/// the survivor's confidence is the group maximum.
std::pair<std::vector<Rule>, std::vector<Merge>> structural_dedup(const std::vector<Rule>& rules);

/// Blocks by (doc, sorted actors); embeds hazard+requirement+conditions+
/// exceptions; greedily merges pairs with cosine >= threshold via union-find.
std::pair<std::vector<Rule>, std::vector<Merge>> semantic_dedup(const std::vector<Rule>& rules,
                                                                double threshold,
                                                                Provider& provider);

/// Structural then semantic pass; fills the DupIdx report.
DedupReport dedup_rules(std::vector<Rule>& rules, double threshold, Provider& provider,
                        bool semantic = true);

}  // namespace p2t
