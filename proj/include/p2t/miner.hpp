#pragma once

#include "p2t/ingest.hpp"

#include <optional>
#include <string>
#include <vector>

namespace p2t {

enum class ClauseType { obligation, prohibition, exception, exemption, definition, other };

std::string clause_type_name(ClauseType t);
ClauseType clause_type_from(const std::string& name);

struct Clause {
    Span span;
    ClauseType clause_type = ClauseType::other;
    std::vector<std::string> markers;
    std::vector<std::string> deadlines;
    std::vector<std::string> thresholds;
    std::vector<std::string> cross_refs;
    double score = 0.0;
};

json clause_to_json(const Clause& c);
Clause clause_from_json(const json& value);

struct MinerWeights {
    double deontic = 3.0;
    double actor = 1.0;
    double quant_temporal = 1.0;
    double cross_ref = 1.0;
    double exception_cue = 1.0;
    double definition_cue = -3.0;
    double boilerplate_cue = -3.0;
};

struct MinerLexicons {
    std::vector<std::string> deontic_positive;
    std::vector<std::string> deontic_negative;
    std::vector<std::string> exception_cues;
    std::vector<std::string> exemption_cues;
    std::vector<std::string> definition_cues;
    std::vector<std::string> boilerplate_cues;
    std::vector<std::string> actors;
    static MinerLexicons defaults();
};

struct MinerConfig {
    MinerWeights weights;
    MinerLexicons lexicons = MinerLexicons::defaults();
    double threshold = 3.0;
    bool bypass = false;
    static MinerConfig from_json(const json& value);
    static MinerConfig load(const std::filesystem::path& path);
};

struct Indicators {
    std::vector<std::string> deadlines;
    std::vector<std::string> thresholds;
    std::vector<std::string> cross_refs;
};

struct SpanFeatures {
    double score = 0.0;
    std::vector<std::string> markers;  // matched deontic/cue phrases
    bool has_deontic = false;
    Indicators indicators;
};

/// Additive feature scoring; each feature category counts once per span.
SpanFeatures score_span(const Span& span, const MinerConfig& config);

/// Precedence rubric: negated deontic > exception cue with deontic >
/// exemption cue > positive deontic > definition cue > other.
ClauseType classify_clause(const std::string& span_text,
                           const MinerLexicons& lexicons = MinerLexicons::defaults());
inline ClauseType classify_clause(const Span& span,
                                  const MinerLexicons& lexicons = MinerLexicons::defaults()) {
    return classify_clause(span.text, lexicons);
}

Indicators extract_indicators(const std::string& span_text);
inline Indicators extract_indicators(const Span& span) { return extract_indicators(span.text); }

/// Deontic polarity of a text per the rubric: forbid iff a negated deontic
/// marker is present, require iff a positive one is; nullopt without markers.
enum class DeonticPolarity { require, forbid };
std::optional<DeonticPolarity> deontic_polarity(
    const std::string& text, const MinerLexicons& lexicons = MinerLexicons::defaults());

/// Deterministic polarity flip ("shall" -> "shall not", "may not" -> "may");
/// swaps the first (longest) matching marker, nullopt when none present.
std::optional<std::string> flip_polarity(
    const std::string& text, const MinerLexicons& lexicons = MinerLexicons::defaults());

/// Filters spans to candidate clauses: keeps score >= threshold, drops exact
/// duplicate texts, attaches type and indicators, sorts by span_id. Bypass
/// passes every span through as clause_type `other`.
std::vector<Clause> mine(const std::vector<Span>& spans, const MinerConfig& config);

}  // namespace p2t
