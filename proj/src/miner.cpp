#include "p2t/miner.hpp"

#include "p2t/errors.hpp"
#include "p2t/text.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

namespace p2t {

std::string clause_type_name(ClauseType t) {
    switch (t) {
        case ClauseType::obligation: return "obligation";
        case ClauseType::prohibition: return "prohibition";
        case ClauseType::exception: return "exception";
        case ClauseType::exemption: return "exemption";
        case ClauseType::definition: return "definition";
        case ClauseType::other: return "other";
    }
    return "other";
}

ClauseType clause_type_from(const std::string& name) {
    if (name == "obligation") return ClauseType::obligation;
    if (name == "prohibition") return ClauseType::prohibition;
    if (name == "exception") return ClauseType::exception;
    if (name == "exemption") return ClauseType::exemption;
    if (name == "definition") return ClauseType::definition;
    return ClauseType::other;
}

json clause_to_json(const Clause& c) {
    return json{{"span", span_to_json(c.span)},
                {"clause_type", clause_type_name(c.clause_type)},
                {"markers", c.markers},
                {"deadlines", c.deadlines},
                {"thresholds", c.thresholds},
                {"cross_refs", c.cross_refs},
                {"score", c.score}};
}

Clause clause_from_json(const json& value) {
    if (!value.is_object()) throw InputError("clause must be a JSON object");
    Clause c;
    try {
        c.span = span_from_json(value.at("span"));
        c.clause_type = clause_type_from(value.at("clause_type").get<std::string>());
        c.markers = value.at("markers").get<std::vector<std::string>>();
        c.deadlines = value.at("deadlines").get<std::vector<std::string>>();
        c.thresholds = value.at("thresholds").get<std::vector<std::string>>();
        c.cross_refs = value.at("cross_refs").get<std::vector<std::string>>();
        c.score = value.at("score").get<double>();
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed clause: ") + e.what());
    }
    return c;
}

MinerLexicons MinerLexicons::defaults() {
    MinerLexicons lex;
    lex.deontic_positive = {"shall", "must", "may", "is required to", "are required to",
                            "should", "is obligated to", "are obligated to"};
    // Closed under flip_polarity: every marker has a counterpart of the
    // opposite polarity.
    lex.deontic_negative = {"shall not",          "must not",
                            "may not",            "should not",
                            "shall never",        "must never",
                            "is prohibited",      "are prohibited",
                            "prohibited",         "is not permitted",
                            "are not permitted",  "is not required to",
                            "are not required to", "is not obligated to",
                            "are not obligated to"};
    lex.exception_cues = {"unless", "except", "provided that", "save where"};
    lex.exemption_cues = {"is exempt", "are exempt", "exempted from", "does not apply",
                          "do not apply"};
    lex.definition_cues = {"means", "refers to", "for the purposes of", "is defined as"};
    lex.boilerplate_cues = {"table of contents", "all rights reserved",
                            "intentionally left blank", "copyright", "this page"};
    lex.actors = {"provider",       "providers",       "deployer",        "deployers",
                  "covered entity", "covered entities", "business associate",
                  "business associates", "organization", "organizations", "controller",
                  "controllers",    "processor",       "processors",      "operator",
                  "operators",      "manufacturer",    "manufacturers",   "importer",
                  "importers",      "distributor",     "distributors",    "health plan",
                  "health plans",   "employer",        "employers",       "vendor",
                  "vendors",        "contractor",      "contractors",     "agency",
                  "staff",          "personnel",       "assistant",       "developer",
                  "developers"};
    return lex;
}

namespace {

std::vector<std::string> read_list(const json& obj, const char* key,
                                   std::vector<std::string> fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<std::vector<std::string>>();
}

}  // namespace

MinerConfig MinerConfig::from_json(const json& value) {
    if (!value.is_object()) throw InputError("miner config must be a JSON object");
    MinerConfig cfg;
    if (value.contains("threshold")) cfg.threshold = value.at("threshold").get<double>();
    if (value.contains("bypass")) cfg.bypass = value.at("bypass").get<bool>();
    if (value.contains("weights")) {
        const auto& w = value.at("weights");
        auto get = [&](const char* key, double fallback) {
            return w.contains(key) ? w.at(key).get<double>() : fallback;
        };
        cfg.weights.deontic = get("deontic", cfg.weights.deontic);
        cfg.weights.actor = get("actor", cfg.weights.actor);
        cfg.weights.quant_temporal = get("quant_temporal", cfg.weights.quant_temporal);
        cfg.weights.cross_ref = get("cross_ref", cfg.weights.cross_ref);
        cfg.weights.exception_cue = get("exception_cue", cfg.weights.exception_cue);
        cfg.weights.definition_cue = get("definition_cue", cfg.weights.definition_cue);
        cfg.weights.boilerplate_cue = get("boilerplate_cue", cfg.weights.boilerplate_cue);
    }
    if (value.contains("lexicons")) {
        const auto& lx = value.at("lexicons");
        MinerLexicons d = MinerLexicons::defaults();
        cfg.lexicons.deontic_positive = read_list(lx, "deontic_positive", d.deontic_positive);
        cfg.lexicons.deontic_negative = read_list(lx, "deontic_negative", d.deontic_negative);
        cfg.lexicons.exception_cues = read_list(lx, "exception_cues", d.exception_cues);
        cfg.lexicons.exemption_cues = read_list(lx, "exemption_cues", d.exemption_cues);
        cfg.lexicons.definition_cues = read_list(lx, "definition_cues", d.definition_cues);
        cfg.lexicons.boilerplate_cues = read_list(lx, "boilerplate_cues", d.boilerplate_cues);
        cfg.lexicons.actors = read_list(lx, "actors", d.actors);
    }
    return cfg;
}

MinerConfig MinerConfig::load(const std::filesystem::path& path) {
    return from_json(jsonio::load_json(path));
}

namespace {

/// Phrases matched against `s`, longest first; matched spans are masked so
/// "shall" does not re-match inside an already-matched "shall not".
std::vector<std::string> match_phrases(std::string& masked, const std::vector<std::string>& phrases) {
    std::vector<std::string> sorted = phrases;
    std::sort(sorted.begin(), sorted.end(),
              [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
    std::vector<std::string> hits;
    for (const auto& phrase : sorted) {
        if (!text::contains_phrase(masked, phrase)) continue;
        hits.push_back(phrase);
        // Mask every occurrence (word-boundary, case-insensitive).
        std::string low = text::lowercase(masked);
        std::string needle = text::lowercase(phrase);
        size_t pos = 0;
        while ((pos = low.find(needle, pos)) != std::string::npos) {
            bool lb = pos == 0 || !(std::isalnum(static_cast<unsigned char>(low[pos - 1])) ||
                                    low[pos - 1] == '_');
            size_t end = pos + needle.size();
            bool rb = end >= low.size() || !(std::isalnum(static_cast<unsigned char>(low[end])) ||
                                             low[end] == '_');
            if (lb && rb) {
                for (size_t k = pos; k < end; ++k) masked[k] = '#';
            }
            pos = end;
        }
    }
    return hits;
}

struct MarkerHits {
    std::vector<std::string> negative;
    std::vector<std::string> positive;
    std::vector<std::string> exception;
    std::vector<std::string> exemption;
    std::vector<std::string> definition;
    std::vector<std::string> boilerplate;
};

MarkerHits find_markers(const std::string& span_text, const MinerLexicons& lex) {
    MarkerHits hits;
    std::string masked = span_text;
    hits.negative = match_phrases(masked, lex.deontic_negative);
    hits.positive = match_phrases(masked, lex.deontic_positive);
    hits.exception = match_phrases(masked, lex.exception_cues);
    hits.exemption = match_phrases(masked, lex.exemption_cues);
    hits.definition = match_phrases(masked, lex.definition_cues);
    hits.boilerplate = match_phrases(masked, lex.boilerplate_cues);
    return hits;
}

std::string strip_trailing_punct(std::string s) {
    while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';' ||
                          s.back() == ':')) {
        s.pop_back();
    }
    return s;
}

struct Range {
    size_t begin, end;
};

bool overlaps(const std::vector<Range>& ranges, size_t b, size_t e) {
    for (const auto& r : ranges) {
        if (b < r.end && r.begin < e) return true;
    }
    return false;
}

void collect(const std::string& s, const std::regex& re, std::vector<std::string>& out,
             std::vector<Range>& taken) {
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re);
         it != std::sregex_iterator(); ++it) {
        size_t b = static_cast<size_t>(it->position());
        size_t e = b + static_cast<size_t>(it->length());
        if (overlaps(taken, b, e)) continue;
        std::string m = strip_trailing_punct(it->str());
        if (m.empty()) continue;
        taken.push_back({b, e});
        out.push_back(m);
    }
}

}  // namespace

Indicators extract_indicators(const std::string& span_text) {
    static const std::regex kWithin(
        R"(\bwithin\s+(\d+|one|two|three|four|five|six|seven|eight|nine|ten|fifteen|twenty|thirty|forty-five|sixty|ninety)\s+(calendar\s+|business\s+|working\s+)?(day|week|month|year|hour|minute)s?\b)",
        std::regex::icase);
    static const std::regex kNoLaterThan(R"(\bno later than\s+[^.;,)]+)", std::regex::icase);
    static const std::regex kFrequency(
        R"(\bat least\s+(annually|quarterly|monthly|weekly|daily|once per\s+[a-z]+))",
        std::regex::icase);
    static const std::regex kComparator(
        R"(\b(at least|at most|no more than|no fewer than|no less than|not less than|not more than|greater than|less than|a minimum of|a maximum of|equal to)\s+\d+(\.\d+)?\s*(%|percent|per cent)?)",
        std::regex::icase);
    static const std::regex kPercent(R"(\b\d+(\.\d+)?\s*(%|percent|per cent))",
                                     std::regex::icase);
    static const std::regex kArticle(R"(\bArticle\s+\d+[0-9a-z()./]*)", std::regex::icase);
    static const std::regex kSectionSign(R"(§+\s*\d+[0-9a-zA-Z().\-]*)");
    static const std::regex kCfr(
        R"(\b\d+\s+C\.F\.R\.(\s+(Part\s+\d+[0-9a-z().]*|§+\s*\d+[0-9a-z().]*))?)",
        std::regex::icase);
    static const std::regex kSection(R"(\bSection\s+\d+[0-9a-z().\-]*)", std::regex::icase);
    static const std::regex kPart(R"(\b(Part|Chapter|Annex|Subpart)\s+[0-9IVXLC]+[0-9a-zA-Z().]*)");

    Indicators ind;
    {
        std::vector<Range> taken;
        collect(span_text, kWithin, ind.deadlines, taken);
        collect(span_text, kNoLaterThan, ind.deadlines, taken);
        collect(span_text, kFrequency, ind.deadlines, taken);
    }
    {
        std::vector<Range> taken;
        collect(span_text, kComparator, ind.thresholds, taken);
        collect(span_text, kPercent, ind.thresholds, taken);
    }
    {
        std::vector<Range> taken;
        collect(span_text, kCfr, ind.cross_refs, taken);
        collect(span_text, kArticle, ind.cross_refs, taken);
        collect(span_text, kSectionSign, ind.cross_refs, taken);
        collect(span_text, kSection, ind.cross_refs, taken);
        collect(span_text, kPart, ind.cross_refs, taken);
    }
    return ind;
}

ClauseType classify_clause(const std::string& span_text, const MinerLexicons& lexicons) {
    MarkerHits hits = find_markers(span_text, lexicons);
    bool deontic = !hits.negative.empty() || !hits.positive.empty();
    if (!hits.negative.empty()) return ClauseType::prohibition;
    if (!hits.exception.empty() && deontic) return ClauseType::exception;
    if (!hits.exemption.empty()) return ClauseType::exemption;
    if (!hits.positive.empty()) return ClauseType::obligation;
    if (!hits.definition.empty()) return ClauseType::definition;
    return ClauseType::other;
}

std::optional<DeonticPolarity> deontic_polarity(const std::string& text_in,
                                                const MinerLexicons& lexicons) {
    MarkerHits hits = find_markers(text_in, lexicons);
    if (!hits.negative.empty()) return DeonticPolarity::forbid;
    if (!hits.positive.empty()) return DeonticPolarity::require;
    return std::nullopt;
}

std::optional<std::string> flip_polarity(const std::string& input,
                                         const MinerLexicons& lexicons) {
    // Pairs tried longest-first so "shall not" wins over "shall".
    std::vector<std::pair<std::string, std::string>> swaps;
    for (const auto& neg : lexicons.deontic_negative) {
        if (neg == "shall not") swaps.emplace_back(neg, "shall");
        else if (neg == "must not") swaps.emplace_back(neg, "must");
        else if (neg == "may not") swaps.emplace_back(neg, "may");
        else if (neg == "should not") swaps.emplace_back(neg, "should");
        else if (neg == "shall never") swaps.emplace_back(neg, "shall");
        else if (neg == "must never") swaps.emplace_back(neg, "must");
        else if (neg == "is prohibited") swaps.emplace_back(neg, "is permitted");
        else if (neg == "are prohibited") swaps.emplace_back(neg, "are permitted");
        else if (neg == "prohibited") swaps.emplace_back(neg, "permitted");
        else if (neg == "is not permitted") swaps.emplace_back(neg, "is permitted");
        else if (neg == "are not permitted") swaps.emplace_back(neg, "are permitted");
        else if (neg == "is not required to") swaps.emplace_back(neg, "is required to");
        else if (neg == "are not required to") swaps.emplace_back(neg, "are required to");
        else if (neg == "is not obligated to") swaps.emplace_back(neg, "is obligated to");
        else if (neg == "are not obligated to") swaps.emplace_back(neg, "are obligated to");
    }
    for (const auto& pos : lexicons.deontic_positive) {
        if (pos == "is required to") swaps.emplace_back(pos, "is not required to");
        else if (pos == "are required to") swaps.emplace_back(pos, "are not required to");
        else if (pos == "is obligated to") swaps.emplace_back(pos, "is not obligated to");
        else if (pos == "are obligated to") swaps.emplace_back(pos, "are not obligated to");
        else swaps.emplace_back(pos, pos + " not");
    }
    std::sort(swaps.begin(), swaps.end(), [](const auto& a, const auto& b) {
        return a.first.size() > b.first.size();
    });

    std::string low = text::lowercase(input);
    for (const auto& [from, to] : swaps) {
        size_t pos = 0;
        while ((pos = low.find(from, pos)) != std::string::npos) {
            bool lb = pos == 0 || !(std::isalnum(static_cast<unsigned char>(low[pos - 1])));
            size_t end = pos + from.size();
            bool rb = end >= low.size() ||
                      !(std::isalnum(static_cast<unsigned char>(low[end])));
            if (lb && rb) {
                std::string out = input;
                out.replace(pos, from.size(), to);
                return out;
            }
            pos = end;
        }
    }
    return std::nullopt;
}

SpanFeatures score_span(const Span& span, const MinerConfig& config) {
    const MinerLexicons& lex = config.lexicons;
    SpanFeatures f;
    MarkerHits hits = find_markers(span.text, lex);
    f.indicators = extract_indicators(span.text);

    auto add_markers = [&](const std::vector<std::string>& list) {
        for (const auto& m : list) f.markers.push_back(m);
    };

    f.has_deontic = !hits.negative.empty() || !hits.positive.empty();
    if (f.has_deontic) {
        f.score += config.weights.deontic;
        add_markers(hits.negative);
        add_markers(hits.positive);
    }
    bool actor = false;
    {
        std::string masked = span.text;
        auto actor_hits = match_phrases(masked, lex.actors);
        actor = !actor_hits.empty();
    }
    if (actor) f.score += config.weights.actor;
    if (!f.indicators.deadlines.empty() || !f.indicators.thresholds.empty()) {
        f.score += config.weights.quant_temporal;
    }
    if (!f.indicators.cross_refs.empty()) f.score += config.weights.cross_ref;
    if (!hits.exception.empty() || !hits.exemption.empty()) {
        f.score += config.weights.exception_cue;
        add_markers(hits.exception);
        add_markers(hits.exemption);
    }
    if (!hits.definition.empty()) {
        f.score += config.weights.definition_cue;
        add_markers(hits.definition);
    }
    if (!hits.boilerplate.empty()) {
        f.score += config.weights.boilerplate_cue;
        add_markers(hits.boilerplate);
    }
    return f;
}

std::vector<Clause> mine(const std::vector<Span>& spans, const MinerConfig& config) {
    std::vector<Clause> out;
    if (config.bypass) {
        for (const auto& span : spans) {
            Clause c;
            c.span = span;
            c.clause_type = ClauseType::other;
            out.push_back(std::move(c));
        }
    } else {
        std::set<std::string> seen_texts;
        for (const auto& span : spans) {
            SpanFeatures f = score_span(span, config);
            if (f.score < config.threshold) continue;
            if (!seen_texts.insert(span.text).second) continue;
            Clause c;
            c.span = span;
            c.clause_type = classify_clause(span.text, config.lexicons);
            c.markers = f.markers;
            c.deadlines = f.indicators.deadlines;
            c.thresholds = f.indicators.thresholds;
            c.cross_refs = f.indicators.cross_refs;
            c.score = f.score;
            out.push_back(std::move(c));
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Clause& a, const Clause& b) { return a.span.span_id < b.span.span_id; });
    return out;
}

}  // namespace p2t
