#include "p2t/consistency.hpp"

#include "p2t/text.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <set>

namespace p2t {

json conflict_to_json(const Conflict& c) {
    return json{{"rule_a", c.rule_a},
                {"rule_b", c.rule_b},
                {"shared_scope",
                 {{"actor", c.shared_scope.actor},
                  {"data_domain", c.shared_scope.data_domain},
                  {"context", c.shared_scope.context}}},
                {"predicate", c.predicate},
                {"kind", c.kind}};
}

std::optional<ConditionMode> condition_mode_from(const std::string& name) {
    if (name == "ignore") return ConditionMode::ignore;
    if (name == "strict") return ConditionMode::strict;
    return std::nullopt;
}

namespace {

std::vector<std::string> intersect(const std::vector<std::string>& a,
                                   const std::vector<std::string>& b) {
    std::set<std::string> sb(b.begin(), b.end());
    std::set<std::string> out;
    for (const auto& x : a) {
        if (sb.count(x)) out.insert(x);
    }
    return {out.begin(), out.end()};
}

bool axis_overlaps(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return true;  // unrestricted
    return !intersect(a, b).empty();
}

const std::set<std::string>& stopwords() {
    static const std::set<std::string> kStop = {
        "a",    "an",   "the",  "and",  "or",    "of",    "to",   "in",    "on",   "at",
        "for",  "with", "by",   "is",   "are",   "be",    "been", "being", "was",  "were",
        "any",  "all",  "as",   "that", "this",  "these", "those", "it",   "its",  "their",
        "them", "they", "from", "under", "over", "into",  "such", "each",  "per",  "via",
        "do",   "does", "did",  "has",  "have",  "had",   "will", "would", "can",  "could",
        "other", "than", "when", "where", "which", "who",  "whom", "while", "also",
    };
    return kStop;
}

const std::set<std::string>& negation_particles() {
    static const std::set<std::string> kNeg = {"not", "no", "never", "cannot", "nor", "without"};
    return kNeg;
}

}  // namespace

bool scopes_overlap(const Scope& a, const Scope& b) {
    if (intersect(a.actor, b.actor).empty()) return false;
    return axis_overlaps(a.data_domain, b.data_domain) && axis_overlaps(a.context, b.context);
}

std::optional<PredicateKey> requirement_predicate(const Rule& rule,
                                                  const MinerLexicons& lexicons) {
    auto polarity = deontic_polarity(rule.requirement, lexicons);

    // Mask deontic phrases so their words do not leak into the token set.
    std::string masked = rule.requirement;
    auto mask_all = [&](const std::vector<std::string>& phrases) {
        for (const auto& phrase : phrases) {
            std::string low = text::lowercase(masked);
            std::string needle = text::lowercase(phrase);
            size_t pos = 0;
            while ((pos = low.find(needle, pos)) != std::string::npos) {
                bool lb = pos == 0 || !std::isalnum(static_cast<unsigned char>(low[pos - 1]));
                size_t end = pos + needle.size();
                bool rb =
                    end >= low.size() || !std::isalnum(static_cast<unsigned char>(low[end]));
                if (lb && rb) {
                    for (size_t k = pos; k < end; ++k) masked[k] = ' ';
                    low = text::lowercase(masked);
                }
                pos = end;
            }
        }
    };
    // Longest first so "shall not" is removed before "shall" could match.
    std::vector<std::string> phrases = lexicons.deontic_negative;
    phrases.insert(phrases.end(), lexicons.deontic_positive.begin(),
                   lexicons.deontic_positive.end());
    std::sort(phrases.begin(), phrases.end(),
              [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
    mask_all(phrases);

    std::set<std::string> tokens;
    for (const auto& tok : text::tokens(text::norm(masked))) {
        if (stopwords().count(tok) || negation_particles().count(tok)) continue;
        tokens.insert(tok);
    }
    if (tokens.empty()) return std::nullopt;

    PredicateKey key;
    key.tokens.assign(tokens.begin(), tokens.end());
    key.polarity =
        (polarity && *polarity == DeonticPolarity::forbid) ? DeonticPolarity::forbid
                                                           : DeonticPolarity::require;
    return key;
}

namespace {

std::set<std::string> guard_set(const std::vector<std::string>& entries) {
    std::set<std::string> out;
    for (const auto& e : entries) out.insert(text::norm(e));
    return out;
}

}  // namespace

std::vector<Conflict> find_conflicts(const std::vector<Rule>& rules, ConditionMode mode,
                                     const MinerLexicons& lexicons) {
    struct Entry {
        const Rule* rule;
        PredicateKey key;
    };
    // Block by the predicate-token signature for near-linear behavior.
    std::map<std::string, std::vector<Entry>> blocks;
    for (const auto& rule : rules) {
        auto key = requirement_predicate(rule, lexicons);
        if (!key) {
            std::cerr << "p2t: rule " << rule.rule_id
                      << " has an empty predicate token set; excluded from consistency check\n";
            continue;
        }
        std::string block;
        for (const auto& t : key->tokens) {
            block += t;
            block.push_back(' ');
        }
        blocks[block].push_back({&rule, std::move(*key)});
    }

    std::vector<Conflict> out;
    for (const auto& [_, entries] : blocks) {
        for (size_t i = 0; i < entries.size(); ++i) {
            for (size_t j = i + 1; j < entries.size(); ++j) {
                const Entry& a = entries[i];
                const Entry& b = entries[j];
                if (a.key.polarity == b.key.polarity) continue;
                if (!scopes_overlap(a.rule->scope, b.rule->scope)) continue;
                if (mode == ConditionMode::strict) {
                    bool same_guards =
                        guard_set(a.rule->conditions) == guard_set(b.rule->conditions) &&
                        guard_set(a.rule->exceptions) == guard_set(b.rule->exceptions);
                    if (!same_guards) continue;  // differing guards may both be satisfiable
                }
                Conflict c;
                c.rule_a = std::min(a.rule->rule_id, b.rule->rule_id);
                c.rule_b = std::max(a.rule->rule_id, b.rule->rule_id);
                c.shared_scope.actor = intersect(a.rule->scope.actor, b.rule->scope.actor);
                c.shared_scope.data_domain =
                    a.rule->scope.data_domain.empty()   ? b.rule->scope.data_domain
                    : b.rule->scope.data_domain.empty() ? a.rule->scope.data_domain
                                                        : intersect(a.rule->scope.data_domain,
                                                                    b.rule->scope.data_domain);
                c.shared_scope.context =
                    a.rule->scope.context.empty()   ? b.rule->scope.context
                    : b.rule->scope.context.empty() ? a.rule->scope.context
                                                    : intersect(a.rule->scope.context,
                                                                b.rule->scope.context);
                c.predicate = a.key.tokens;
                out.push_back(std::move(c));
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Conflict& a, const Conflict& b) {
        return std::tie(a.rule_a, a.rule_b) < std::tie(b.rule_a, b.rule_b);
    });
    return out;
}

namespace {

std::string smt_symbol(const std::string& raw) {
    std::string out;
    for (char c : raw) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    }
    return out;
}

}  // namespace

std::string conflicts_to_smtlib(const std::vector<Rule>& rules,
                                const std::vector<Conflict>& conflicts) {
    std::map<std::string, const Rule*> by_id;
    for (const auto& r : rules) by_id.emplace(r.rule_id, &r);
    std::string out = "; generated constraint problems, one (push)/(pop) block per conflict\n";
    for (const auto& c : conflicts) {
        const Rule* a = by_id.count(c.rule_a) ? by_id.at(c.rule_a) : nullptr;
        const Rule* b = by_id.count(c.rule_b) ? by_id.at(c.rule_b) : nullptr;
        if (!a || !b) continue;
        std::string pred = "pred_";
        for (const auto& t : c.predicate) pred += smt_symbol(t) + "_";
        std::string ga = "guard_" + smt_symbol(c.rule_a);
        std::string gb = "guard_" + smt_symbol(c.rule_b);
        out += "(push)\n";
        out += "; " + c.rule_a + " requires vs " + c.rule_b + " forbids\n";
        out += "(declare-const " + pred + " Bool)\n";
        out += "(declare-const " + ga + " Bool)\n";
        out += "(declare-const " + gb + " Bool)\n";
        // Unguarded rules are always active.
        if (a->conditions.empty() && a->exceptions.empty()) {
            out += "(assert " + ga + ")\n";
        }
        if (b->conditions.empty() && b->exceptions.empty()) {
            out += "(assert " + gb + ")\n";
        }
        out += "(assert (=> " + ga + " " + pred + "))\n";
        out += "(assert (=> " + gb + " (not " + pred + ")))\n";
        out += "(check-sat)\n(pop)\n";
    }
    return out;
}

}  // namespace p2t
