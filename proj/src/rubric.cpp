#include "p2t/rubric.hpp"

#include "p2t/dsl.hpp"
#include "p2t/errors.hpp"
#include "p2t/text.hpp"

#include <algorithm>
#include <set>

namespace p2t {

TestabilityRubric TestabilityRubric::defaults() {
    TestabilityRubric r;
    r.verb_signals = {
        {"verify", "ci_gate"},     {"test", "ci_gate"},       {"validate", "ci_gate"},
        {"document", "attest_check"}, {"record", "attest_check"}, {"attest", "attest_check"},
        {"certify", "attest_check"},  {"obtain", "attest_check"}, {"train", "attest_check"},
        {"log", "log_check"},      {"audit", "log_check"},    {"monitor", "log_check"},
        {"review", "log_check"},   {"track", "log_check"},
        {"disclose", "io_check"},  {"notify", "io_check"},    {"inform", "io_check"},
        {"report", "io_check"},    {"respond", "io_check"},   {"refuse", "io_check"},
        {"provide", "io_check"},
        {"restrict", "access_check"}, {"limit", "access_check"}, {"authorize", "access_check"},
        {"authenticate", "access_check"},
        {"retain", "data_check"},  {"store", "data_check"},   {"delete", "data_check"},
        {"erase", "data_check"},   {"anonymize", "data_check"}, {"maintain", "data_check"},
        {"encrypt", "config_check"}, {"configure", "config_check"}, {"implement", "config_check"},
        {"enable", "config_check"},  {"disable", "config_check"},
        {"publish", "repo_check"},
    };
    return r;
}

TestabilityRubric TestabilityRubric::from_json(const jsonio::json& value) {
    if (!value.is_object() || !value.contains("verb_signals") ||
        !value.at("verb_signals").is_object()) {
        throw InputError("testability rubric must be {\"verb_signals\": {verb: signal}}");
    }
    TestabilityRubric r;
    for (const auto& [verb, signal] : value.at("verb_signals").items()) {
        if (!signal.is_string()) throw InputError("rubric signal must be a string");
        std::string sig = signal.get<std::string>();
        if (!is_evidence_signal(sig)) continue;  // unknown channels are ignored
        r.verb_signals.emplace_back(text::lowercase(verb), sig);
    }
    return r;
}

TestabilityRubric TestabilityRubric::load(const std::filesystem::path& path) {
    return from_json(jsonio::load_json(path));
}

namespace {

// Inflection-tolerant verb match: log/logs/logged/logging, encrypt/encrypting...
bool matches_verb(const std::string& token, const std::string& verb) {
    if (token == verb) return true;
    if (token.size() <= verb.size()) return false;
    std::string suffix = token.substr(verb.size());
    if (token.compare(0, verb.size(), verb) == 0) {
        if (suffix == "s" || suffix == "es" || suffix == "ed" || suffix == "d" ||
            suffix == "ing") {
            return true;
        }
        // doubled final consonant: log -> logged / logging
        char last = verb.back();
        if (suffix == std::string(1, last) + "ed" || suffix == std::string(1, last) + "ing") {
            return true;
        }
    }
    // drop final e: store -> storing
    if (verb.back() == 'e' && token.compare(0, verb.size() - 1, verb, 0, verb.size() - 1) == 0) {
        std::string stem_suffix = token.substr(verb.size() - 1);
        if (stem_suffix == "ing") return true;
    }
    return false;
}

}  // namespace

std::vector<std::string> TestabilityRubric::signals_for(const std::string& text_in) const {
    std::set<std::string> out;
    for (const auto& token : text::tokens(text_in)) {
        for (const auto& [verb, signal] : verb_signals) {
            if (matches_verb(token, verb)) out.insert(signal);
        }
    }
    return {out.begin(), out.end()};
}

bool TestabilityRubric::has_verifiable_verb(const std::string& text_in) const {
    return !signals_for(text_in).empty();
}

}  // namespace p2t
