#include "p2t/enrich.hpp"

#include "p2t/errors.hpp"
#include "p2t/text.hpp"

#include <algorithm>
#include <set>

namespace p2t {

json example_set_to_json(const ExampleSet& set) {
    return json{{"rule_id", set.rule_id},
                {"benign", set.benign},
                {"adversarial", set.adversarial},
                {"generator_seed", set.generator_seed}};
}

namespace {

json parse_object(const std::string& raw) {
    std::string s = text::trim(raw);
    if (s.rfind("```", 0) == 0) {
        size_t nl = s.find('\n');
        if (nl != std::string::npos) s = s.substr(nl + 1);
        size_t fence = s.rfind("```");
        if (fence != std::string::npos) s = s.substr(0, fence);
    }
    json v = json::parse(s, nullptr, false);
    if (v.is_object()) return v;
    size_t b = s.find('{');
    size_t e = s.rfind('}');
    if (b != std::string::npos && e != std::string::npos && e > b) {
        v = json::parse(s.substr(b, e - b + 1), nullptr, false);
        if (v.is_object()) return v;
    }
    return json(nullptr);
}

std::vector<std::string> dedupe_case_insensitive(const std::vector<std::string>& prompts) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& p : prompts) {
        if (seen.insert(text::lowercase(text::trim(p))).second) out.push_back(text::trim(p));
    }
    return out;
}

}  // namespace

TagOutcome tag_testability(const Rule& rule, Provider& provider, const PromptLibrary& prompts,
                           const TestabilityRubric& rubric) {
    TagOutcome outcome;
    outcome.rule = rule;

    json rule_json = rule_to_json(rule);
    TextRequest req;
    req.task_tag = TaskTag::testability;
    req.prompt = prompts.render(TaskTag::testability, {{"rule_json", rule_json.dump(2)}});
    req.temperature = 0.0;
    req.payload = json{{"rule", rule_json}};

    json parsed;
    try {
        TextResponse resp = provider.generate(req);
        parsed = parse_object(resp.text);
    } catch (const ProviderError& e) {
        outcome.note = std::string("testability call failed: ") + e.what();
        return outcome;
    }
    if (!parsed.is_object() || !parsed.contains("is_testable") ||
        !parsed.at("is_testable").is_boolean()) {
        outcome.note = "testability output unparseable; rule left untagged";
        return outcome;
    }

    bool is_testable = parsed.at("is_testable").get<bool>();
    std::string reason = parsed.value("reason", "");
    std::vector<std::string> signals;
    if (parsed.contains("evidence_signals") && parsed.at("evidence_signals").is_array()) {
        for (const auto& s : parsed.at("evidence_signals")) {
            if (!s.is_string()) continue;
            std::string name = s.get<std::string>();
            if (is_evidence_signal(name)) {
                if (std::find(signals.begin(), signals.end(), name) == signals.end()) {
                    signals.push_back(name);
                }
            } else {
                outcome.dropped_signals.push_back(name);
            }
        }
    }
    std::sort(signals.begin(), signals.end());

    // Verifiable-verb override: the model cannot declare a rule testable when
    // the requirement names no rubric verb class.
    if (is_testable && !rubric.has_verifiable_verb(outcome.rule.requirement)) {
        is_testable = false;
        reason += (reason.empty() ? "" : " ");
        reason += "(downgraded: no verifiable verb class in requirement)";
    }

    outcome.rule.is_testable = is_testable;
    outcome.rule.testability.evidence_signals = signals;
    outcome.rule.testability.reason = reason;
    outcome.tagged = true;
    return outcome;
}

bool wants_examples(const Rule& rule) {
    return rule.is_testable &&
           std::find(rule.testability.evidence_signals.begin(),
                     rule.testability.evidence_signals.end(),
                     "io_check") != rule.testability.evidence_signals.end();
}

std::optional<ExampleSet> generate_examples(const Rule& rule, Provider& provider,
                                            const PromptLibrary& prompts, int n_per_side,
                                            long seed, std::string* note) {
    if (!wants_examples(rule)) {
        throw InputError("example generation requires is_testable with io_check: " +
                         rule.rule_id);
    }
    if (n_per_side < 1) throw InputError("n_per_side must be >= 1");

    json rule_json = rule_to_json(rule);
    std::string feedback;
    for (int attempt = 0; attempt < 2; ++attempt) {
        TextRequest req;
        req.task_tag = TaskTag::examples;
        req.prompt = prompts.render(TaskTag::examples, {{"rule_json", rule_json.dump(2)},
                                                        {"n", std::to_string(n_per_side)},
                                                        {"seed", std::to_string(seed)},
                                                        {"feedback", feedback}});
        req.temperature = provider.config().temperature;
        req.seed = seed;
        req.payload = json{{"rule", rule_json}, {"n", n_per_side}, {"seed", seed},
                           {"attempt", attempt}};
        json parsed;
        try {
            TextResponse resp = provider.generate(req);
            parsed = parse_object(resp.text);
        } catch (const ProviderError& e) {
            if (note) *note = std::string("examples call failed: ") + e.what();
            return std::nullopt;
        }

        std::string problem;
        std::vector<std::string> benign, adversarial;
        auto string_list = [](const json& arr, std::vector<std::string>& out) {
            for (const auto& item : arr) {
                if (!item.is_string()) return false;
                out.push_back(item.get<std::string>());
            }
            return true;
        };
        if (!parsed.is_object() || !parsed.contains("benign") ||
            !parsed.contains("adversarial") || !parsed.at("benign").is_array() ||
            !parsed.at("adversarial").is_array() ||
            !string_list(parsed.at("benign"), benign) ||
            !string_list(parsed.at("adversarial"), adversarial)) {
            problem = "output is not {benign: [...], adversarial: [...]}";
        } else {
            if (static_cast<int>(benign.size()) != n_per_side ||
                static_cast<int>(adversarial.size()) != n_per_side) {
                problem = "wrong arity (expected " + std::to_string(n_per_side) + " per list)";
            } else {
                for (const auto& p : benign) {
                    if (text::trim(p).empty()) problem = "empty benign prompt";
                }
                for (const auto& p : adversarial) {
                    if (text::trim(p).empty()) problem = "empty adversarial prompt";
                }
            }
        }
        if (problem.empty()) {
            ExampleSet set;
            set.rule_id = rule.rule_id;
            set.benign = dedupe_case_insensitive(benign);
            set.adversarial = dedupe_case_insensitive(adversarial);
            set.generator_seed = seed;
            return set;
        }
        feedback = "Your previous output was rejected: " + problem + ".";
    }
    if (note) *note = "example generation failed after retry for " + rule.rule_id;
    return std::nullopt;
}

}  // namespace p2t
