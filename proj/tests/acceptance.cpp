// Acceptance suite: one pass/fail line per criterion, exit 0 iff every
// automated criterion passes. Criterion 9 needs a live provider and is
// reported as SKIP here; see the README for how to run it manually.

#include "p2t/consistency.hpp"
#include "p2t/dedup.hpp"
#include "p2t/dsl.hpp"
#include "p2t/evalx.hpp"
#include "p2t/extract.hpp"
#include "p2t/miner.hpp"
#include "p2t/pipeline.hpp"
#include "p2t/text.hpp"

#include <p2t/p2t.h>

#include "helpers.hpp"
#include "invalid_cases.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>

namespace fs = std::filesystem;
using namespace p2t;
using p2t::testing::fixture;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& what, bool pass,
            const std::string& detail = "") {
    std::printf("%s - criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion,
                what.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
    if (!pass) ++g_failures;
}

void check(bool& ok, bool cond, std::string& note, const std::string& msg) {
    if (!cond && ok) note = msg;
    ok = ok && cond;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::map<std::string, std::string> tree_digest(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        fs::path rel = fs::relative(entry.path(), root);
        if (rel.filename() == "manifest.json") continue;  // carries wall-clock times
        out[rel.string()] = text::sha256_hex(jsonio::read_file(entry.path()));
    }
    return out;
}

std::string run_config_json(const std::string& out_dir) {
    json cfg{
        {"documents",
         json::array(
             {json{{"path", fixture("corpus/hipaa_privacy_excerpt.md")},
                   {"format", "md"},
                   {"doc_id", "hipaa_excerpt"},
                   {"gold", fixture("gold/hipaa_excerpt.gold.jsonl")}},
              json{{"path", fixture("corpus/eu_ai_act_excerpt.md")},
                   {"format", "md"},
                   {"doc_id", "eu_ai_act_excerpt"}},
              json{{"path", fixture("corpus/acme_rai_standard.txt")},
                   {"format", "txt"},
                   {"doc_id", "acme_rai_standard"}}})},
        {"chunking", {{"strategy", "paragraph"}}},
        {"seeds", json::array({1, 2})},
        {"bootstrap", 1000},
        {"out_dir", out_dir},
    };
    return cfg.dump();
}

// --------------------------------------------------------------------------

void criterion_1_offline_determinism() {
    bool ok = true;
    std::string note;
    auto started = std::chrono::steady_clock::now();

    p2t::testing::TempDir tmp("acc1");
    for (const char* dir : {"out1", "out2"}) {
        // one session per run, as two independent invocations would have
        p2t_session* session = p2t_session_create("{\"offline\": true}");
        check(ok, p2t_session_ok(session) == 1, note, "session init failed");
        std::string cfg = run_config_json(tmp.file(dir));
        p2t_status status = p2t_run(session, cfg.c_str(), 0);
        if (status != P2T_OK) {
            check(ok, false, note,
                  std::string("run failed: ") + p2t_session_last_error(session));
            p2t_session_destroy(session);
            break;
        }
        p2t_session_destroy(session);
    }
    if (ok) {
        auto a = tree_digest(tmp.path / "out1");
        auto b = tree_digest(tmp.path / "out2");
        check(ok, !a.empty(), note, "no artifacts produced");
        check(ok, a == b, note, "artifact trees differ between the two runs");
        // token totals in the two manifests agree even though wall times differ
        json ma = jsonio::load_json(tmp.file("out1") + "/manifest.json");
        json mb = jsonio::load_json(tmp.file("out2") + "/manifest.json");
        for (auto& [doc, entry] : ma.at("documents").items()) {
            for (auto& [seed, se] : entry.at("seeds").items()) {
                check(ok,
                      se.at("tokens") ==
                          mb.at("documents").at(doc).at("seeds").at(seed).at("tokens"),
                      note, "token totals differ");
            }
        }
        // both seeds and all three documents produced artifacts
        for (const char* doc :
             {"hipaa_excerpt", "eu_ai_act_excerpt", "acme_rai_standard"}) {
            for (const char* seed : {"1", "2"}) {
                check(ok,
                      fs::exists(tmp.path / "out1" / doc / seed / "rules.tagged.jsonl"),
                      note, std::string("missing artifacts for ") + doc + "/" + seed);
            }
        }
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                      .count();
    check(ok, secs < 60.0, note, "runtime " + std::to_string(secs) + "s exceeds 60s");
    report(1, "offline determinism: two seeded runs over the 3-document corpus are byte-identical (<60s)",
           ok, note);
}

void criterion_2_schema_conformance() {
    bool ok = true;
    std::string note;
    // pipeline-emitted rules all validate
    p2t::testing::TempDir tmp("acc2");
    pipeline::SessionConfig scfg;
    scfg.offline = true;
    pipeline::Session session(std::move(scfg));
    json cfg = json::parse(run_config_json(tmp.file("out")));
    cfg["bootstrap"] = 0;
    cfg["seeds"] = json::array({1});
    pipeline::run_pipeline(session, cfg, false);
    int counted = 0;
    for (const auto& entry : fs::recursive_directory_iterator(tmp.path / "out")) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name != "rules.jsonl" && name != "rules.unique.jsonl" &&
            name != "rules.tagged.jsonl") {
            continue;
        }
        for (const auto& row : jsonio::load_jsonl(entry.path())) {
            ++counted;
            if (!validate_rule(row).ok()) {
                check(ok, false, note, "invalid rule in " + entry.path().string());
            }
        }
    }
    check(ok, counted > 0, note, "no rules emitted");

    auto cases = p2t::testing::invalid_rule_cases();
    check(ok, cases.size() == 25, note, "expected 25 invalid fixtures");
    for (const auto& c : cases) {
        auto result = validate_rule(c.candidate);
        bool found = false;
        for (const auto& v : result.violations) {
            if (v.path == c.path && v.kind == c.kind) found = true;
        }
        check(ok, !result.ok() && found, note, "fixture not rejected correctly: " + c.name);
    }
    report(2, "schema conformance: pipeline rules 100% valid; 25 invalid fixtures rejected with correct paths",
           ok, note);
}

void criterion_3_metric_oracles() {
    bool ok = true;
    std::string note;
    // Cohen kappa vs the hand-computed confusion matrix
    std::vector<std::string> a, b;
    auto fill = [&](int n, const char* la, const char* lb) {
        for (int i = 0; i < n; ++i) {
            a.emplace_back(la);
            b.emplace_back(lb);
        }
    };
    fill(20, "x", "x");
    fill(5, "x", "y");
    fill(10, "y", "x");
    fill(15, "y", "y");
    check(ok, std::abs(cohen_kappa(a, b) - 0.4) < 1e-9, note, "kappa != 0.4");

    // Krippendorff alpha vs the brute-force oracle on >= 10 fixtures
    std::mt19937 rng(2026);
    const std::vector<std::string> labels = {"a", "b", "c"};
    int fixtures_checked = 0;
    // K1: the frozen 3x8 fixture
    {
        std::vector<std::vector<std::set<std::string>>> k1 = {
            {{"a"}, {"a"}, {"a"}}, {{"a"}, {"a"}, {"b"}}, {{"b"}, {"b"}, {"b"}},
            {{"a"}, {"a"}},        {{"b"}, {"a"}, {"b"}}, {{"a"}, {"b"}},
            {{"b"}, {"b"}, {"a"}}, {{"a"}, {"a"}},
        };
        double got = krippendorff_alpha(k1, AlphaDistance::nominal);
        check(ok, std::abs(got - 7.0 / 27.0) < 1e-9, note, "K1 alpha != 7/27");
        check(ok, std::abs(got - oracles::alpha_bruteforce(k1, false)) < 1e-9, note,
              "K1 alpha != oracle");
        ++fixtures_checked;
    }
    for (int t = 0; t < 12; ++t) {
        int raters = 2 + static_cast<int>(rng() % 2);
        int items = 3 + static_cast<int>(rng() % 9);
        bool jaccard = t % 2 == 0;
        std::vector<std::vector<std::set<std::string>>> units;
        for (int i = 0; i < items; ++i) {
            std::vector<std::set<std::string>> unit;
            for (int r = 0; r < raters; ++r) {
                if (rng() % 6 == 0) continue;
                std::set<std::string> v;
                int k = jaccard ? 1 + static_cast<int>(rng() % 2) : 1;
                for (int x = 0; x < k; ++x) v.insert(labels[rng() % labels.size()]);
                unit.push_back(std::move(v));
            }
            units.push_back(std::move(unit));
        }
        double pairable = 0;
        for (const auto& u : units) {
            if (u.size() >= 2) pairable += static_cast<double>(u.size());
        }
        if (pairable < 2) continue;
        double got = krippendorff_alpha(
            units, jaccard ? AlphaDistance::jaccard : AlphaDistance::nominal);
        double want = oracles::alpha_bruteforce(units, jaccard);
        check(ok, std::abs(got - want) < 1e-9, note, "alpha mismatch vs oracle");
        ++fixtures_checked;
    }
    check(ok, fixtures_checked >= 10, note, "fewer than 10 alpha fixtures");

    // span P/R/F1 fixture
    {
        std::vector<Rule> pred;
        std::vector<GoldRecord> gold;
        for (int i = 1; i <= 5; ++i) {
            GoldRecord g;
            g.span_id = "g" + std::to_string(i);
            g.citation = "sec ¶" + std::to_string(i + 10);
            g.is_rule_span = true;
            g.gold_rules = {p2t::testing::make_rule("gr" + g.span_id, g.span_id, "must log")};
            gold.push_back(g);
        }
        for (const char* id : {"g1", "g2", "g3", "fp1"}) {
            Rule r = p2t::testing::make_rule(std::string("p") + id, id, "must log");
            r.source.citation = std::string("pred ¶") + id;
            pred.push_back(r);
        }
        Prf prf = span_prf(match_spans(pred, gold));
        check(ok, std::abs(prf.precision - 0.75) < 1e-12, note, "P != 0.75");
        check(ok, std::abs(prf.recall - 0.6) < 1e-12, note, "R != 0.6");
        check(ok, std::abs(prf.f1 - 2.0 / 3.0) < 1e-12, note, "F1 != 2/3");
    }
    // AP fixture [TP, FP, TP] with 2 gold
    {
        std::vector<GoldRecord> gold;
        for (const char* id : {"g1", "g2"}) {
            GoldRecord g;
            g.span_id = id;
            g.citation = std::string("sec ¶") + id;
            g.is_rule_span = true;
            g.gold_rules = {p2t::testing::make_rule(std::string("gr") + id, id, "must log")};
            gold.push_back(g);
        }
        auto mk = [&](const char* span, double conf) {
            Rule r = p2t::testing::make_rule(std::string("p:") + span, span, "must log");
            r.source.citation = std::string("pred ¶") + span;
            r.confidence = conf;
            return r;
        };
        std::vector<Rule> pred = {mk("g1", 0.9), mk("fp", 0.5), mk("g2", 0.3)};
        check(ok, std::abs(span_auprc(pred, gold) - 5.0 / 6.0) < 1e-12, note, "AP != 5/6");
    }
    report(3, "metric oracles: kappa=0.4, alpha==brute-force on 10+ fixtures, P/R/F1 and AP fixtures exact",
           ok, note);
}

void criterion_4_table4() {
    bool ok = true;
    std::string note;
    std::map<std::string, std::vector<Judgment>> by_system;
    for (const auto& row : jsonio::load_jsonl(fixture("casestudy/judgments.jsonl"))) {
        Judgment j;
        j.system = row.value("system", "");
        j.bucket = row.at("bucket").get<std::string>();
        j.violated = row.at("violated").get<bool>();
        by_system[j.system].push_back(j);
    }
    check(ok, by_system.count("baseline") == 1 && by_system.count("guarded") == 1, note,
          "missing systems in judgments fixture");
    struct Cell {
        const char* system;
        const char* bucket;
        double rate;
    };
    const std::vector<Cell> cells = {
        {"baseline", "clean", 0.02},        {"baseline", "obfuscated", 0.58},
        {"baseline", "compositional", 0.42}, {"guarded", "clean", 0.00},
        {"guarded", "obfuscated", 0.08},    {"guarded", "compositional", 0.06},
    };
    std::map<std::string, BucketRates> rates;
    for (auto& [system, judgments] : by_system) rates[system] = case_study_rates(judgments);
    for (const auto& cell : cells) {
        double got = round2(rates[cell.system].rate[cell.bucket]);
        check(ok, std::abs(got - cell.rate) < 1e-9, note,
              std::string(cell.system) + "/" + cell.bucket + " = " + std::to_string(got));
    }
    check(ok, std::abs(round2(rates["baseline"].overall) - 0.34) < 1e-9, note,
          "baseline overall != 0.34");
    check(ok, std::abs(round2(rates["guarded"].overall) - 0.05) < 1e-9, note,
          "guarded overall != 0.05");
    check(ok, std::abs(round2(rates["baseline"].delta["obfuscated"]) - 0.56) < 1e-9, note,
          "baseline delta obfuscated != +0.56");
    check(ok, std::abs(round2(rates["baseline"].delta["compositional"]) - 0.40) < 1e-9, note,
          "baseline delta compositional != +0.40");
    check(ok, std::abs(round2(rates["guarded"].delta["obfuscated"]) - 0.08) < 1e-9, note,
          "guarded delta obfuscated != +0.08");
    check(ok, std::abs(round2(rates["guarded"].delta["compositional"]) - 0.06) < 1e-9, note,
          "guarded delta compositional != +0.06");
    report(4, "case-study rates reproduce every recorded table cell at 2 decimals (incl. 0.34/0.05 overalls and all deltas)",
           ok, note);
}

void criterion_5_dupidx() {
    bool ok = true;
    std::string note;
    check(ok, std::abs(dup_index(427, 95) - 0.1820) < 0.0001, note,
          "dup_index(427,95) outside 0.1820 +- 0.0001");

    std::vector<Rule> rules;
    for (const auto& row : jsonio::load_jsonl(fixture("dedup/hipaa_extraction.jsonl"))) {
        rules.push_back(rule_from_json(row));
    }
    check(ok, rules.size() == 94, note, "fixture is not 94 rules");
    std::set<std::string> input_spans;
    for (const auto& r : rules) input_spans.insert(r.source.span_id);

    ProviderConfig pcfg;
    pcfg.kind = "fallback";
    Provider provider(pcfg);
    std::vector<Rule> work = rules;
    DedupReport dd = dedup_rules(work, 0.90, provider);
    check(ok, dd.kept == 77, note, "kept " + std::to_string(dd.kept) + " != 77");
    std::set<std::string> output_spans;
    for (const auto& r : work) {
        output_spans.insert(r.source.span_id);
        for (const auto& s : r.source.additional_spans) output_spans.insert(s.span_id);
    }
    check(ok, output_spans == input_spans, note, "span provenance not conserved");
    report(5, "DupIdx formula (427,95 -> 0.1820) and recorded 94->77 dedup with conserved provenance",
           ok, note);
}

void criterion_6_consistency() {
    bool ok = true;
    std::string note;
    std::vector<Rule> rules;
    for (const auto& row : jsonio::load_jsonl(fixture("consistency/planted_50.jsonl"))) {
        rules.push_back(rule_from_json(row));
    }
    check(ok, rules.size() == 50, note, "fixture is not 50 rules");
    auto conflicts = find_conflicts(rules, ConditionMode::ignore);
    check(ok, conflicts.size() == 2, note,
          "expected exactly 2 conflicts, got " + std::to_string(conflicts.size()));
    if (conflicts.size() == 2) {
        check(ok,
              conflicts[0].rule_a == "plant:a1" && conflicts[0].rule_b == "plant:a2" &&
                  conflicts[1].rule_a == "plant:b1" && conflicts[1].rule_b == "plant:b2",
              note, "conflict pairs are not the planted ones");
    }
    // zero false positives on an all-require set
    std::vector<Rule> all_require;
    std::mt19937 rng(6);
    const std::vector<std::string> verbs = {"encrypt", "log", "retain", "notify"};
    for (int i = 0; i < 40; ++i) {
        all_require.push_back(p2t::testing::make_rule(
            "r" + std::to_string(i), "s" + std::to_string(i),
            "must " + verbs[rng() % verbs.size()] + " records", {"organization"}));
    }
    check(ok, find_conflicts(all_require, ConditionMode::ignore).empty(), note,
          "false positives on all-require fixture");
    report(6, "consistency checker: planted fixture yields exactly the expected conflicts, no false positives",
           ok, note);
}

void criterion_7_probe() {
    bool ok = true;
    std::string note;
    std::vector<std::string> clause_texts;
    for (const auto& row : jsonio::load_jsonl(fixture("probe/clauses.jsonl"))) {
        clause_texts.push_back(row.at("text").get<std::string>());
    }
    check(ok, clause_texts.size() == 10, note, "expected 10 probe clauses");

    auto stub_rule_for = [](const std::string& requirement) {
        return json{{"rule_id", "x"},
                    {"source", {{"doc", "x"}, {"citation", "x"}, {"span_id", "x"}}},
                    {"scope", {{"actor", json::array({"organization"})}}},
                    {"hazard", "h"},
                    {"requirement", requirement},
                    {"is_testable", false},
                    {"testability", {{"evidence_signals", json::array()}}}};
    };

    auto run_probe = [&](bool flipping) {
        int stable = 0, fragile = 0;
        p2t::testing::TempDir tmp(flipping ? "acc7a" : "acc7b");
        json entries = json::array();
        for (const auto& text_in : clause_texts) {
            auto flipped = flip_polarity(text_in);
            if (!flipped) continue;
            // the response for the flipped clause either flips (stable stub)
            // or parrots the original polarity (non-flipping stub)
            entries.push_back(json{
                {"task", "extract"},
                {"match", *flipped},
                {"response", json::array({stub_rule_for(flipping ? *flipped : text_in)})}});
            entries.push_back(json{{"task", "extract"},
                                   {"match", text_in},
                                   {"response", json::array({stub_rule_for(text_in)})}});
        }
        jsonio::save_json(tmp.file("stub.json"), json{{"entries", entries}});
        ProviderConfig pcfg;
        pcfg.kind = "stub";
        pcfg.stub_fixtures = tmp.file("stub.json");
        Provider provider(pcfg);
        PromptLibrary prompts = PromptLibrary::builtin();
        ScopeVocabulary vocab;
        ExtractorConfig xcfg;
        xcfg.judge = false;
        xcfg.gate.enabled = false;
        xcfg.probe = true;
        Extractor extractor(provider, prompts, vocab, xcfg);
        for (size_t i = 0; i < clause_texts.size(); ++i) {
            Clause clause = p2t::testing::make_clause(
                "p:000:" + text::zero_pad(static_cast<int>(i), 3), clause_texts[i]);
            Rule r = p2t::testing::make_rule("r", clause.span.span_id, clause_texts[i]);
            ProbeOutcome outcome = extractor.counterfactual_probe(clause, r, 1);
            if (outcome == ProbeOutcome::stable) ++stable;
            if (outcome == ProbeOutcome::fragile) ++fragile;
        }
        return std::pair<int, int>(stable, fragile);
    };

    auto [stable_good, fragile_good] = run_probe(true);
    check(ok, stable_good == 10, note,
          "flipping stub: stable " + std::to_string(stable_good) + "/10");
    auto [stable_bad, fragile_bad] = run_probe(false);
    check(ok, fragile_bad == 10, note,
          "non-flipping stub: fragile " + std::to_string(fragile_bad) + "/10");
    report(7, "counterfactual probe: 10/10 stable under a flipping stub, 10/10 fragile under a non-flipping stub",
           ok, note);
}

void criterion_8_property_suites() {
    bool ok = true;
    std::string note;
    std::mt19937 rng(808);

    // signature order-invariance over 10k randomized fixtures
    {
        const std::vector<std::string> words = {"encrypt", "log",    "notify", "phi",
                                                "records", "access", "limit",  "disclose"};
        auto random_list = [&](int max_len) {
            std::vector<std::string> out;
            int n = static_cast<int>(rng() % (max_len + 1));
            for (int i = 0; i < n; ++i) out.push_back(words[rng() % words.size()]);
            return out;
        };
        bool sig_ok = true;
        for (int i = 0; i < 10000 && sig_ok; ++i) {
            Rule r = p2t::testing::make_rule("r", "s", "must encrypt phi");
            r.scope.actor = random_list(3);
            r.scope.data_domain = random_list(3);
            r.conditions = random_list(3);
            r.exceptions = random_list(2);
            Rule shuffled = r;
            std::shuffle(shuffled.scope.actor.begin(), shuffled.scope.actor.end(), rng);
            std::shuffle(shuffled.scope.data_domain.begin(), shuffled.scope.data_domain.end(),
                         rng);
            std::shuffle(shuffled.conditions.begin(), shuffled.conditions.end(), rng);
            std::shuffle(shuffled.exceptions.begin(), shuffled.exceptions.end(), rng);
            sig_ok = canonical_signature(r) == canonical_signature(shuffled);
        }
        check(ok, sig_ok, note, "signature changed under list permutation");
    }

    // dedup idempotence + monotonicity + provenance conservation
    {
        ProviderConfig pcfg;
        pcfg.kind = "fallback";
        Provider provider(pcfg);
        const std::vector<std::string> verbs = {"encrypt", "log", "retain", "notify"};
        const std::vector<std::string> objs = {"phi records", "audit logs", "user data"};
        bool dedup_ok = true;
        for (int trial = 0; trial < 10 && dedup_ok; ++trial) {
            std::vector<Rule> rules;
            for (int i = 0; i < 20; ++i) {
                rules.push_back(p2t::testing::make_rule(
                    "r:" + text::zero_pad(i, 3), "s:" + text::zero_pad(i, 3),
                    "must " + verbs[rng() % verbs.size()] + " " + objs[rng() % objs.size()],
                    {"organization"}));
            }
            std::set<std::string> input_spans;
            for (const auto& r : rules) input_spans.insert(r.source.span_id);

            auto [once, m1] = structural_dedup(rules);
            auto [twice, m2] = structural_dedup(once);
            dedup_ok = dedup_ok && once == twice && m2.empty();

            auto [sem1, s1] = semantic_dedup(once, 0.85, provider);
            auto [sem2, s2] = semantic_dedup(sem1, 0.85, provider);
            dedup_ok = dedup_ok && sem1 == sem2 && s2.empty();

            auto [lo, ml] = semantic_dedup(once, 0.70, provider);
            auto [hi, mh] = semantic_dedup(once, 0.95, provider);
            dedup_ok = dedup_ok && hi.size() >= lo.size();

            std::set<std::string> out_spans;
            size_t total = 0;
            for (const auto& r : sem1) {
                out_spans.insert(r.source.span_id);
                total += 1 + r.source.additional_spans.size();
                for (const auto& s : r.source.additional_spans) out_spans.insert(s.span_id);
            }
            dedup_ok = dedup_ok && out_spans == input_spans && total == input_spans.size();
        }
        check(ok, dedup_ok, note, "dedup property violated");
    }

    // miner threshold monotonicity
    {
        const std::vector<std::string> chunks = {
            "Providers shall log events", "must retain records", "'X' means Y",
            "within 30 days",             "Article 12 applies",  "plain text here",
        };
        std::vector<Span> spans;
        for (int i = 0; i < 50; ++i) {
            std::string body = chunks[rng() % chunks.size()];
            if (rng() % 2) body += ", " + chunks[rng() % chunks.size()];
            spans.push_back(
                p2t::testing::make_span("d:000:" + text::zero_pad(i, 3), body));
        }
        MinerConfig lo, hi;
        lo.threshold = 2.0;
        hi.threshold = 4.0;
        std::set<std::string> lo_ids, hi_ids;
        for (const auto& c : mine(spans, lo)) lo_ids.insert(c.span.span_id);
        for (const auto& c : mine(spans, hi)) hi_ids.insert(c.span.span_id);
        bool subset = true;
        for (const auto& id : hi_ids) subset = subset && lo_ids.count(id) == 1;
        check(ok, subset, note, "miner threshold not monotone");
    }

    // normalize_scope idempotence
    {
        ScopeVocabulary vocab = ScopeVocabulary::from_json(
            json{{"providers", "provider"}, {"a", "b"}, {"b", "c"}});
        const std::vector<std::string> pool = {"a", "b", "Providers", "Other Actor", "c"};
        bool norm_ok = true;
        for (int i = 0; i < 300 && norm_ok; ++i) {
            Rule r = p2t::testing::make_rule("r", "s", "must log");
            r.scope.actor.clear();
            for (unsigned k = 0; k < rng() % 4; ++k) {
                r.scope.actor.push_back(pool[rng() % pool.size()]);
            }
            Rule once = normalize_scope(r, vocab).rule;
            Rule twice = normalize_scope(once, vocab).rule;
            norm_ok = once == twice;
        }
        check(ok, norm_ok, note, "normalize_scope not idempotent");
    }

    // bootstrap determinism per seed
    {
        std::vector<double> data;
        for (int i = 0; i < 40; ++i) data.push_back((i % 7) / 7.0);
        auto mean = [&](const std::vector<size_t>& idx) {
            double s = 0;
            for (size_t i : idx) s += data[i];
            return s / static_cast<double>(idx.size());
        };
        auto c1 = bootstrap_ci(mean, data.size(), 500, 0.95, 424242);
        auto c2 = bootstrap_ci(mean, data.size(), 500, 0.95, 424242);
        check(ok, c1 == c2, note, "bootstrap not deterministic per seed");
    }
    report(8, "property suites: dedup idempotence/monotonicity, provenance conservation, signature order-invariance (10k), miner monotonicity, normalize_scope idempotence, bootstrap determinism",
           ok, note);
}

void criterion_9_live_manual() {
    std::printf(
        "SKIP - criterion 9: live-provider end-to-end run is manual (non-CI); see README "
        "'Running against a live provider'\n");
}

}  // namespace

int main() {
    std::printf("p2t acceptance suite\n");
    criterion_1_offline_determinism();
    criterion_2_schema_conformance();
    criterion_3_metric_oracles();
    criterion_4_table4();
    criterion_5_dupidx();
    criterion_6_consistency();
    criterion_7_probe();
    criterion_8_property_suites();
    criterion_9_live_manual();
    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all automated criteria passed\n");
    return 0;
}
