#include "p2t/pipeline.hpp"

#include "p2t/errors.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace p2t;
using namespace p2t::pipeline;
using p2t::testing::fixture;
using p2t::testing::TempDir;

namespace {

Session offline_session() {
    SessionConfig cfg;
    cfg.offline = true;
    cfg.provider.kind = "fallback";
    cfg.vocab_path = (p2t::testing::source_dir() / "data" / "scope_vocab.json").string();
    return Session(std::move(cfg));
}

json run_config(const TempDir& tmp, const std::string& out_dir,
                const std::vector<long>& seeds = {1}) {
    json cfg{{"documents",
              json::array({json{{"path", fixture("corpus/hipaa_privacy_excerpt.md")},
                                {"format", "md"},
                                {"doc_id", "hipaa_mini"}}})},
             {"chunking", {{"strategy", "paragraph"}}},
             {"stages", json::object()},
             {"seeds", seeds},
             {"bootstrap", 0},
             {"out_dir", out_dir}};
    (void)tmp;
    return cfg;
}

}  // namespace

TEST_CASE("stage commands chain into a full offline run") {
    TempDir tmp("stages");
    Session session = offline_session();
    cmd_ingest(session, fixture("corpus/hipaa_privacy_excerpt.md"), "md", "paragraph", 1,
               tmp.file("spans.jsonl"));
    auto spans = jsonio::load_jsonl(tmp.file("spans.jsonl"));
    CHECK(spans.size() > 10);

    cmd_mine(session, tmp.file("spans.jsonl"), tmp.file("clauses.jsonl"), false);
    auto clauses = jsonio::load_jsonl(tmp.file("clauses.jsonl"));
    CHECK(clauses.size() > 5);
    CHECK(clauses.size() <= spans.size());

    ExtractOptions opts;
    cmd_extract(session, tmp.file("clauses.jsonl"), tmp.file("rules.jsonl"),
                tmp.file("trace.jsonl"), opts);
    auto rules = jsonio::load_jsonl(tmp.file("rules.jsonl"));
    REQUIRE_FALSE(rules.empty());
    for (const auto& row : rules) {
        CAPTURE(row.dump());
        CHECK(validate_rule(row).ok());  // every emitted rule is schema-valid
    }
    auto traces = jsonio::load_jsonl(tmp.file("trace.jsonl"));
    CHECK(traces.size() == clauses.size());

    cmd_dedup(session, tmp.file("rules.jsonl"), tmp.file("unique.jsonl"),
              tmp.file("dedup.json"), 0.90);
    auto unique = jsonio::load_jsonl(tmp.file("unique.jsonl"));
    CHECK(unique.size() <= rules.size());
    json dd = jsonio::load_json(tmp.file("dedup.json"));
    CHECK(dd.at("kept").get<int>() == static_cast<int>(unique.size()));

    cmd_tag(session, tmp.file("unique.jsonl"), tmp.file("tagged.jsonl"));
    auto tagged = jsonio::load_jsonl(tmp.file("tagged.jsonl"));
    CHECK(tagged.size() == unique.size());
    for (const auto& row : tagged) CHECK(validate_rule(row).ok());

    cmd_examples(session, tmp.file("tagged.jsonl"), tmp.file("examples.jsonl"), 3, 1);
    auto examples = jsonio::load_jsonl(tmp.file("examples.jsonl"));
    int io_rules = 0;
    for (const auto& row : tagged) {
        if (!row.value("is_testable", false)) continue;
        auto sig = row.at("testability").at("evidence_signals");
        for (const auto& s : sig) {
            if (s == "io_check") {
                ++io_rules;
                break;
            }
        }
    }
    CHECK(static_cast<int>(examples.size()) == io_rules);

    cmd_check(session, tmp.file("tagged.jsonl"), tmp.file("conflicts.json"), "ignore");
    json conflicts = jsonio::load_json(tmp.file("conflicts.json"));
    CHECK(conflicts.is_array());
}

TEST_CASE("run_pipeline writes a manifest and skips unchanged reruns") {
    TempDir tmp("run");
    Session session = offline_session();
    json cfg = run_config(tmp, tmp.file("out"));
    json manifest = run_pipeline(session, cfg, false);
    CHECK(manifest.value("complete", false));
    CHECK_FALSE(manifest.value("skipped", false));
    CHECK(std::filesystem::exists(tmp.file("out") + "/manifest.json"));
    CHECK(std::filesystem::exists(tmp.file("out") + "/summary.csv"));
    CHECK(std::filesystem::exists(tmp.file("out") + "/hipaa_mini/1/rules.jsonl"));

    json again = run_pipeline(session, cfg, false);
    CHECK(again.value("skipped", false));

    json forced = run_pipeline(session, cfg, true);
    CHECK_FALSE(forced.value("skipped", false));
}

TEST_CASE("two seeds produce two artifact sets and a merged summary") {
    TempDir tmp("seeds");
    Session session = offline_session();
    json cfg = run_config(tmp, tmp.file("out"), {1, 2});
    json manifest = run_pipeline(session, cfg, false);
    CHECK(std::filesystem::exists(tmp.file("out") + "/hipaa_mini/1/rules.jsonl"));
    CHECK(std::filesystem::exists(tmp.file("out") + "/hipaa_mini/2/rules.jsonl"));
    std::string csv = jsonio::read_file(tmp.file("out") + "/summary.csv");
    CHECK(csv.find("hipaa_mini,1,") != std::string::npos);
    CHECK(csv.find("hipaa_mini,2,") != std::string::npos);
}

TEST_CASE("disabling a stage never alters upstream artifacts") {
    TempDir tmp("toggles");
    Session session = offline_session();
    json base_cfg = run_config(tmp, tmp.file("base"));
    base_cfg["stages"] = json{{"judge", false}, {"dedup", false}, {"tag", false},
                              {"examples", false}, {"check", false}, {"probe", false},
                              {"gate", false}};
    json full_cfg = run_config(tmp, tmp.file("full"));
    run_pipeline(session, base_cfg, false);
    run_pipeline(session, full_cfg, false);
    // upstream of extract: spans and clauses byte-identical across toggle sets
    CHECK(jsonio::read_file(tmp.file("base") + "/hipaa_mini/1/spans.jsonl") ==
          jsonio::read_file(tmp.file("full") + "/hipaa_mini/1/spans.jsonl"));
    CHECK(jsonio::read_file(tmp.file("base") + "/hipaa_mini/1/clauses.jsonl") ==
          jsonio::read_file(tmp.file("full") + "/hipaa_mini/1/clauses.jsonl"));
    // base run writes no dedup artifacts
    CHECK_FALSE(std::filesystem::exists(tmp.file("base") + "/hipaa_mini/1/rules.unique.jsonl"));
    CHECK(std::filesystem::exists(tmp.file("full") + "/hipaa_mini/1/rules.unique.jsonl"));
}

TEST_CASE("the recorded fixture manifest reports the corpus summary row") {
    json manifest = jsonio::load_json(fixture("recorded_run/manifest.json"));
    // fixture stores repo-relative artifact paths; rebase them for the test cwd
    for (auto& [doc, entry] : manifest.at("documents").items()) {
        for (auto& [seed, seed_entry] : entry.at("seeds").items()) {
            for (auto& [stage, path] : seed_entry.at("stages").items()) {
                path = (p2t::testing::source_dir() / path.get<std::string>()).string();
            }
        }
    }
    std::string csv = report_csv(manifest);
    CHECK(csv.find("hipaa,1,56,94,77,85.7,31") != std::string::npos);
}

TEST_CASE("casestudy command reproduces rates from judgment files") {
    TempDir tmp("casestudy");
    Session session = offline_session();
    cmd_casestudy(session, fixture("casestudy/judgments.jsonl"), tmp.file("rates.json"));
    json rates = jsonio::load_json(tmp.file("rates.json"));
    const json& systems = rates.at("systems");
    REQUIRE(systems.contains("baseline"));
    REQUIRE(systems.contains("guarded"));
    CHECK(systems.at("baseline").at("overall").get<double>() ==
          doctest::Approx(0.34).epsilon(1e-12));
    CHECK(systems.at("guarded").at("overall").get<double>() ==
          doctest::Approx(7.0 / 150.0).epsilon(1e-12));
}

TEST_CASE("eval command writes a metrics report") {
    TempDir tmp("evalcmd");
    Session session = offline_session();
    cmd_eval(session, fixture("eval/eu_seed_pred.jsonl"), fixture("eval/eu_seed_gold.jsonl"),
             tmp.file("report.json"), 200, 1);
    json report = jsonio::load_json(tmp.file("report.json"));
    CHECK(report.at("metrics").at("coverage").get<double>() ==
          doctest::Approx(0.55).epsilon(1e-12));
    CHECK(report.at("metrics").at("ci").contains("coverage"));
}

TEST_CASE("rule files may be a JSON array instead of JSONL") {
    TempDir tmp("array_rules");
    Session session = offline_session();
    json arr = json::array();
    Rule a = p2t::testing::make_rule("r:a", "s1", "must encrypt PHI at rest");
    Rule b = p2t::testing::make_rule("r:b", "s2", "must encrypt PHI at rest");
    arr.push_back(rule_to_json(a));
    arr.push_back(rule_to_json(b));
    jsonio::save_json(tmp.file("rules.json"), arr);
    cmd_dedup(session, tmp.file("rules.json"), tmp.file("unique.jsonl"), "", 0.9);
    CHECK(jsonio::load_jsonl(tmp.file("unique.jsonl")).size() == 1);
}

TEST_CASE("stage failures abort with informative input errors") {
    TempDir tmp("errors");
    Session session = offline_session();
    CHECK_THROWS_AS(cmd_ingest(session, tmp.file("missing.md"), "md", "paragraph", 1,
                               tmp.file("out.jsonl")),
                    InputError);
    CHECK_THROWS_AS(cmd_ingest(session, fixture("corpus/hipaa_privacy_excerpt.md"), "pdf",
                               "paragraph", 1, tmp.file("out.jsonl")),
                    InputError);
    CHECK_THROWS_AS(cmd_check(session, tmp.file("missing.jsonl"), tmp.file("c.json"),
                              "ignore"),
                    InputError);
    jsonio::save_jsonl(tmp.file("rules.jsonl"), {});
    CHECK_THROWS_AS(cmd_check(session, tmp.file("rules.jsonl"), tmp.file("c.json"), "bogus"),
                    InputError);
}
