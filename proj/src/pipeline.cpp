#include "p2t/pipeline.hpp"

#include "p2t/consistency.hpp"
#include "p2t/dedup.hpp"
#include "p2t/enrich.hpp"
#include "p2t/errors.hpp"
#include "p2t/evalx.hpp"
#include "p2t/ingest.hpp"
#include "p2t/text.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace p2t::pipeline {

namespace fs = std::filesystem;

SessionConfig SessionConfig::from_json(const json& value) {
    if (!value.is_object()) throw InputError("session config must be a JSON object");
    json cfg = jsonio::interpolate_env(value);
    SessionConfig out;
    if (cfg.contains("provider")) out.provider = ProviderConfig::from_json(cfg.at("provider"));
    out.prompts_dir = cfg.value("prompts_dir", "");
    out.vocab_path = cfg.value("vocab", "");
    out.miner_config_path = cfg.value("miner_config", "");
    out.rubric_path = cfg.value("rubric", "");
    out.few_shot_path = cfg.value("few_shot", "");
    out.offline = cfg.value("offline", false);
    if (out.offline) out.provider.kind = "fallback";
    return out;
}

Session::Session(SessionConfig config) : config_(std::move(config)) {
    prompts_ = config_.prompts_dir.empty() ? PromptLibrary::builtin()
                                           : PromptLibrary::from_dir(config_.prompts_dir);
    if (!config_.vocab_path.empty()) vocab_ = ScopeVocabulary::load(config_.vocab_path);
    miner_ = config_.miner_config_path.empty() ? MinerConfig{}
                                               : MinerConfig::load(config_.miner_config_path);
    rubric_ = config_.rubric_path.empty() ? TestabilityRubric::defaults()
                                          : TestabilityRubric::load(config_.rubric_path);
    provider_ = std::make_unique<Provider>(config_.provider);
    provider_->set_prompts(&prompts_);
}

// ---------------------------------------------------------------------------

void cmd_ingest(Session& session, const std::string& in_path, const std::string& format,
                const std::string& strategy, int window_radius, const std::string& out_path,
                const std::string& doc_id) {
    auto fmt = doc_format_from(format);
    if (!fmt) throw InputError("unknown format: " + format + " (expected md or txt)");
    auto strat = chunk_strategy_from(strategy);
    if (!strat) throw InputError("unknown strategy: " + strategy);
    Document doc = load_document(in_path, *fmt, doc_id);
    std::vector<Span> spans = chunk(doc, *strat, window_radius);
    std::vector<json> rows;
    rows.reserve(spans.size());
    for (const auto& s : spans) rows.push_back(span_to_json(s));
    jsonio::save_jsonl(out_path, rows);
    (void)session;
}

void cmd_mine(Session& session, const std::string& spans_path, const std::string& out_path,
              bool bypass, const std::string& config_path) {
    std::vector<Span> spans;
    for (const auto& row : jsonio::load_rows(spans_path)) {
        spans.push_back(span_from_json(row));
    }
    MinerConfig cfg = config_path.empty() ? session.miner() : MinerConfig::load(config_path);
    cfg.bypass = bypass || cfg.bypass;
    std::vector<Clause> clauses = mine(spans, cfg);
    std::vector<json> rows;
    rows.reserve(clauses.size());
    for (const auto& c : clauses) rows.push_back(clause_to_json(c));
    jsonio::save_jsonl(out_path, rows);
}

namespace {

std::vector<Clause> load_clauses(const std::string& path) {
    std::vector<Clause> clauses;
    for (const auto& row : jsonio::load_rows(path)) {
        clauses.push_back(clause_from_json(row));
    }
    return clauses;
}

std::vector<Rule> load_rules(const std::string& path) {
    std::vector<Rule> rules;
    for (const auto& row : jsonio::load_rows(path)) {
        rules.push_back(rule_from_json(row));
    }
    return rules;
}

void save_rules(const std::string& path, const std::vector<Rule>& rules) {
    std::vector<json> rows;
    rows.reserve(rules.size());
    for (const auto& r : rules) rows.push_back(rule_to_json(r));
    jsonio::save_jsonl(path, rows);
}

}  // namespace

void cmd_extract(Session& session, const std::string& clauses_path,
                 const std::string& rules_out, const std::string& trace_out,
                 const ExtractOptions& options) {
    std::vector<Clause> clauses = load_clauses(clauses_path);
    ExtractorConfig cfg;
    cfg.judge = options.judge;
    cfg.repair = options.judge;  // repair rides the judge toggle
    cfg.gate.enabled = options.gate;
    cfg.gate.trusted_evidence = options.trusted_evidence;
    cfg.probe = options.probe;
    cfg.keep_gated = options.keep_gated;
    cfg.few_shot_path = session.config().few_shot_path;
    Extractor extractor(session.provider(), session.prompts(), session.vocab(), cfg,
                        session.miner().lexicons);
    ExtractionRun run = run_extraction(clauses, extractor, options.seed,
                                       session.provider().config().parallelism);
    save_rules(rules_out, run.rules);
    std::vector<json> traces;
    traces.reserve(run.traces.size());
    for (const auto& t : run.traces) traces.push_back(trace_to_json(t));
    jsonio::save_jsonl(trace_out, traces);
}

void cmd_dedup(Session& session, const std::string& rules_path, const std::string& out_path,
               const std::string& report_path, double threshold) {
    std::vector<Rule> rules = load_rules(rules_path);
    DedupReport report = dedup_rules(rules, threshold, session.provider());
    save_rules(out_path, rules);
    if (!report_path.empty()) {
        jsonio::save_json(report_path, dedup_report_to_json(report));
    }
}

void cmd_tag(Session& session, const std::string& rules_path, const std::string& out_path) {
    std::vector<Rule> rules = load_rules(rules_path);
    std::vector<Rule> out;
    out.reserve(rules.size());
    for (const auto& rule : rules) {
        TagOutcome outcome =
            tag_testability(rule, session.provider(), session.prompts(), session.rubric());
        for (const auto& dropped : outcome.dropped_signals) {
            std::cerr << "p2t: dropped unknown evidence signal '" << dropped << "' on "
                      << rule.rule_id << "\n";
        }
        if (!outcome.tagged) {
            std::cerr << "p2t: " << outcome.note << " (" << rule.rule_id << ")\n";
        }
        out.push_back(std::move(outcome.rule));
    }
    std::sort(out.begin(), out.end(),
              [](const Rule& a, const Rule& b) { return a.rule_id < b.rule_id; });
    save_rules(out_path, out);
}

void cmd_examples(Session& session, const std::string& rules_path, const std::string& out_path,
                  int n_per_side, long seed) {
    std::vector<Rule> rules = load_rules(rules_path);
    std::vector<json> rows;
    for (const auto& rule : rules) {
        if (!wants_examples(rule)) continue;
        std::string note;
        auto set = generate_examples(rule, session.provider(), session.prompts(), n_per_side,
                                     seed, &note);
        if (!set) {
            std::cerr << "p2t: " << note << "\n";
            continue;
        }
        rows.push_back(example_set_to_json(*set));
    }
    std::sort(rows.begin(), rows.end(), [](const json& a, const json& b) {
        return a.at("rule_id").get<std::string>() < b.at("rule_id").get<std::string>();
    });
    jsonio::save_jsonl(out_path, rows);
}

void cmd_check(Session& session, const std::string& rules_path, const std::string& out_path,
               const std::string& condition_mode) {
    auto mode = condition_mode_from(condition_mode);
    if (!mode) throw InputError("condition mode must be ignore or strict");
    std::vector<Rule> rules = load_rules(rules_path);
    std::vector<Conflict> conflicts = find_conflicts(rules, *mode, session.miner().lexicons);
    json out = json::array();
    for (const auto& c : conflicts) out.push_back(conflict_to_json(c));
    jsonio::save_json(out_path, out);
}

void cmd_eval(Session& session, const std::string& pred_path, const std::string& gold_path,
              const std::string& report_path, int bootstrap_resamples, long seed) {
    std::vector<Rule> predicted = load_rules(pred_path);
    std::vector<GoldRecord> gold;
    bool has_labels = false;
    for (const auto& row : jsonio::load_rows(gold_path)) {
        gold.push_back(gold_from_json(row));
        if (!gold.back().annotator_labels.is_null()) has_labels = true;
    }
    MetricsReport metrics =
        evaluate(predicted, gold, session.provider(), bootstrap_resamples,
                 static_cast<unsigned long long>(seed));
    json out{{"metrics", metrics_to_json(metrics)}};
    if (has_labels) {
        AgreementReport agreement =
            compute_agreement(gold, bootstrap_resamples, static_cast<unsigned long long>(seed));
        out["agreement"] = agreement_to_json(agreement);
    } else {
        out["agreement"] = nullptr;
    }
    jsonio::save_json(report_path, out);
}

void cmd_casestudy(Session& session, const std::string& judgments_path,
                   const std::string& out_path) {
    std::map<std::string, std::vector<Judgment>> by_system;
    for (const auto& row : jsonio::load_rows(judgments_path)) {
        if (!row.is_object() || !row.contains("bucket") || !row.contains("violated")) {
            throw InputError("judgment rows need bucket and violated fields");
        }
        Judgment j;
        j.system = row.value("system", "default");
        j.bucket = row.at("bucket").get<std::string>();
        j.violated = row.at("violated").get<bool>();
        by_system[j.system].push_back(std::move(j));
    }
    if (by_system.empty()) throw InputError("no judgments in " + judgments_path);
    json systems = json::object();
    for (const auto& [system, judgments] : by_system) {
        BucketRates rates = case_study_rates(judgments);
        json entry = bucket_rates_to_json(rates);
        entry["prompts"] = judgments.size();
        systems[system] = std::move(entry);
    }
    jsonio::save_json(out_path, json{{"systems", systems}});
    (void)session;
}

// ---------------------------------------------------------------------------

namespace {

struct StageClock {
    json& wall_ms;
    std::string stage;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    ~StageClock() {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
        wall_ms[stage] = ms;
    }
};

int count_lines(const std::string& path) {
    return static_cast<int>(jsonio::load_jsonl(path).size());
}

std::string fmt(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

}  // namespace

json run_pipeline(Session& session, const json& run_config_in, bool force) {
    json run_config = jsonio::interpolate_env(run_config_in);
    if (!run_config.is_object() || !run_config.contains("documents")) {
        throw InputError("run config requires a documents array");
    }
    std::string out_dir = run_config.value("out_dir", "out");
    std::vector<long> seeds;
    for (const auto& s : run_config.value("seeds", json::array({1}))) {
        seeds.push_back(s.get<long>());
    }
    if (seeds.empty()) throw InputError("run config requires at least one seed");

    // Input digests: document bytes + the effective configuration.
    json inputs = json::object();
    for (const auto& doc : run_config.at("documents")) {
        std::string path = doc.at("path").get<std::string>();
        std::string doc_id = doc.value("doc_id", fs::path(path).stem().string());
        inputs[doc_id] = text::sha256_hex(jsonio::read_file(path));
    }
    std::string config_digest = text::sha256_hex(
        run_config.dump() + "\x1f" + session.config().provider.kind + "\x1f" +
        session.config().provider.model);

    fs::path manifest_path = fs::path(out_dir) / "manifest.json";
    if (!force && fs::exists(manifest_path)) {
        json existing = jsonio::load_json(manifest_path);
        if (existing.value("config_digest", "") == config_digest &&
            existing.value("inputs", json::object()) == inputs &&
            existing.value("complete", false)) {
            existing["skipped"] = true;
            return existing;
        }
    }

    json stages_cfg = run_config.value("stages", json::object());
    auto stage_on = [&](const char* name) { return stages_cfg.value(name, true); };
    json chunking = run_config.value("chunking", json::object());
    std::string strategy = chunking.value("strategy", "paragraph");
    int window_radius = chunking.value("window_radius", 1);
    double dedup_threshold = run_config.value("dedup_threshold", 0.90);
    int examples_n = run_config.value("examples_n", 5);
    int bootstrap = run_config.value("bootstrap", 1000);
    std::string condition_mode = run_config.value("condition_mode", "ignore");
    bool keep_gated = run_config.value("keep_gated", false);
    std::vector<std::string> trusted;
    for (const auto& t : run_config.value("gate", json::object())
                             .value("trusted_evidence", json::array())) {
        trusted.push_back(t.get<std::string>());
    }

    json manifest{{"version", 1},
                  {"config_digest", config_digest},
                  {"inputs", inputs},
                  {"out_dir", out_dir},
                  {"seeds", run_config.value("seeds", json::array({1}))},
                  {"documents", json::object()},
                  {"complete", false}};

    auto persist_manifest = [&] { jsonio::save_json(manifest_path, manifest); };

    try {
        for (const auto& doc : run_config.at("documents")) {
            std::string path = doc.at("path").get<std::string>();
            std::string format = doc.value("format", "md");
            std::string doc_id = doc.value("doc_id", fs::path(path).stem().string());
            std::string gold = doc.value("gold", "");
            json doc_entry{{"path", path}, {"seeds", json::object()}};

            for (long seed : seeds) {
                fs::path dir = fs::path(out_dir) / doc_id / std::to_string(seed);
                fs::create_directories(dir);
                json stages = json::object();
                json wall_ms = json::object();
                auto [tok_in_before, tok_out_before] = session.provider().token_totals();
                auto p = [&](const char* name) { return (dir / name).string(); };

                {
                    StageClock clock{wall_ms, "ingest"};
                    cmd_ingest(session, path, format, strategy, window_radius, p("spans.jsonl"),
                               doc_id);
                    stages["spans"] = p("spans.jsonl");
                }
                {
                    StageClock clock{wall_ms, "mine"};
                    json miner_cfg = run_config.value("miner", json::object());
                    cmd_mine(session, p("spans.jsonl"), p("clauses.jsonl"),
                             miner_cfg.value("bypass", false), miner_cfg.value("config", ""));
                    stages["clauses"] = p("clauses.jsonl");
                }
                {
                    StageClock clock{wall_ms, "extract"};
                    ExtractOptions opts;
                    opts.seed = seed;
                    opts.judge = stage_on("judge");
                    opts.gate = stage_on("gate");
                    opts.probe = stage_on("probe");
                    opts.keep_gated = keep_gated;
                    opts.trusted_evidence = trusted;
                    cmd_extract(session, p("clauses.jsonl"), p("rules.jsonl"), p("trace.jsonl"),
                                opts);
                    stages["rules"] = p("rules.jsonl");
                    stages["trace"] = p("trace.jsonl");
                }
                std::string current_rules = p("rules.jsonl");
                if (stage_on("dedup")) {
                    StageClock clock{wall_ms, "dedup"};
                    cmd_dedup(session, current_rules, p("rules.unique.jsonl"), p("dedup.json"),
                              dedup_threshold);
                    stages["unique"] = p("rules.unique.jsonl");
                    stages["dedup_report"] = p("dedup.json");
                    current_rules = p("rules.unique.jsonl");
                }
                if (stage_on("tag")) {
                    StageClock clock{wall_ms, "tag"};
                    cmd_tag(session, current_rules, p("rules.tagged.jsonl"));
                    stages["tagged"] = p("rules.tagged.jsonl");
                    current_rules = p("rules.tagged.jsonl");
                }
                if (stage_on("examples")) {
                    StageClock clock{wall_ms, "examples"};
                    cmd_examples(session, current_rules, p("examples.jsonl"), examples_n, seed);
                    stages["examples"] = p("examples.jsonl");
                }
                if (stage_on("check")) {
                    StageClock clock{wall_ms, "check"};
                    cmd_check(session, current_rules, p("conflicts.json"), condition_mode);
                    stages["conflicts"] = p("conflicts.json");
                }
                if (!gold.empty()) {
                    StageClock clock{wall_ms, "eval"};
                    cmd_eval(session, current_rules, gold, p("report.json"), bootstrap, seed);
                    stages["eval"] = p("report.json");
                }
                stages["final_rules"] = current_rules;
                json seed_entry{{"stages", stages}, {"wall_ms", wall_ms}};
                auto [tok_in, tok_out] = session.provider().token_totals();
                seed_entry["tokens"] = json{{"input", tok_in - tok_in_before},
                                            {"output", tok_out - tok_out_before}};
                doc_entry["seeds"][std::to_string(seed)] = std::move(seed_entry);
            }
            manifest["documents"][doc_id] = std::move(doc_entry);
        }
    } catch (...) {
        persist_manifest();  // keep the partial manifest for debugging
        throw;
    }

    std::string csv = report_csv(manifest);
    fs::path csv_path = fs::path(out_dir) / "summary.csv";
    jsonio::write_file(csv_path, csv);
    manifest["summary_csv"] = csv_path.string();
    manifest["complete"] = true;
    persist_manifest();
    return manifest;
}

std::string report_csv(const json& manifest) {
    std::string csv =
        "doc,seed,cand,ext,uniq,test_pct,ex_io,coverage,test_acc,span_f1,span_auprc,"
        "se_slot_similarity,evidence_similarity\n";
    if (!manifest.contains("documents")) return csv;
    for (const auto& [doc_id, doc_entry] : manifest.at("documents").items()) {
        if (!doc_entry.contains("seeds")) continue;
        for (const auto& [seed, entry] : doc_entry.at("seeds").items()) {
            const json& stages = entry.value("stages", json::object());
            std::string cand, ext, uniq, test_pct, ex_io;
            std::string coverage_s, test_acc_s, f1_s, auprc_s, se_s, ev_s;
            if (stages.contains("clauses")) {
                cand = std::to_string(count_lines(stages.at("clauses").get<std::string>()));
            }
            if (stages.contains("rules")) {
                ext = std::to_string(count_lines(stages.at("rules").get<std::string>()));
            }
            if (stages.contains("unique")) {
                uniq = std::to_string(count_lines(stages.at("unique").get<std::string>()));
            }
            std::string final_rules =
                stages.contains("final_rules") ? stages.at("final_rules").get<std::string>()
                                               : "";
            if (!final_rules.empty()) {
                auto rows = jsonio::load_jsonl(final_rules);
                int testable = 0;
                for (const auto& row : rows) {
                    if (row.value("is_testable", false)) ++testable;
                }
                if (!rows.empty()) {
                    test_pct = fmt(100.0 * testable / static_cast<double>(rows.size()), 1);
                }
            }
            if (stages.contains("examples")) {
                ex_io = std::to_string(count_lines(stages.at("examples").get<std::string>()));
            }
            if (stages.contains("eval")) {
                json report = jsonio::load_json(stages.at("eval").get<std::string>());
                const json& m = report.value("metrics", json::object());
                if (m.contains("coverage")) coverage_s = fmt(m.at("coverage").get<double>(), 2);
                if (m.contains("test_acc") && !m.at("test_acc").is_null()) {
                    test_acc_s = fmt(m.at("test_acc").get<double>(), 2);
                }
                if (m.contains("span_f1")) f1_s = fmt(m.at("span_f1").get<double>(), 2);
                if (m.contains("span_auprc")) auprc_s = fmt(m.at("span_auprc").get<double>(), 2);
                if (m.contains("se_slot_similarity")) {
                    se_s = fmt(m.at("se_slot_similarity").get<double>(), 4);
                }
                if (m.contains("evidence_similarity")) {
                    ev_s = fmt(m.at("evidence_similarity").get<double>(), 4);
                }
            }
            csv += doc_id + "," + seed + "," + cand + "," + ext + "," + uniq + "," + test_pct +
                   "," + ex_io + "," + coverage_s + "," + test_acc_s + "," + f1_s + "," +
                   auprc_s + "," + se_s + "," + ev_s + "\n";
        }
    }
    return csv;
}

}  // namespace p2t::pipeline
