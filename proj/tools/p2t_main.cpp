// p2t: compiles natural-language policy documents into machine-readable rules.
// The CLI is a thin shell over the C API in p2t/p2t.h.

#include <p2t/p2t.h>

#include <CLI11.hpp>

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

std::string read_file_or_die(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "p2t: cannot read " << path << "\n";
        std::exit(1);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

int finish(p2t_session* session, p2t_status status) {
    if (status != P2T_OK) {
        std::cerr << "p2t: " << p2t_session_last_error(session) << "\n";
    }
    p2t_session_destroy(session);
    return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"p2t - policy documents to machine-readable rules"};
    app.require_subcommand(1);

    std::string session_config_path;
    std::string prompts_dir, vocab_path, miner_config, rubric_path, few_shot;
    bool offline = false;
    app.add_option("--session-config", session_config_path,
                   "session config JSON file (provider, prompts, vocab, ...)");
    app.add_option("--prompts", prompts_dir, "prompt template directory");
    app.add_option("--vocab", vocab_path, "scope vocabulary JSON file");
    app.add_option("--miner-config", miner_config, "clause miner config JSON file");
    app.add_option("--rubric", rubric_path, "testability rubric JSON file");
    app.add_option("--few-shot", few_shot, "few-shot example JSON file for extraction");
    app.add_flag("--offline", offline, "force the deterministic fallback provider");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "split a policy document into spans");
    std::string in_path, out_path, format = "md", strategy = "paragraph";
    int window_radius = 1;
    ingest->add_option("--in", in_path)->required();
    ingest->add_option("--format", format, "md|txt");
    ingest->add_option("--strategy", strategy, "paragraph|sentence|window");
    ingest->add_option("--window-radius", window_radius);
    ingest->add_option("--out", out_path)->required();

    // mine
    auto* mine = app.add_subcommand("mine", "filter spans to candidate clauses");
    std::string mine_in, mine_out;
    bool bypass = false;
    std::string mine_config;
    mine->add_option("--in", mine_in)->required();
    mine->add_option("--out", mine_out)->required();
    mine->add_option("--config", mine_config, "miner config JSON for this invocation");
    mine->add_flag("--bypass", bypass, "pass every span through unfiltered");

    // extract
    auto* extract = app.add_subcommand("extract", "schema-guarded rule extraction");
    std::string ex_in, ex_out, ex_trace;
    long seed = 1;
    std::string judge_mode = "on", gate_mode = "on", probe_mode = "on";
    bool keep_gated = false;
    extract->add_option("--in", ex_in)->required();
    extract->add_option("--out", ex_out)->required();
    extract->add_option("--trace", ex_trace)->required();
    extract->add_option("--seed", seed);
    extract->add_option("--judge", judge_mode, "on|off");
    extract->add_option("--gate", gate_mode, "on|off");
    extract->add_option("--probe", probe_mode, "on|off");
    extract->add_flag("--keep-gated", keep_gated, "retain gate-failed rules in the output");

    // dedup
    auto* dedupc = app.add_subcommand("dedup", "structural + semantic de-duplication");
    std::string dd_in, dd_out, dd_report;
    double threshold = 0.90;
    dedupc->add_option("--in", dd_in)->required();
    dedupc->add_option("--out", dd_out)->required();
    dedupc->add_option("--report", dd_report);
    dedupc->add_option("--threshold", threshold);

    // tag
    auto* tag = app.add_subcommand("tag", "testability tagging");
    std::string tag_in, tag_out;
    tag->add_option("--in", tag_in)->required();
    tag->add_option("--out", tag_out)->required();

    // examples
    auto* examples = app.add_subcommand("examples", "benign/adversarial example generation");
    std::string exm_in, exm_out;
    int n_per_side = 5;
    long exm_seed = 1;
    examples->add_option("--in", exm_in)->required();
    examples->add_option("--out", exm_out)->required();
    examples->add_option("--n", n_per_side);
    examples->add_option("--seed", exm_seed);

    // check
    auto* check = app.add_subcommand("check", "scope/polarity contradiction detection");
    std::string chk_in, chk_out, condition_mode = "ignore";
    check->add_option("--in", chk_in)->required();
    check->add_option("--out", chk_out)->required();
    check->add_option("--condition-mode", condition_mode, "ignore|strict");

    // eval
    auto* eval = app.add_subcommand("eval", "score predictions against a gold set");
    std::string ev_pred, ev_gold, ev_out;
    int bootstrap = 1000;
    long ev_seed = 1;
    eval->add_option("--pred", ev_pred)->required();
    eval->add_option("--gold", ev_gold)->required();
    eval->add_option("--out", ev_out)->required();
    eval->add_option("--bootstrap", bootstrap);
    eval->add_option("--seed", ev_seed);

    // casestudy
    auto* casestudy = app.add_subcommand("casestudy", "violation rates by prompt bucket");
    std::string cs_judgments, cs_out;
    casestudy->add_option("--judgments", cs_judgments)->required();
    casestudy->add_option("--out", cs_out)->required();

    // run
    auto* run = app.add_subcommand("run", "full pipeline from a run-config file");
    std::string run_config_path;
    bool force = false;
    run->add_option("--config", run_config_path)->required();
    run->add_flag("--force", force, "rerun even when inputs and seeds are unchanged");

    // report
    auto* report = app.add_subcommand("report", "summary table from a run manifest");
    std::string rp_manifest, rp_csv;
    report->add_option("--manifest", rp_manifest)->required();
    report->add_option("--csv", rp_csv, "also write the table to this CSV file");

    // validate
    auto* validate = app.add_subcommand("validate", "validate one rule JSON file");
    std::string val_in;
    validate->add_option("--in", val_in)->required();

    CLI11_PARSE(app, argc, argv);

    std::string session_config;
    if (!session_config_path.empty()) {
        session_config = read_file_or_die(session_config_path);
    } else {
        std::string body;
        auto add = [&](const std::string& key, const std::string& value) {
            if (value.empty()) return;
            if (!body.empty()) body += ",";
            body += "\"" + key + "\":\"" + json_escape(value) + "\"";
        };
        add("prompts_dir", prompts_dir);
        add("vocab", vocab_path);
        add("miner_config", miner_config);
        add("rubric", rubric_path);
        add("few_shot", few_shot);
        if (offline) {
            if (!body.empty()) body += ",";
            body += "\"offline\":true";
        }
        session_config = "{" + body + "}";
    }

    p2t_session* session = p2t_session_create(session_config.c_str());
    if (!session) {
        std::cerr << "p2t: out of memory\n";
        return 3;
    }
    if (!p2t_session_ok(session)) {
        std::cerr << "p2t: " << p2t_session_last_error(session) << "\n";
        p2t_session_destroy(session);
        return 1;
    }

    if (*ingest) {
        return finish(session, p2t_ingest(session, in_path.c_str(), format.c_str(),
                                          strategy.c_str(), window_radius, out_path.c_str()));
    }
    if (*mine) {
        return finish(session, p2t_mine(session, mine_in.c_str(), mine_out.c_str(),
                                        bypass ? 1 : 0, mine_config.c_str()));
    }
    if (*extract) {
        return finish(session, p2t_extract(session, ex_in.c_str(), ex_out.c_str(),
                                           ex_trace.c_str(), seed, judge_mode != "off",
                                           gate_mode != "off", probe_mode != "off",
                                           keep_gated ? 1 : 0));
    }
    if (*dedupc) {
        return finish(session, p2t_dedup(session, dd_in.c_str(), dd_out.c_str(),
                                         dd_report.c_str(), threshold));
    }
    if (*tag) {
        return finish(session, p2t_tag(session, tag_in.c_str(), tag_out.c_str()));
    }
    if (*examples) {
        return finish(session, p2t_examples(session, exm_in.c_str(), exm_out.c_str(),
                                            n_per_side, exm_seed));
    }
    if (*check) {
        return finish(session, p2t_check(session, chk_in.c_str(), chk_out.c_str(),
                                         condition_mode.c_str()));
    }
    if (*eval) {
        return finish(session, p2t_eval(session, ev_pred.c_str(), ev_gold.c_str(),
                                        ev_out.c_str(), bootstrap, ev_seed));
    }
    if (*casestudy) {
        return finish(session, p2t_casestudy(session, cs_judgments.c_str(), cs_out.c_str()));
    }
    if (*run) {
        std::string cfg = read_file_or_die(run_config_path);
        p2t_status status = p2t_run(session, cfg.c_str(), force ? 1 : 0);
        if (status == P2T_OK) {
            std::cout << "manifest: " << p2t_session_last_manifest(session) << "\n";
        }
        return finish(session, status);
    }
    if (*report) {
        std::string target = rp_csv;
        bool is_temp = false;
        char tmp[] = "/tmp/p2t_report_XXXXXX";
        if (target.empty()) {
            int fd = mkstemp(tmp);
            if (fd >= 0) {
                close(fd);
                target = tmp;
                is_temp = true;
            }
        }
        p2t_status status = p2t_report(session, rp_manifest.c_str(), target.c_str());
        if (status == P2T_OK && !target.empty()) {
            std::cout << read_file_or_die(target);
        }
        if (is_temp) std::remove(tmp);
        return finish(session, status);
    }
    if (*validate) {
        std::string rule = read_file_or_die(val_in);
        char* result = nullptr;
        p2t_status status = p2t_validate_rule(session, rule.c_str(), &result);
        if (status == P2T_OK && result) {
            std::cout << result << "\n";
            p2t_string_free(result);
        }
        return finish(session, status);
    }

    p2t_session_destroy(session);
    return 1;
}
