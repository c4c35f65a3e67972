#include "p2t/p2t.h"

#include "p2t/dsl.hpp"
#include "p2t/errors.hpp"
#include "p2t/pipeline.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

using p2t::InputError;
using p2t::ProviderError;
using p2t::jsonio::json;

struct p2t_session {
    std::unique_ptr<p2t::pipeline::Session> impl;
    std::string last_error;
    std::string last_manifest;
};

namespace {

p2t_status guard(p2t_session* session, const std::function<void()>& body) {
    if (!session) return P2T_ERR_INPUT;
    if (!session->impl) {
        session->last_error = "session failed to initialize: " + session->last_error;
        return P2T_ERR_INPUT;
    }
    try {
        session->last_error.clear();
        body();
        return P2T_OK;
    } catch (const InputError& e) {
        session->last_error = e.what();
        return P2T_ERR_INPUT;
    } catch (const ProviderError& e) {
        session->last_error = e.what();
        return P2T_ERR_PROVIDER;
    } catch (const std::exception& e) {
        session->last_error = e.what();
        return P2T_ERR_INTERNAL;
    } catch (...) {
        session->last_error = "unknown internal error";
        return P2T_ERR_INTERNAL;
    }
}

std::string arg(const char* s) { return s ? std::string(s) : std::string(); }

}  // namespace

extern "C" {

const char* p2t_version(void) { return "0.1.0"; }

p2t_session* p2t_session_create(const char* config_json) {
    auto* session = new (std::nothrow) p2t_session();
    if (!session) return nullptr;
    try {
        json cfg = json::object();
        if (config_json && *config_json) {
            cfg = p2t::jsonio::parse(config_json, "session config");
        }
        session->impl = std::make_unique<p2t::pipeline::Session>(
            p2t::pipeline::SessionConfig::from_json(cfg));
    } catch (const std::exception& e) {
        session->last_error = e.what();
    }
    return session;
}

void p2t_session_destroy(p2t_session* session) { delete session; }

int p2t_session_ok(const p2t_session* session) {
    return session && session->impl ? 1 : 0;
}

const char* p2t_session_last_error(const p2t_session* session) {
    return session ? session->last_error.c_str() : "null session";
}

const char* p2t_session_last_manifest(const p2t_session* session) {
    return session ? session->last_manifest.c_str() : "";
}

p2t_status p2t_ingest(p2t_session* session, const char* in_path, const char* format,
                      const char* strategy, int window_radius, const char* out_path) {
    return guard(session, [&] {
        p2t::pipeline::cmd_ingest(*session->impl, arg(in_path), arg(format), arg(strategy),
                                  window_radius, arg(out_path));
    });
}

p2t_status p2t_mine(p2t_session* session, const char* spans_path, const char* out_path,
                    int bypass, const char* miner_config_path) {
    return guard(session, [&] {
        p2t::pipeline::cmd_mine(*session->impl, arg(spans_path), arg(out_path), bypass != 0,
                                arg(miner_config_path));
    });
}

p2t_status p2t_extract(p2t_session* session, const char* clauses_path, const char* rules_out,
                       const char* trace_out, long seed, int judge_on, int gate_on,
                       int probe_on, int keep_gated) {
    return guard(session, [&] {
        p2t::pipeline::ExtractOptions opts;
        opts.seed = seed;
        opts.judge = judge_on != 0;
        opts.gate = gate_on != 0;
        opts.probe = probe_on != 0;
        opts.keep_gated = keep_gated != 0;
        p2t::pipeline::cmd_extract(*session->impl, arg(clauses_path), arg(rules_out),
                                   arg(trace_out), opts);
    });
}

p2t_status p2t_dedup(p2t_session* session, const char* rules_path, const char* out_path,
                     const char* report_path, double threshold) {
    return guard(session, [&] {
        p2t::pipeline::cmd_dedup(*session->impl, arg(rules_path), arg(out_path),
                                 arg(report_path), threshold);
    });
}

p2t_status p2t_tag(p2t_session* session, const char* rules_path, const char* out_path) {
    return guard(session, [&] {
        p2t::pipeline::cmd_tag(*session->impl, arg(rules_path), arg(out_path));
    });
}

p2t_status p2t_examples(p2t_session* session, const char* rules_path, const char* out_path,
                        int n_per_side, long seed) {
    return guard(session, [&] {
        p2t::pipeline::cmd_examples(*session->impl, arg(rules_path), arg(out_path), n_per_side,
                                    seed);
    });
}

p2t_status p2t_check(p2t_session* session, const char* rules_path, const char* out_path,
                     const char* condition_mode) {
    return guard(session, [&] {
        p2t::pipeline::cmd_check(*session->impl, arg(rules_path), arg(out_path),
                                 arg(condition_mode));
    });
}

p2t_status p2t_eval(p2t_session* session, const char* pred_path, const char* gold_path,
                    const char* report_path, int bootstrap_resamples, long seed) {
    return guard(session, [&] {
        p2t::pipeline::cmd_eval(*session->impl, arg(pred_path), arg(gold_path),
                                arg(report_path), bootstrap_resamples, seed);
    });
}

p2t_status p2t_casestudy(p2t_session* session, const char* judgments_path,
                         const char* out_path) {
    return guard(session, [&] {
        p2t::pipeline::cmd_casestudy(*session->impl, arg(judgments_path), arg(out_path));
    });
}

p2t_status p2t_run(p2t_session* session, const char* run_config_json, int force) {
    return guard(session, [&] {
        json cfg = p2t::jsonio::parse(arg(run_config_json), "run config");
        json manifest = p2t::pipeline::run_pipeline(*session->impl, cfg, force != 0);
        session->last_manifest =
            (std::filesystem::path(manifest.value("out_dir", "out")) / "manifest.json")
                .string();
    });
}

p2t_status p2t_report(p2t_session* session, const char* manifest_path, const char* csv_out) {
    return guard(session, [&] {
        json manifest = p2t::jsonio::load_json(arg(manifest_path));
        std::string csv = p2t::pipeline::report_csv(manifest);
        if (csv_out && *csv_out) p2t::jsonio::write_file(csv_out, csv);
    });
}

p2t_status p2t_validate_rule(p2t_session* session, const char* rule_json,
                             char** result_json_out) {
    return guard(session, [&] {
        if (!result_json_out) throw InputError("result_json_out must not be null");
        json candidate = p2t::jsonio::parse(arg(rule_json), "rule");
        p2t::ValidationResult result = p2t::validate_rule(candidate);
        json violations = json::array();
        for (const auto& v : result.violations) {
            violations.push_back({{"path", v.path},
                                  {"kind", p2t::violation_kind_name(v.kind)},
                                  {"detail", v.detail}});
        }
        std::string text = json{{"ok", result.ok()}, {"violations", violations}}.dump();
        *result_json_out = static_cast<char*>(std::malloc(text.size() + 1));
        if (!*result_json_out) throw std::bad_alloc();
        std::memcpy(*result_json_out, text.c_str(), text.size() + 1);
    });
}

void p2t_string_free(char* s) { std::free(s); }

}  // extern "C"
