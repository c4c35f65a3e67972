#pragma once

#include "p2t/dsl.hpp"
#include "p2t/extract.hpp"
#include "p2t/miner.hpp"
#include "p2t/providers.hpp"
#include "p2t/rubric.hpp"

#include <memory>
#include <string>

namespace p2t::pipeline {

using jsonio::json;

struct SessionConfig {
    ProviderConfig provider;
    std::string prompts_dir;        // empty -> built-in templates
    std::string vocab_path;         // empty -> identity vocabulary
    std::string miner_config_path;  // empty -> defaults
    std::string rubric_path;        // empty -> defaults
    std::string few_shot_path;      // empty -> built-in examples
    bool offline = false;           // force the fallback backend

    static SessionConfig from_json(const json& value);
};

/// Materialized configuration shared by every stage command.
class Session {
public:
    explicit Session(SessionConfig config);

    Provider& provider() { return *provider_; }
    const PromptLibrary& prompts() const { return prompts_; }
    const ScopeVocabulary& vocab() const { return vocab_; }
    const MinerConfig& miner() const { return miner_; }
    const TestabilityRubric& rubric() const { return rubric_; }
    const SessionConfig& config() const { return config_; }

private:
    SessionConfig config_;
    PromptLibrary prompts_;
    ScopeVocabulary vocab_;
    MinerConfig miner_;
    TestabilityRubric rubric_;
    std::unique_ptr<Provider> provider_;
};

// Stage commands; all read and write files named by the caller.

void cmd_ingest(Session& session, const std::string& in_path, const std::string& format,
                const std::string& strategy, int window_radius, const std::string& out_path,
                const std::string& doc_id = "");

/// config_path, when non-empty, overrides the session miner configuration.
void cmd_mine(Session& session, const std::string& spans_path, const std::string& out_path,
              bool bypass, const std::string& config_path = "");

struct ExtractOptions {
    long seed = 1;
    bool judge = true;
    bool gate = true;
    bool probe = true;
    bool keep_gated = false;
    std::vector<std::string> trusted_evidence;
};
void cmd_extract(Session& session, const std::string& clauses_path,
                 const std::string& rules_out, const std::string& trace_out,
                 const ExtractOptions& options);

void cmd_dedup(Session& session, const std::string& rules_path, const std::string& out_path,
               const std::string& report_path, double threshold);

void cmd_tag(Session& session, const std::string& rules_path, const std::string& out_path);

void cmd_examples(Session& session, const std::string& rules_path, const std::string& out_path,
                  int n_per_side, long seed);

void cmd_check(Session& session, const std::string& rules_path, const std::string& out_path,
               const std::string& condition_mode);

void cmd_eval(Session& session, const std::string& pred_path, const std::string& gold_path,
              const std::string& report_path, int bootstrap_resamples, long seed);

void cmd_casestudy(Session& session, const std::string& judgments_path,
                   const std::string& out_path);

/// Full pipeline per (document, seed); artifacts land under
/// out_dir/{doc_id}/{seed}/. Returns the manifest (also written to
/// out_dir/manifest.json). Reruns on identical inputs+seeds are skipped
/// unless force.
json run_pipeline(Session& session, const json& run_config, bool force);

/// Summary table (one row per document+seed) rebuilt from manifest artifacts.
std::string report_csv(const json& manifest);

}  // namespace p2t::pipeline
