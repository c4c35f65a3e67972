#pragma once

#include "p2t/jsonio.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace p2t {

using jsonio::json;

enum class TaskTag { extract, judge, repair, testability, examples, similarity, paraphrase };

std::string task_tag_name(TaskTag t);

struct TextRequest {
    TaskTag task_tag = TaskTag::extract;
    std::string prompt;
    std::optional<json> schema_hint;
    double temperature = 0.0;
    long seed = 0;
    /// Structured data the prompt was rendered from; deterministic offline
    /// backends act on this instead of re-parsing prose.
    json payload = json::object();
};

struct TextResponse {
    std::string text;
    int input_tokens = 0;
    int output_tokens = 0;
    std::string provider_id;
    bool cached = false;
};

struct ProviderConfig {
    std::string kind = "fallback";  // remote | stub | fallback
    std::string endpoint;
    std::string model;
    std::string api_key_env = "P2T_API_KEY";
    std::string embed_endpoint;
    std::string embed_model;
    double temperature = 0.0;
    int parallelism = 4;
    std::string cache_dir;
    std::string stub_fixtures;     // stub kind: canned response file
    bool stub_fallthrough = false; // stub kind: delegate misses to fallback logic
    int max_attempts = 3;
    int backoff_ms = 250;
    std::size_t max_response_bytes = 1 << 20;

    static ProviderConfig from_json(const json& value);
};

// ---------------------------------------------------------------------------
// Prompt templates

/// Named text templates with {placeholder} substitution. Ships built in and
/// can be overridden per file from a prompts directory.
class PromptLibrary {
public:
    static PromptLibrary builtin();
    static PromptLibrary from_dir(const std::filesystem::path& dir);

    std::string render(TaskTag tag, const std::map<std::string, std::string>& vars) const;
    std::string render_named(const std::string& name,
                             const std::map<std::string, std::string>& vars) const;
    const std::string& raw(const std::string& name) const;

private:
    std::map<std::string, std::string> templates_;
};

// ---------------------------------------------------------------------------
// Backends

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    virtual TextResponse generate(const TextRequest& request) = 0;
};

/// Deterministic embedding shared by every backend that has no embedding
/// endpoint: token -> bucket by stable hash mod dim, counts, L2-normalized.
std::vector<double> hashed_bag_embedding(const std::string& text, int dim = 256);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------

/// Cache + concurrency wrapper around a backend chosen by config.
class Provider {
public:
    explicit Provider(ProviderConfig config);
    ~Provider();

    Provider(const Provider&) = delete;
    Provider& operator=(const Provider&) = delete;

    /// Generates text; identical (provider, prompt, temperature, seed)
    /// requests are served from the cache byte-identically.
    TextResponse generate(const TextRequest& request);

    /// Fixed-dimension unit-norm vector; throws InputError on empty text.
    std::vector<double> embed(const std::string& text);

    /// [0,1] similarity: generative backends are prompted with the similarity
    /// template and the first in-range decimal is used; any failure falls back
    /// to token Jaccard. Empty-vs-empty is 1.0, empty-vs-non-empty 0.0.
    double score_similarity(const std::string& text_a, const std::string& text_b);

    const ProviderConfig& config() const { return config_; }
    std::string id() const;

    void set_prompts(const PromptLibrary* prompts) { prompts_ = prompts; }

    /// Cumulative (input, output) token counts of fresh backend calls.
    std::pair<long long, long long> token_totals() const;

private:
    ProviderConfig config_;
    std::unique_ptr<Backend> backend_;
    const PromptLibrary* prompts_ = nullptr;
    std::atomic<long long> tokens_in_{0};
    std::atomic<long long> tokens_out_{0};

    std::shared_mutex cache_mutex_;
    std::map<std::string, TextResponse> cache_;

    struct Slots;
    std::unique_ptr<Slots> slots_;  // bounds concurrent backend calls
};

/// First decimal number within [0,1] in `text`, if any.
std::optional<double> parse_similarity_score(const std::string& text);

}  // namespace p2t
