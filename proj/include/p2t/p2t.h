/* C API for the policy-to-rules pipeline library.
 *
 * All functions are thread-compatible (one session per thread, or external
 * locking); strings are UTF-8; paths are filesystem paths. Functions return
 * P2T_OK on success; on failure the session keeps a human-readable message
 * retrievable with p2t_session_last_error().
 */
#ifndef P2T_H
#define P2T_H

#ifndef P2T_API
#if defined(_WIN32) || defined(_WIN64)
#define P2T_API __declspec(dllexport)
#else
#define P2T_API __attribute__((visibility("default")))
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct p2t_session p2t_session;

typedef enum {
    P2T_OK = 0,
    P2T_ERR_INPUT = 1,    /* unreadable/malformed input or bad arguments */
    P2T_ERR_PROVIDER = 2, /* backend failure after retries, auth, size cap */
    P2T_ERR_INTERNAL = 3, /* everything else */
} p2t_status;

P2T_API const char* p2t_version(void);

/* config_json may be NULL for defaults. Keys: provider {kind, endpoint, model,
 * temperature, parallelism, cache_dir, stub_fixtures, ...}, prompts_dir,
 * vocab, miner_config, rubric, few_shot, offline. ${ENV} interpolation is
 * applied to string values. Returns NULL only on allocation failure; a config
 * error is reported by p2t_session_last_error on the returned session and the
 * session is unusable for stage calls. Use p2t_session_ok to check. */
P2T_API p2t_session* p2t_session_create(const char* config_json);
P2T_API void p2t_session_destroy(p2t_session* session);
P2T_API int p2t_session_ok(const p2t_session* session);
P2T_API const char* p2t_session_last_error(const p2t_session* session);

/* Stage commands; each reads and writes the named files. */
P2T_API p2t_status p2t_ingest(p2t_session* session, const char* in_path, const char* format,
                      const char* strategy, int window_radius, const char* out_path);
P2T_API p2t_status p2t_mine(p2t_session* session, const char* spans_path, const char* out_path,
                            int bypass, const char* miner_config_path /* nullable */);
P2T_API p2t_status p2t_extract(p2t_session* session, const char* clauses_path, const char* rules_out,
                       const char* trace_out, long seed, int judge_on, int gate_on,
                       int probe_on, int keep_gated);
P2T_API p2t_status p2t_dedup(p2t_session* session, const char* rules_path, const char* out_path,
                     const char* report_path, double threshold);
P2T_API p2t_status p2t_tag(p2t_session* session, const char* rules_path, const char* out_path);
P2T_API p2t_status p2t_examples(p2t_session* session, const char* rules_path, const char* out_path,
                        int n_per_side, long seed);
P2T_API p2t_status p2t_check(p2t_session* session, const char* rules_path, const char* out_path,
                     const char* condition_mode);
P2T_API p2t_status p2t_eval(p2t_session* session, const char* pred_path, const char* gold_path,
                    const char* report_path, int bootstrap_resamples, long seed);
P2T_API p2t_status p2t_casestudy(p2t_session* session, const char* judgments_path,
                         const char* out_path);

/* Full pipeline run from a run-config JSON document (text, not a path).
 * The manifest lands at <out_dir>/manifest.json; its path is returned by
 * p2t_session_last_manifest until the next call. */
P2T_API p2t_status p2t_run(p2t_session* session, const char* run_config_json, int force);
P2T_API const char* p2t_session_last_manifest(const p2t_session* session);

/* Rebuilds the summary table from a manifest; writes CSV to csv_out. */
P2T_API p2t_status p2t_report(p2t_session* session, const char* manifest_path, const char* csv_out);

/* Validates one rule JSON document. Fills *result_json_out with
 * {"ok": bool, "violations": [{path, kind, detail}]}; free the string with
 * p2t_string_free. */
P2T_API p2t_status p2t_validate_rule(p2t_session* session, const char* rule_json,
                             char** result_json_out);
P2T_API void p2t_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* P2T_H */
