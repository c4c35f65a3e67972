// Exercises the shared-library C API surface only (no core headers).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <p2t/p2t.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("p2t_capi_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string fixture(const std::string& rel) {
    return std::string(P2T_SOURCE_DIR) + "/fixtures/" + rel;
}

struct Session {
    p2t_session* s;
    explicit Session(const char* cfg = "{\"offline\": true}") : s(p2t_session_create(cfg)) {}
    ~Session() { p2t_session_destroy(s); }
    operator p2t_session*() const { return s; }
};

}  // namespace

TEST_CASE("version and session lifecycle") {
    CHECK(std::string(p2t_version()) == "0.1.0");
    Session session;
    REQUIRE(session.s != nullptr);
    CHECK(p2t_session_ok(session) == 1);
    CHECK(std::string(p2t_session_last_error(session)).empty());
}

TEST_CASE("a broken session config is reported, not fatal") {
    p2t_session* s = p2t_session_create("{\"provider\": {\"kind\": \"quantum\"}}");
    REQUIRE(s != nullptr);
    CHECK(p2t_session_ok(s) == 0);
    CHECK(std::string(p2t_session_last_error(s)).find("provider.kind") != std::string::npos);
    // stage calls fail cleanly on an unusable session
    CHECK(p2t_ingest(s, "x", "md", "paragraph", 1, "y") == P2T_ERR_INPUT);
    p2t_session_destroy(s);
}

TEST_CASE("ingest-mine-extract through the C API") {
    TempDir tmp;
    Session session;
    spit(tmp.file("doc.md"),
         "## Section 1\n\nProviders shall log every disclosure of records.\n\n"
         "'Term' means a definition.\n");
    REQUIRE(p2t_ingest(session, tmp.file("doc.md").c_str(), "md", "paragraph", 1,
                       tmp.file("spans.jsonl").c_str()) == P2T_OK);
    REQUIRE(p2t_mine(session, tmp.file("spans.jsonl").c_str(),
                     tmp.file("clauses.jsonl").c_str(), 0, nullptr) == P2T_OK);
    REQUIRE(p2t_extract(session, tmp.file("clauses.jsonl").c_str(),
                        tmp.file("rules.jsonl").c_str(), tmp.file("trace.jsonl").c_str(), 1,
                        1, 1, 1, 0) == P2T_OK);
    std::string rules = slurp(tmp.file("rules.jsonl"));
    CHECK(rules.find("Providers shall log") != std::string::npos);

    REQUIRE(p2t_dedup(session, tmp.file("rules.jsonl").c_str(),
                      tmp.file("unique.jsonl").c_str(), tmp.file("dedup.json").c_str(),
                      0.9) == P2T_OK);
    REQUIRE(p2t_tag(session, tmp.file("unique.jsonl").c_str(),
                    tmp.file("tagged.jsonl").c_str()) == P2T_OK);
    REQUIRE(p2t_examples(session, tmp.file("tagged.jsonl").c_str(),
                         tmp.file("examples.jsonl").c_str(), 2, 1) == P2T_OK);
    REQUIRE(p2t_check(session, tmp.file("tagged.jsonl").c_str(),
                      tmp.file("conflicts.json").c_str(), "ignore") == P2T_OK);
}

TEST_CASE("error codes map input and provider failures") {
    TempDir tmp;
    Session session;
    CHECK(p2t_ingest(session, tmp.file("missing.md").c_str(), "md", "paragraph", 1,
                     tmp.file("out.jsonl").c_str()) == P2T_ERR_INPUT);
    CHECK(std::string(p2t_session_last_error(session)).find("missing.md") !=
          std::string::npos);

    // a stub provider with no fixtures -> provider error surfaces as status 2
    spit(tmp.file("stub.json"), "{\"entries\": []}");
    spit(tmp.file("clauses.jsonl"), "");
    std::string cfg = std::string("{\"provider\": {\"kind\": \"stub\", \"stub_fixtures\": \"") +
                      tmp.file("stub.json") + "\"}}";
    p2t_session* stub = p2t_session_create(cfg.c_str());
    REQUIRE(p2t_session_ok(stub) == 1);
    spit(tmp.file("one_clause.jsonl"),
         "{\"span\": {\"span_id\": \"d:000:000\", \"doc_id\": \"d\", \"section_path\": \"S\","
         " \"citation\": \"S ¶1\", \"text\": \"Providers shall log.\", \"kind\": \"paragraph\"},"
         " \"clause_type\": \"obligation\", \"markers\": [], \"deadlines\": [],"
         " \"thresholds\": [], \"cross_refs\": [], \"score\": 3.0}\n");
    // extract tolerates per-clause provider failure (trace records it), so use
    // eval's similarity path... simpler: casestudy on a malformed file is input error
    CHECK(p2t_extract(stub, tmp.file("one_clause.jsonl").c_str(),
                      tmp.file("r.jsonl").c_str(), tmp.file("t.jsonl").c_str(), 1, 0, 0, 0,
                      0) == P2T_OK);
    std::string trace = slurp(tmp.file("t.jsonl"));
    CHECK(trace.find("provider failure") != std::string::npos);
    p2t_session_destroy(stub);
}

TEST_CASE("validate_rule over the C boundary") {
    Session session;
    char* out = nullptr;
    REQUIRE(p2t_validate_rule(session,
                              "{\"rule_id\": \"r\", \"requirement\": \"x\"}",
                              &out) == P2T_OK);
    REQUIRE(out != nullptr);
    std::string result(out);
    p2t_string_free(out);
    CHECK(result.find("\"ok\":false") != std::string::npos);
    CHECK(result.find("$.source") != std::string::npos);

    CHECK(p2t_validate_rule(session, "not json", &out) == P2T_ERR_INPUT);
}

TEST_CASE("run and report through the C API") {
    TempDir tmp;
    Session session;
    std::string cfg = std::string("{\"documents\": [{\"path\": \"") +
                      fixture("corpus/acme_rai_standard.txt") +
                      "\", \"format\": \"txt\", \"doc_id\": \"acme\"}], \"seeds\": [1], "
                      "\"bootstrap\": 0, \"out_dir\": \"" +
                      tmp.file("out") + "\"}";
    REQUIRE(p2t_run(session, cfg.c_str(), 0) == P2T_OK);
    std::string manifest_path = p2t_session_last_manifest(session);
    CHECK(manifest_path.find("manifest.json") != std::string::npos);
    REQUIRE(p2t_report(session, manifest_path.c_str(), tmp.file("table.csv").c_str()) ==
            P2T_OK);
    std::string csv = slurp(tmp.file("table.csv"));
    CHECK(csv.find("acme,1,") != std::string::npos);

    // casestudy via C API
    REQUIRE(p2t_casestudy(session, fixture("casestudy/judgments.jsonl").c_str(),
                          tmp.file("rates.json").c_str()) == P2T_OK);
    CHECK(slurp(tmp.file("rates.json")).find("baseline") != std::string::npos);
}
