#pragma once

#include "p2t/dsl.hpp"
#include "p2t/ingest.hpp"
#include "p2t/miner.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

namespace p2t::testing {

inline std::filesystem::path source_dir() { return {P2T_SOURCE_DIR}; }

inline std::string fixture(const std::string& rel) {
    return (source_dir() / "fixtures" / rel).string();
}

/// Unique scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("p2t_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline Rule make_rule(const std::string& rule_id, const std::string& span_id,
                      const std::string& requirement,
                      const std::vector<std::string>& actors = {"organization"}) {
    Rule r;
    r.rule_id = rule_id;
    r.source = {"doc", "Section 1 ¶1", span_id, {}};
    r.scope.actor = actors;
    r.requirement = requirement;
    r.severity = Severity::medium;
    r.is_testable = false;
    r.confidence = 1.0;
    return r;
}

inline Span make_span(const std::string& span_id, const std::string& text,
                      const std::string& doc = "doc") {
    Span s;
    s.span_id = span_id;
    s.doc_id = doc;
    s.section_path = "Section 1";
    s.citation = "Section 1 ¶1";
    s.text = text;
    s.kind = SpanKind::paragraph;
    return s;
}

inline Clause make_clause(const std::string& span_id, const std::string& text,
                          ClauseType type = ClauseType::obligation) {
    Clause c;
    c.span = make_span(span_id, text);
    c.clause_type = type;
    return c;
}

}  // namespace p2t::testing
