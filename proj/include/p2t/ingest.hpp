#pragma once

#include "p2t/jsonio.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace p2t {

using jsonio::json;

enum class DocFormat { plain_text, markdown };
enum class ChunkStrategy { paragraph, sentence, window };
enum class SpanKind { paragraph, sentence, window, table, caption };

std::optional<DocFormat> doc_format_from(const std::string& name);
std::optional<ChunkStrategy> chunk_strategy_from(const std::string& name);
std::string span_kind_name(SpanKind k);

struct Section {
    std::string section_path;
    std::string text;  // cleaned: right-trimmed lines, single blank line between paragraphs
};

struct Document {
    std::string doc_id;
    std::string title;
    std::vector<Section> sections;
};

struct Span {
    std::string span_id;
    std::string doc_id;
    std::string section_path;
    std::string citation;
    std::string text;
    SpanKind kind = SpanKind::paragraph;
};

json span_to_json(const Span& span);
Span span_from_json(const json& value);

struct IngestConfig {
    // Plain-text heading detection; markdown uses # levels instead.
    std::vector<std::string> heading_patterns{
        R"(^\s*(article|section|part|chapter|subpart|appendix|annex|title)\s+([0-9ivxlc]+|§).*$)",
        R"(^\s*§+\s*[\d.]+.*$)",
    };
    // A line repeated on more than this fraction of form-feed pages is boilerplate.
    double boilerplate_page_fraction = 0.5;
};

/// Reads and cleans a policy document. Headings become section paths; repeated
/// per-page lines and page numbers are stripped.
Document load_document(const std::filesystem::path& path, DocFormat format,
                       const std::string& doc_id = "", const IngestConfig& config = {});

/// Splits sections into addressable spans with deterministic identifiers
/// "{doc_id}:{section}:{chunk}" and "{section_path} ¶{n}" citations.
std::vector<Span> chunk(const Document& doc, ChunkStrategy strategy, int window_radius = 1);

}  // namespace p2t
