#include "p2t/ingest.hpp"

#include "p2t/errors.hpp"
#include "p2t/text.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

namespace p2t {

std::optional<DocFormat> doc_format_from(const std::string& name) {
    if (name == "md" || name == "markdown") return DocFormat::markdown;
    if (name == "txt" || name == "plain_text" || name == "text") return DocFormat::plain_text;
    return std::nullopt;
}

std::optional<ChunkStrategy> chunk_strategy_from(const std::string& name) {
    if (name == "paragraph") return ChunkStrategy::paragraph;
    if (name == "sentence") return ChunkStrategy::sentence;
    if (name == "window") return ChunkStrategy::window;
    return std::nullopt;
}

std::string span_kind_name(SpanKind k) {
    switch (k) {
        case SpanKind::paragraph: return "paragraph";
        case SpanKind::sentence: return "sentence";
        case SpanKind::window: return "window";
        case SpanKind::table: return "table";
        case SpanKind::caption: return "caption";
    }
    return "paragraph";
}

namespace {

SpanKind span_kind_from(const std::string& name) {
    if (name == "sentence") return SpanKind::sentence;
    if (name == "window") return SpanKind::window;
    if (name == "table") return SpanKind::table;
    if (name == "caption") return SpanKind::caption;
    return SpanKind::paragraph;
}

}  // namespace

json span_to_json(const Span& span) {
    return json{{"span_id", span.span_id},   {"doc_id", span.doc_id},
                {"section_path", span.section_path}, {"citation", span.citation},
                {"text", span.text},         {"kind", span_kind_name(span.kind)}};
}

Span span_from_json(const json& value) {
    if (!value.is_object()) throw InputError("span must be a JSON object");
    Span s;
    try {
        s.span_id = value.at("span_id").get<std::string>();
        s.doc_id = value.at("doc_id").get<std::string>();
        s.section_path = value.at("section_path").get<std::string>();
        s.citation = value.at("citation").get<std::string>();
        s.text = value.at("text").get<std::string>();
        s.kind = span_kind_from(value.at("kind").get<std::string>());
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed span: ") + e.what());
    }
    return s;
}

namespace {

bool valid_utf8(const std::string& s) {
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        size_t extra;
        if (c < 0x80) {
            extra = 0;
        } else if ((c & 0xE0) == 0xC0) {
            extra = 1;
            if (c < 0xC2) return false;  // overlong
        } else if ((c & 0xF0) == 0xE0) {
            extra = 2;
        } else if ((c & 0xF8) == 0xF0) {
            extra = 3;
            if (c > 0xF4) return false;
        } else {
            return false;
        }
        if (i + extra >= s.size() + (extra == 0 ? 1 : 0)) {
            if (i + extra >= s.size() && extra > 0) return false;
        }
        for (size_t k = 1; k <= extra; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
        }
        i += extra + 1;
    }
    return true;
}

std::string rtrim(const std::string& line) {
    size_t e = line.size();
    while (e > 0 && (line[e - 1] == ' ' || line[e - 1] == '\t' || line[e - 1] == '\r')) --e;
    return line.substr(0, e);
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t nl = s.find('\n', pos);
        if (nl == std::string::npos) {
            lines.push_back(rtrim(s.substr(pos)));
            break;
        }
        lines.push_back(rtrim(s.substr(pos, nl - pos)));
        pos = nl + 1;
    }
    return lines;
}

bool is_page_number(const std::string& line) {
    static const std::regex kPageNo(R"(^\s*(page\s+)?\d+(\s+of\s+\d+)?\s*$)",
                                    std::regex::icase);
    return std::regex_match(line, kPageNo);
}

/// Removes page-number lines and lines repeated on more than `fraction` of
/// form-feed-delimited pages. Returns the surviving lines in order.
std::vector<std::string> strip_boilerplate(const std::string& raw, double fraction) {
    // Split into pages on form feed; a page break also acts as a blank line.
    std::vector<std::vector<std::string>> pages;
    size_t pos = 0;
    while (pos <= raw.size()) {
        size_t ff = raw.find('\f', pos);
        std::string chunk =
            ff == std::string::npos ? raw.substr(pos) : raw.substr(pos, ff - pos);
        pages.push_back(split_lines(chunk));
        if (ff == std::string::npos) break;
        pos = ff + 1;
    }

    std::set<std::string> repeated;
    if (pages.size() >= 2) {
        std::map<std::string, int> page_count;
        for (const auto& page : pages) {
            std::set<std::string> uniq;
            for (const auto& line : page) {
                std::string key = text::collapse_ws(line);
                if (!key.empty()) uniq.insert(key);
            }
            for (const auto& key : uniq) ++page_count[key];
        }
        double cutoff = fraction * static_cast<double>(pages.size());
        for (const auto& [key, count] : page_count) {
            if (static_cast<double>(count) > cutoff) repeated.insert(key);
        }
    }

    std::vector<std::string> out;
    for (size_t p = 0; p < pages.size(); ++p) {
        for (const auto& line : pages[p]) {
            std::string key = text::collapse_ws(line);
            if (!key.empty() && (repeated.count(key) || is_page_number(line))) continue;
            out.push_back(line);
        }
        if (p + 1 < pages.size()) out.push_back("");  // page break = paragraph break
    }
    return out;
}

/// Canonical section text: no leading/trailing blank lines, blank runs collapsed
/// to exactly one. This is the text that paragraph chunking reconstructs.
std::string canonical_text(const std::vector<std::string>& lines) {
    std::vector<std::string> kept;
    for (const auto& line : lines) {
        if (line.empty() && (kept.empty() || kept.back().empty())) continue;
        kept.push_back(line);
    }
    while (!kept.empty() && kept.back().empty()) kept.pop_back();
    std::string out;
    for (size_t i = 0; i < kept.size(); ++i) {
        if (i) out.push_back('\n');
        out += kept[i];
    }
    return out;
}

std::string sanitize_doc_id(const std::string& stem) {
    std::string out;
    for (char c : text::lowercase(stem)) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(c);
        } else if (!out.empty() && out.back() != '_') {
            out.push_back('_');
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out.empty() ? "doc" : out;
}

struct SectionBuilder {
    std::vector<Section> sections;
    std::string current_path = "preamble";
    std::vector<std::string> current_lines;

    void flush() {
        std::string body = canonical_text(current_lines);
        current_lines.clear();
        if (!body.empty()) sections.push_back({current_path, body});
    }

    void start(const std::string& path) {
        flush();
        current_path = path.empty() ? "preamble" : path;
    }
};

}  // namespace

Document load_document(const std::filesystem::path& path, DocFormat format,
                       const std::string& doc_id, const IngestConfig& config) {
    std::string raw = jsonio::read_file(path);
    if (!valid_utf8(raw)) throw InputError("invalid UTF-8 in " + path.string());

    Document doc;
    doc.doc_id = doc_id.empty() ? sanitize_doc_id(path.stem().string()) : doc_id;

    std::vector<std::string> lines = strip_boilerplate(raw, config.boilerplate_page_fraction);

    SectionBuilder builder;
    if (format == DocFormat::markdown) {
        static const std::regex kHeading(R"(^(#{1,6})\s+(.*)$)");
        std::vector<std::string> stack;  // heading text per level
        std::smatch m;
        for (const auto& line : lines) {
            if (std::regex_match(line, m, kHeading)) {
                size_t level = m[1].str().size();
                std::string title = text::collapse_ws(m[2].str());
                stack.resize(level);
                stack[level - 1] = title;
                if (doc.title.empty()) doc.title = title;
                std::string joined;
                for (const auto& part : stack) {
                    if (part.empty()) continue;
                    if (!joined.empty()) joined += " > ";
                    joined += part;
                }
                builder.start(joined);
            } else {
                builder.current_lines.push_back(line);
            }
        }
    } else {
        std::vector<std::regex> patterns;
        for (const auto& p : config.heading_patterns) {
            patterns.emplace_back(p, std::regex::icase);
        }
        for (const auto& line : lines) {
            bool heading = false;
            for (const auto& re : patterns) {
                if (std::regex_match(line, re)) {
                    heading = true;
                    break;
                }
            }
            if (heading) {
                std::string title = text::collapse_ws(line);
                if (doc.title.empty()) doc.title = title;
                builder.start(title);
            } else {
                builder.current_lines.push_back(line);
            }
        }
    }
    builder.flush();
    doc.sections = std::move(builder.sections);
    if (doc.title.empty()) doc.title = doc.doc_id;
    if (doc.sections.empty()) throw InputError("empty document: " + path.string());
    return doc;
}

namespace {

struct Block {
    std::string body;
    SpanKind kind;
    std::vector<std::string> rows;  // table rows, serialized
};

bool is_table_line(const std::string& line) {
    std::string t = text::trim(line);
    return t.size() >= 2 && t.front() == '|';
}

bool is_separator_row(const std::string& line) {
    for (char c : line) {
        if (c != '|' && c != '-' && c != ':' && c != ' ' && c != '\t') return false;
    }
    return line.find('-') != std::string::npos;
}

std::string serialize_row(const std::string& line) {
    std::string t = text::trim(line);
    if (!t.empty() && t.front() == '|') t.erase(t.begin());
    if (!t.empty() && t.back() == '|') t.pop_back();
    std::vector<std::string> cells;
    size_t pos = 0;
    while (pos <= t.size()) {
        size_t bar = t.find('|', pos);
        std::string cell =
            text::collapse_ws(t.substr(pos, bar == std::string::npos ? bar : bar - pos));
        cells.push_back(cell);
        if (bar == std::string::npos) break;
        pos = bar + 1;
    }
    std::string out;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out += " | ";
        out += cells[i];
    }
    return out;
}

bool is_caption(const std::string& body) {
    static const std::regex kCaption(R"(^(table|figure)\s+\d+[:.].*)",
                                     std::regex::icase);
    return std::regex_match(body, kCaption);
}

std::vector<Block> split_blocks(const std::string& section_text) {
    std::vector<Block> blocks;
    std::vector<std::string> lines = split_lines(section_text);
    size_t i = 0;
    while (i < lines.size()) {
        if (lines[i].empty()) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < lines.size() && !lines[j].empty()) ++j;
        std::vector<std::string> para(lines.begin() + static_cast<long>(i),
                                      lines.begin() + static_cast<long>(j));
        size_t table_lines = 0;
        for (const auto& l : para) {
            if (is_table_line(l)) ++table_lines;
        }
        if (table_lines >= 2 && table_lines == para.size()) {
            Block b;
            b.kind = SpanKind::table;
            for (const auto& l : para) {
                if (is_separator_row(l)) continue;
                b.rows.push_back(serialize_row(l));
            }
            blocks.push_back(std::move(b));
        } else {
            std::string body;
            for (size_t k = 0; k < para.size(); ++k) {
                if (k) body.push_back('\n');
                body += para[k];
            }
            Block b;
            b.body = body;
            b.kind = is_caption(body) ? SpanKind::caption : SpanKind::paragraph;
            blocks.push_back(std::move(b));
        }
        i = j;
    }
    return blocks;
}

}  // namespace

std::vector<Span> chunk(const Document& doc, ChunkStrategy strategy, int window_radius) {
    if (strategy == ChunkStrategy::window && window_radius < 1) {
        throw InputError("window strategy requires window_radius >= 1");
    }
    std::vector<Span> spans;
    for (size_t si = 0; si < doc.sections.size(); ++si) {
        const Section& section = doc.sections[si];
        std::vector<Block> blocks = split_blocks(section.text);
        int chunk_index = 0;
        auto emit = [&](const std::string& body, SpanKind kind, int paragraph_no) {
            std::string body_trim = text::trim(body);
            if (body_trim.empty()) return;
            Span s;
            s.doc_id = doc.doc_id;
            s.section_path = section.section_path;
            s.span_id = doc.doc_id + ":" + text::zero_pad(static_cast<int>(si), 3) + ":" +
                        text::zero_pad(chunk_index, 3);
            s.citation = section.section_path + " ¶" + std::to_string(paragraph_no);
            s.text = body_trim;
            s.kind = kind;
            spans.push_back(std::move(s));
            ++chunk_index;
        };

        for (size_t bi = 0; bi < blocks.size(); ++bi) {
            const Block& block = blocks[bi];
            int para_no = static_cast<int>(bi) + 1;
            if (block.kind == SpanKind::table) {
                for (const auto& row : block.rows) emit(row, SpanKind::table, para_no);
                continue;
            }
            if (block.kind == SpanKind::caption) {
                emit(block.body, SpanKind::caption, para_no);
                continue;
            }
            switch (strategy) {
                case ChunkStrategy::paragraph:
                    emit(block.body, SpanKind::paragraph, para_no);
                    break;
                case ChunkStrategy::sentence: {
                    for (const auto& s : text::split_sentences(block.body)) {
                        emit(s, SpanKind::sentence, para_no);
                    }
                    break;
                }
                case ChunkStrategy::window: {
                    auto sentences = text::split_sentences(block.body);
                    int n = static_cast<int>(sentences.size());
                    for (int t = 0; t < n; ++t) {
                        int lo = std::max(0, t - window_radius);
                        int hi = std::min(n - 1, t + window_radius);
                        std::string body;
                        for (int k = lo; k <= hi; ++k) {
                            if (k > lo) body.push_back(' ');
                            body += sentences[static_cast<size_t>(k)];
                        }
                        emit(body, SpanKind::window, para_no);
                    }
                    break;
                }
            }
        }
    }
    return spans;
}

}  // namespace p2t
