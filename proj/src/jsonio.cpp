#include "p2t/jsonio.hpp"

#include "p2t/errors.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace p2t::jsonio {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw InputError("short write: " + tmp.string());
    }
    fs::rename(tmp, path);
}

json parse(const std::string& text, const std::string& what) {
    json v = json::parse(text, nullptr, false);
    if (v.is_discarded()) throw InputError("invalid JSON in " + what);
    return v;
}

json load_json(const fs::path& path) {
    return parse(read_file(path), path.string());
}

void save_json(const fs::path& path, const json& value, int indent) {
    write_file(path, value.dump(indent) + "\n");
}

std::vector<json> load_jsonl(const fs::path& path) {
    std::string text = read_file(path);
    std::vector<json> rows;
    size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) {
            json v = json::parse(line, nullptr, false);
            if (v.is_discarded()) {
                throw InputError(path.string() + ":" + std::to_string(lineno) +
                                 ": invalid JSON line");
            }
            rows.push_back(std::move(v));
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return rows;
}

void save_jsonl(const fs::path& path, const std::vector<json>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump();
        out.push_back('\n');
    }
    write_file(path, out);
}

std::vector<json> load_rows(const fs::path& path) {
    std::string text = read_file(path);
    size_t i = 0;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i < text.size() && text[i] == '[') {
        json v = parse(text, path.string());
        if (!v.is_array()) throw InputError(path.string() + ": expected a JSON array");
        return std::vector<json>(v.begin(), v.end());
    }
    return load_jsonl(path);
}

namespace {

std::string interpolate_env_string(const std::string& s) {
    std::string out;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t open = s.find("${", pos);
        if (open == std::string::npos) {
            out += s.substr(pos);
            break;
        }
        size_t close = s.find('}', open + 2);
        if (close == std::string::npos) {
            out += s.substr(pos);
            break;
        }
        out += s.substr(pos, open - pos);
        std::string name = s.substr(open + 2, close - open - 2);
        const char* val = std::getenv(name.c_str());
        if (val) out += val;
        pos = close + 1;
    }
    return out;
}

}  // namespace

json interpolate_env(json value) {
    if (value.is_string()) {
        return interpolate_env_string(value.get<std::string>());
    }
    if (value.is_object()) {
        for (auto& [k, v] : value.items()) v = interpolate_env(v);
        return value;
    }
    if (value.is_array()) {
        for (auto& v : value) v = interpolate_env(v);
        return value;
    }
    return value;
}

}  // namespace p2t::jsonio
