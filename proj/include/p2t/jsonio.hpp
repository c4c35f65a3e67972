#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace p2t::jsonio {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);

/// Writes atomically: temp file in the same directory, then rename.
void write_file(const std::filesystem::path& path, std::string_view content);

json parse(const std::string& text, const std::string& what);
json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const json& value, int indent = 2);

/// One compact JSON value per line. Blank lines are skipped on read.
std::vector<json> load_jsonl(const std::filesystem::path& path);
void save_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

/// Record files may be JSONL or a single JSON array; sniffs the first byte.
std::vector<json> load_rows(const std::filesystem::path& path);

/// Replaces ${VAR} occurrences in every string value with the environment value
/// (empty when unset).
json interpolate_env(json value);

}  // namespace p2t::jsonio
