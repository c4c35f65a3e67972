#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace p2t::text {

std::string lowercase(std::string_view s);
std::string trim(std::string_view s);

/// Collapses runs of whitespace (space, tab, newline) to a single space and trims.
std::string collapse_ws(std::string_view s);

/// Signature-grade normalization: lowercase, collapse whitespace, strip trailing `.;,`.
std::string norm(std::string_view s);

/// Lowercased runs of [a-z0-9_]. Underscore retained so closed-set tokens
/// like io_check stay atomic.
std::vector<std::string> tokens(std::string_view s);
std::set<std::string> token_set(std::string_view s);

/// |A∩B| / |A∪B| over token sets; both empty -> 1.0, one empty -> 0.0.
double jaccard(std::string_view a, std::string_view b);

std::uint64_t fnv1a64(std::string_view s);
std::string sha256_hex(std::string_view data);

/// Splits a paragraph into sentences on [.?!] + whitespace + upper/digit,
/// with an exception list for the abbreviations common in legal text.
std::vector<std::string> split_sentences(const std::string& paragraph);

/// Case-insensitive glob with `*` wildcards (evidence gate trust patterns).
bool glob_match(std::string_view pattern, std::string_view value);

/// True if `phrase` occurs in `s` on word boundaries, case-insensitively.
bool contains_phrase(std::string_view s, std::string_view phrase);

/// Whitespace token count; stands in for model token accounting offline.
int approx_tokens(std::string_view s);

std::string zero_pad(int value, int width);

}  // namespace p2t::text
