#include "p2t/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

namespace p2t::text {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

char lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool is_word_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return std::isalnum(u) != 0 || c == '_';
}

// Trailing-period tokens that do not end a sentence in legal prose.
const std::vector<std::string>& abbreviations() {
    static const std::vector<std::string> kAbbrev = {
        "e.g.", "i.e.", "etc.", "cf.", "vs.", "v.", "no.", "nos.", "art.",
        "arts.", "sec.", "secs.", "para.", "fig.", "ch.", "pt.", "reg.",
        "c.f.r.", "u.s.c.", "u.s.", "inc.", "ltd.", "co.", "corp.", "st.",
        "dept.", "div.", "seq.", "approx.", "al.",
    };
    return kAbbrev;
}

}  // namespace

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string collapse_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = false;
    for (char c : s) {
        if (is_space(c)) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(c);
    }
    return out;
}

std::string norm(std::string_view s) {
    std::string out = collapse_ws(lowercase(s));
    while (!out.empty() && (out.back() == '.' || out.back() == ';' || out.back() == ',')) {
        out.pop_back();
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_word_char(c)) {
            cur.push_back(lower(c));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::set<std::string> token_set(std::string_view s) {
    auto toks = tokens(s);
    return std::set<std::string>(toks.begin(), toks.end());
}

double jaccard(std::string_view a, std::string_view b) {
    auto sa = token_set(a);
    auto sb = token_set(b);
    if (sa.empty() && sb.empty()) return 1.0;
    if (sa.empty() || sb.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& t : sa) {
        if (sb.count(t)) ++inter;
    }
    size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::vector<std::string> split_sentences(const std::string& paragraph) {
    std::vector<std::string> out;
    const std::string& p = paragraph;
    size_t start = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        char c = p[i];
        if (c != '.' && c != '?' && c != '!') continue;
        // Boundary requires whitespace then an uppercase letter or digit.
        size_t j = i + 1;
        // Allow closing quotes/brackets between the period and the space.
        while (j < p.size() && (p[j] == ')' || p[j] == '"' || p[j] == '\'')) ++j;
        if (j >= p.size()) continue;
        if (!is_space(p[j])) continue;
        size_t k = j;
        while (k < p.size() && is_space(p[k])) ++k;
        if (k >= p.size()) continue;
        unsigned char nxt = static_cast<unsigned char>(p[k]);
        if (!std::isupper(nxt) && !std::isdigit(nxt)) continue;

        if (c == '.') {
            // Last whitespace-delimited token ending at i.
            size_t tb = i;
            while (tb > start && !is_space(p[tb - 1])) --tb;
            std::string tok = lowercase(std::string_view(p).substr(tb, i - tb + 1));
            bool abbrev = std::find(abbreviations().begin(), abbreviations().end(), tok) !=
                          abbreviations().end();
            // Single initials ("J.", "A.") and enumerators ("1.", "(a).") too.
            if (!abbrev && tok.size() <= 2) abbrev = true;
            // Tokens with an interior period ("45 C.F.R." variants not in the list).
            if (!abbrev && tok.find('.') != tok.size() - 1) abbrev = true;
            if (abbrev) continue;
        }
        std::string sentence = trim(std::string_view(p).substr(start, j - start));
        if (!sentence.empty()) out.push_back(sentence);
        start = k;
    }
    std::string tail = trim(std::string_view(p).substr(start));
    if (!tail.empty()) out.push_back(tail);
    return out;
}

bool glob_match(std::string_view pattern, std::string_view value) {
    std::string pat = lowercase(pattern);
    std::string val = lowercase(value);
    // Iterative wildcard match; only `*` is special.
    size_t pi = 0, vi = 0, star = std::string::npos, mark = 0;
    while (vi < val.size()) {
        if (pi < pat.size() && (pat[pi] == val[vi])) {
            ++pi;
            ++vi;
        } else if (pi < pat.size() && pat[pi] == '*') {
            star = pi++;
            mark = vi;
        } else if (star != std::string::npos) {
            pi = star + 1;
            vi = ++mark;
        } else {
            return false;
        }
    }
    while (pi < pat.size() && pat[pi] == '*') ++pi;
    return pi == pat.size();
}

bool contains_phrase(std::string_view s, std::string_view phrase) {
    std::string hay = lowercase(s);
    std::string needle = lowercase(phrase);
    if (needle.empty()) return false;
    size_t pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]);
        size_t end = pos + needle.size();
        bool right_ok = end >= hay.size() || !is_word_char(hay[end]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

int approx_tokens(std::string_view s) {
    int n = 0;
    bool in_tok = false;
    for (char c : s) {
        if (is_space(c)) {
            in_tok = false;
        } else if (!in_tok) {
            in_tok = true;
            ++n;
        }
    }
    return n;
}

std::string zero_pad(int value, int width) {
    std::string v = std::to_string(value);
    if (static_cast<int>(v.size()) >= width) return v;
    return std::string(width - v.size(), '0') + v;
}

}  // namespace p2t::text
