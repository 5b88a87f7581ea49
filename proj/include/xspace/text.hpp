#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "xspace/error.hpp"

namespace xspace {

// 64-bit FNV-1a. Stable across platforms; used for embedding buckets and bundle hashes.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return std::string(s.substr(b, e - b));
}

inline bool is_word_byte(unsigned char c) noexcept {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

inline bool has_word_char(std::string_view s) noexcept {
    for (char c : s)
        if (is_word_byte(static_cast<unsigned char>(c))) return true;
    return false;
}

/// A word token of free text with its byte offsets.
struct WordSpan {
    std::string word;  // lowercased
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Splits free text into lowercased word tokens (maximal runs of ASCII alphanumerics
/// or non-ASCII bytes).
inline std::vector<WordSpan> word_spans(std::string_view text) {
    std::vector<WordSpan> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
        out.push_back({to_lower(text.substr(i, j - i)), i, j});
        i = j;
    }
    return out;
}

inline std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    for (auto& w : word_spans(text)) out.push_back(std::move(w.word));
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, "cannot write file");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError(path, "write failed");
}

/// Function words ignored by gloss overlap.
inline const std::set<std::string>& gloss_stop_words() {
    static const std::set<std::string> words{
        "a",    "an",   "the",  "of",   "to",   "in",   "on",   "for",   "by",   "with", "as",
        "at",   "or",   "and",  "is",   "are",  "be",   "that", "this",  "it",   "its",  "from",
        "into", "such", "some", "any",  "which", "who", "what", "whose", "than", "your", "his",
        "her",  "their", "something", "someone", "thing", "there", "how", "much", "many", "can"};
    return words;
}

/// Levenshtein distance on bytes.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace xspace
