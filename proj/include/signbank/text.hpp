#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace signbank::text {

/// ASCII whitespace only; UTF-8 payload bytes are never touched.
std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

/// Trims each item, drops empties, keeps the first occurrence of duplicates.
std::vector<std::string> dedupe_trimmed(const std::vector<std::string>& items);

// Term list cell codec for the TSV formats: terms joined by "||"; a literal "||"
// is written as "\|\|" (every pipe is escaped) and backslash, tab, CR, LF are
// backslash-escaped.
std::string encode_terms(const std::vector<std::string>& terms);
std::vector<std::string> decode_terms(std::string_view cell);

/// Strips a trailing '\r' left by CRLF input.
std::string_view chomp(std::string_view line);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace signbank::text
