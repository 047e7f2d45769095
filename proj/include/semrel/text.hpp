#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace semrel {

bool is_valid_utf8(std::string_view s) noexcept;

/// Canonical form of a term: Unicode NFC, trimmed, interior whitespace runs
/// collapsed to one ASCII space. No case folding. Throws ArgumentError on
/// invalid UTF-8.
std::string normalize_term(std::string_view s);

std::string_view trim(std::string_view s) noexcept;

/// Splits on ASCII whitespace; empty tokens are never produced.
std::vector<std::string_view> split_whitespace(std::string_view s);

std::size_t count_whitespace_tokens(std::string_view s) noexcept;

/// FNV-1a, 64 bit. Stable across platforms; used for seeding and checkpoint keys.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

std::string hex64(std::uint64_t v);

/// SHA-256 of a byte string as lowercase hex.
std::string sha256_hex(std::string_view bytes);

/// JSON string literal (quotes included) with UTF-8 passed through unescaped.
std::string json_quote(std::string_view s);

}  // namespace semrel
