#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace vandet {

/// Replaces invalid UTF-8 byte sequences with U+FFFD so downstream code can
/// assume well-formed input.
std::string sanitize_utf8(std::string_view text);

/// Simple (locale-independent) lowercase mapping. Covers ASCII plus the
/// Latin-1, Latin Extended-A, Greek and Cyrillic letter ranges; other
/// codepoints pass through unchanged.
std::string to_lower(std::string_view text);

/// FNV-1a 64-bit hash. Used for revert candidate matching and provenance
/// hashes; stable across platforms.
std::uint64_t fnv1a64(std::string_view bytes);

/// Escapes backslash, tab, newline and carriage return so a token can live in
/// a tab-separated file. unescape_tsv inverts it.
std::string escape_tsv(std::string_view s);
std::string unescape_tsv(std::string_view s);

/// printf %.17g / %.9g with guaranteed '.'-decimal formatting.
std::string format_g17(double v);
std::string format_g9(double v);

}  // namespace vandet
