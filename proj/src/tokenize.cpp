#include "vandet/tokenize.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "vandet/text.hpp"

namespace vandet {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

bool is_ascii_alnum(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') ||
         (u >= 'A' && u <= 'Z');
}

// Word characters: ASCII alphanumerics plus any non-ASCII byte (multi-byte
// UTF-8 sequences stay glued into one token).
bool is_word_char(char c) {
  return is_ascii_alnum(c) || static_cast<unsigned char>(c) >= 0x80;
}

bool is_ascii_alpha(char c) {
  const auto u = static_cast<unsigned char>(c) | 0x20;
  return u >= 'a' && u <= 'z';
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    const char a = static_cast<char>(std::tolower(
        static_cast<unsigned char>(s[i])));
    if (a != prefix[i]) return false;
  }
  return true;
}

// An HTML tag is '<', optional '/', a letter, then anything up to the next
// '>' with no intervening '<'. Returns the tag length including both angle
// brackets, or 0 if no tag starts here.
std::size_t match_html_tag(std::string_view s) {
  if (s.size() < 3 || s[0] != '<') return 0;
  std::size_t i = 1;
  if (s[i] == '/') ++i;
  if (i >= s.size() || !is_ascii_alpha(s[i])) return 0;
  constexpr std::size_t kMaxTagLength = 256;
  const std::size_t limit = s.size() < kMaxTagLength ? s.size() : kMaxTagLength;
  for (; i < limit; ++i) {
    if (s[i] == '>') return i + 1;
    if (s[i] == '<') return 0;
  }
  return 0;
}

// Fixed wiki-syntax tokens, longest first so ''' wins over ''.
constexpr std::array<std::string_view, 9> kWikiTokens = {
    "#redirect", "'''", "[[", "]]", "{{", "}}", "==", "''", "|"};

std::size_t match_wiki_token(std::string_view s, std::string_view* token) {
  for (const auto w : kWikiTokens) {
    const bool matches =
        w == "#redirect" ? starts_with_ci(s, w) : s.substr(0, w.size()) == w;
    if (matches) {
      *token = w;
      return w.size();
    }
  }
  return 0;
}

}  // namespace

std::vector<std::string> split_repetition(const std::string& word,
                                          const RepetitionConfig& cfg) {
  const std::size_t n = word.size();
  if (n >= cfg.min_length) {
    // Smallest admissible period: the least divisor p >= min_unit of n with
    // word = unit^(n/p). Starting at min_unit (not 1) means uniform-letter
    // words like "aaaaaa" still split into their shortest allowed unit.
    for (std::size_t p = std::max<std::size_t>(1, cfg.min_unit); p * 2 <= n;
         ++p) {
      if (n % p != 0) continue;
      bool periodic = true;
      for (std::size_t i = p; i < n && periodic; ++i)
        periodic = word[i] == word[i - p];
      if (!periodic) continue;
      const std::size_t repeats = n / p;
      if (repeats >= cfg.min_repeats)
        return std::vector<std::string>(repeats, word.substr(0, p));
      break;  // smallest admissible period found but too few repeats
    }
  }
  return {word};
}

std::vector<std::string> tokenize(std::string_view raw_text,
                                  const RepetitionConfig& cfg) {
  const std::string text = sanitize_utf8(raw_text);
  std::vector<std::string> tokens;
  std::string_view s(text);
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    const std::string_view rest = s.substr(i);

    if (starts_with_ci(rest, "http://") || starts_with_ci(rest, "https://")) {
      std::size_t end = i;
      while (end < s.size() && !is_space(s[end])) ++end;
      tokens.push_back(to_lower(s.substr(i, end - i)));
      i = end;
      continue;
    }

    if (const std::size_t tag_len = match_html_tag(rest); tag_len > 0) {
      tokens.push_back(to_lower(rest.substr(0, tag_len)));
      i += tag_len;
      continue;
    }

    std::string_view wiki;
    if (const std::size_t wiki_len = match_wiki_token(rest, &wiki);
        wiki_len > 0) {
      tokens.emplace_back(wiki);
      i += wiki_len;
      continue;
    }

    if (is_word_char(s[i])) {
      std::size_t end = i;
      while (end < s.size() && is_word_char(s[end])) ++end;
      for (auto& part : split_repetition(to_lower(s.substr(i, end - i)), cfg))
        tokens.push_back(std::move(part));
      i = end;
      continue;
    }

    tokens.emplace_back(1, s[i]);
    ++i;
  }
  return tokens;
}

TokenCounts count_tokens(const std::vector<std::string>& tokens) {
  TokenCounts tc;
  for (const auto& t : tokens) ++tc.counts[t];
  tc.total_tokens = static_cast<long>(tokens.size());
  return tc;
}

}  // namespace vandet
