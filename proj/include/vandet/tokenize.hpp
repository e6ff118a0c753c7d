#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vandet {

/// Multiset of tokens. total_tokens always equals the sum of the counts.
struct TokenCounts {
  std::unordered_map<std::string, int> counts;
  long total_tokens = 0;

  int count(const std::string& token) const {
    const auto it = counts.find(token);
    return it == counts.end() ? 0 : it->second;
  }
};

/// Repetition-splitting thresholds: a word of length >= min_length that is a
/// unit of >= min_unit characters repeated >= min_repeats times is split into
/// its units ("hihihi" -> hi hi hi).
struct RepetitionConfig {
  std::size_t min_length = 6;
  std::size_t min_unit = 2;
  std::size_t min_repeats = 3;
};

/// Splits a single alphanumeric word on its smallest period, or returns it
/// unchanged when the repetition thresholds are not met.
std::vector<std::string> split_repetition(
    const std::string& word, const RepetitionConfig& cfg = RepetitionConfig{});

/// Turns text into lowercased tokens, in order of appearance:
///   - HTML tags as single tokens including the angle brackets (<br>, </div>)
///   - the wiki syntax tokens [[ ]] {{ }} == ''' '' | #redirect
///   - http:// or https:// URLs as single tokens (greedy to whitespace)
///   - maximal alphanumeric runs, with repetition splitting applied
///   - every other punctuation character as its own one-character token
/// Whitespace separates tokens and is never emitted. Invalid UTF-8 is
/// replaced with U+FFFD before scanning.
std::vector<std::string> tokenize(
    std::string_view text, const RepetitionConfig& cfg = RepetitionConfig{});

TokenCounts count_tokens(const std::vector<std::string>& tokens);

}  // namespace vandet
