#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vandet/ingest.hpp"
#include "vandet/sparse.hpp"
#include "vandet/tokenize.hpp"

namespace vandet {

/// Per-word change between the previous and current text. Words whose count
/// did not change appear in neither map.
struct WordDelta {
  std::map<std::string, int> diff;      // cur count - prev count, never 0
  std::map<std::string, double> ratio;  // cur/prev growth, negated for shrink
};

/// diff[w] = j - i; ratio[w] = j / max(i, 1) when the count grew, and
/// -(i / max(j, 1)) when it shrank; words with i = j emit nothing.
WordDelta word_delta(const TokenCounts& prev, const TokenCounts& cur);

/// Each word owns four unsigned slots; a signed diff/ratio pair lands in the
/// matching positive-valued pair of slots.
enum class SlotKind : std::int32_t {
  kDiffAdd = 0,   // diff > 0, stored as +diff
  kDiffSub = 1,   // diff < 0, stored as -diff
  kRatioPos = 2,  // ratio > 0, stored as +ratio
  kRatioNeg = 3,  // ratio < 0, stored as -ratio
};

struct SignSplitValues {
  double diff_add = 0;
  double diff_sub = 0;
  double ratio_pos = 0;
  double ratio_neg = 0;
};

std::map<std::string, SignSplitValues> sign_split(const WordDelta& delta);

/// Metadata slot indices, relative to the ancillary block offset
/// (4 * vocabulary size). All raw values are >= 0.
namespace ancillary {
inline constexpr std::int32_t kEmptyText = 0;            // cur text empty
inline constexpr std::int32_t kHasComment = 1;           // comment nonempty
inline constexpr std::int32_t kMinor = 2;                // minor-edit flag
inline constexpr std::int32_t kExternalLinksChange = 3;  // links section touched
inline constexpr std::int32_t kIpOctetBase = 4;          // 256 one-hot slots
inline constexpr std::int32_t kMergedCount = 260;        // run length - 1
inline constexpr std::int32_t kPrevTextChars = 261;
inline constexpr std::int32_t kPrevTextWords = 262;
inline constexpr std::int32_t kCurTextChars = 263;
inline constexpr std::int32_t kCurTextWords = 264;
inline constexpr std::int32_t kPrevCommentChars = 265;  // always 0: only the
inline constexpr std::int32_t kPrevCommentWords = 266;  // run's comment is kept
inline constexpr std::int32_t kCurCommentChars = 267;
inline constexpr std::int32_t kCurCommentWords = 268;
inline constexpr std::int32_t kTextCharsDiffAdd = 269;
inline constexpr std::int32_t kTextCharsDiffSub = 270;
inline constexpr std::int32_t kTextWordsDiffAdd = 271;
inline constexpr std::int32_t kTextWordsDiffSub = 272;
inline constexpr std::int32_t kCommentCharsDiffAdd = 273;
inline constexpr std::int32_t kCommentCharsDiffSub = 274;
inline constexpr std::int32_t kCommentWordsDiffAdd = 275;
inline constexpr std::int32_t kCommentWordsDiffSub = 276;
inline constexpr std::int32_t kCount = 277;

/// Human-readable slot name for file headers and debugging.
std::string slot_name(std::int32_t slot);
}  // namespace ancillary

/// Tokenization-derived view of one case: the word delta plus raw metadata
/// slot values.
struct CaseAnalysis {
  WordDelta delta;
  std::array<double, ancillary::kCount> metadata{};
};

CaseAnalysis analyze_case(const RevisionCase& c,
                          const RepetitionConfig& cfg = RepetitionConfig{});

/// Immutable word -> base id map built from a training corpus. Base id b owns
/// feature ids 4b..4b+3 (SlotKind order); metadata slots follow at offset
/// 4 * word_count().
class VocabMap {
 public:
  VocabMap() = default;

  /// Words are every token with a nonzero delta in at least one analysis,
  /// assigned ids in lexicographic (byte) order.
  static VocabMap build(const std::vector<CaseAnalysis>& analyses);

  /// Deduplicates and sorts.
  static VocabMap from_words(std::vector<std::string> words);

  std::int32_t word_count() const {
    return static_cast<std::int32_t>(words_.size());
  }
  std::int32_t ancillary_offset() const { return word_count() * 4; }
  std::int32_t feature_count() const {
    return ancillary_offset() + ancillary::kCount;
  }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<std::int32_t> base_id(const std::string& word) const;

  static std::int32_t slot_id(std::int32_t base_id, SlotKind kind) {
    return base_id * 4 + static_cast<std::int32_t>(kind);
  }

  /// TSV: `<base_id>\t<word>` (word TSV-escaped), preceded by `#` comment
  /// lines documenting the slot layout (plus `comment` when nonempty).
  void save(const std::filesystem::path& path,
            const std::string& comment = {}) const;
  static VocabMap load(const std::filesystem::path& path);

  friend bool operator==(const VocabMap&, const VocabMap&) = default;

 private:
  std::vector<std::string> words_;  // index = base id, sorted
  std::unordered_map<std::string, std::int32_t> ids_;
};

enum class ScalingKind { kAtan, kBinary, kLogLin };

std::string to_string(ScalingKind kind);
ScalingKind scaling_kind_from_string(const std::string& name);

/// Maps raw nonnegative feature values into [0, 1]. log-lin carries the
/// per-feature training maximum; the other kinds are stateless.
class ScalingSpec {
 public:
  explicit ScalingSpec(ScalingKind kind) : kind_(kind) {}

  /// For log-lin records max over the raw training vectors (which must be
  /// nonempty); otherwise just the kind.
  static ScalingSpec fit(ScalingKind kind,
                         const std::vector<SparseVector>& raw_training);

  ScalingKind kind() const { return kind_; }

  /// atan: arctan(x)*2/pi. binary: x > 0. log-lin: ln(x+1)/ln(max+1),
  /// clamped to 1 for x > max; a feature never seen in training scales any
  /// positive x to 1.
  double scale(std::int32_t feature_id, double x) const;

  const std::unordered_map<std::int32_t, double>& feature_max() const {
    return max_;
  }

  void save(const std::filesystem::path& path,
            const std::string& comment = {}) const;
  static ScalingSpec load(const std::filesystem::path& path);

  friend bool operator==(const ScalingSpec&, const ScalingSpec&) = default;

 private:
  ScalingKind kind_;
  std::unordered_map<std::int32_t, double> max_;
};

/// Unscaled feature vector: sign-split word slots for vocab words plus the
/// metadata block. Out-of-vocabulary words are dropped.
SparseVector assemble_raw(const CaseAnalysis& analysis, const VocabMap& vocab);

/// Scales every slot; under binary scaling the word ratio slots are dropped
/// (they would duplicate the diff slots).
SparseVector apply_scaling(const SparseVector& raw, const ScalingSpec& scaling,
                           std::int32_t ancillary_offset);

LabeledInstance assemble(const RevisionCase& c, const VocabMap& vocab,
                         const ScalingSpec& scaling,
                         const RepetitionConfig& cfg = RepetitionConfig{});

}  // namespace vandet
