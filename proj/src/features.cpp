#include "vandet/features.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "vandet/text.hpp"

namespace vandet {

WordDelta word_delta(const TokenCounts& prev, const TokenCounts& cur) {
  WordDelta d;
  auto emit = [&](const std::string& w, int i, int j) {
    if (i == j) return;
    d.diff[w] = j - i;
    d.ratio[w] = j > i ? static_cast<double>(j) / std::max(i, 1)
                       : -(static_cast<double>(i) / std::max(j, 1));
  };
  for (const auto& [w, i] : prev.counts) emit(w, i, cur.count(w));
  for (const auto& [w, j] : cur.counts) {
    if (!prev.counts.contains(w)) emit(w, 0, j);
  }
  return d;
}

std::map<std::string, SignSplitValues> sign_split(const WordDelta& delta) {
  std::map<std::string, SignSplitValues> out;
  for (const auto& [w, d] : delta.diff) {
    SignSplitValues& v = out[w];
    if (d > 0) {
      v.diff_add = d;
    } else {
      v.diff_sub = -d;
    }
  }
  for (const auto& [w, r] : delta.ratio) {
    SignSplitValues& v = out[w];
    if (r > 0) {
      v.ratio_pos = r;
    } else {
      v.ratio_neg = -r;
    }
  }
  return out;
}

namespace ancillary {

std::string slot_name(std::int32_t slot) {
  switch (slot) {
    case kEmptyText: return "empty-text";
    case kHasComment: return "has-comment";
    case kMinor: return "minor-edit";
    case kExternalLinksChange: return "external-links-change";
    case kMergedCount: return "merged-count-minus-1";
    case kPrevTextChars: return "prev-text-chars";
    case kPrevTextWords: return "prev-text-words";
    case kCurTextChars: return "cur-text-chars";
    case kCurTextWords: return "cur-text-words";
    case kPrevCommentChars: return "prev-comment-chars";
    case kPrevCommentWords: return "prev-comment-words";
    case kCurCommentChars: return "cur-comment-chars";
    case kCurCommentWords: return "cur-comment-words";
    case kTextCharsDiffAdd: return "text-chars-diff-add";
    case kTextCharsDiffSub: return "text-chars-diff-sub";
    case kTextWordsDiffAdd: return "text-words-diff-add";
    case kTextWordsDiffSub: return "text-words-diff-sub";
    case kCommentCharsDiffAdd: return "comment-chars-diff-add";
    case kCommentCharsDiffSub: return "comment-chars-diff-sub";
    case kCommentWordsDiffAdd: return "comment-words-diff-add";
    case kCommentWordsDiffSub: return "comment-words-diff-sub";
    default:
      if (slot >= kIpOctetBase && slot < kIpOctetBase + 256) {
        return "ip-octet-" + std::to_string(slot - kIpOctetBase);
      }
      throw std::invalid_argument("bad ancillary slot " + std::to_string(slot));
  }
}

}  // namespace ancillary

namespace {

bool has_external_links_heading(const std::vector<std::string>& tokens) {
  if (tokens.size() < 4) return false;
  for (std::size_t i = 0; i + 3 < tokens.size(); ++i) {
    if (tokens[i] == "==" && tokens[i + 1] == "external" &&
        tokens[i + 2] == "links" && tokens[i + 3] == "==") {
      return true;
    }
  }
  return false;
}

void set_signed_pair(std::array<double, ancillary::kCount>& slots,
                     std::int32_t add_slot, std::int32_t sub_slot,
                     double delta) {
  if (delta > 0) {
    slots[add_slot] = delta;
  } else if (delta < 0) {
    slots[sub_slot] = -delta;
  }
}

}  // namespace

CaseAnalysis analyze_case(const RevisionCase& c, const RepetitionConfig& cfg) {
  const std::vector<std::string> prev_tokens = tokenize(c.prev_text, cfg);
  const std::vector<std::string> cur_tokens = tokenize(c.cur_text, cfg);
  const std::vector<std::string> comment_tokens = tokenize(c.comment, cfg);
  const TokenCounts prev_counts = count_tokens(prev_tokens);
  const TokenCounts cur_counts = count_tokens(cur_tokens);

  CaseAnalysis a;
  a.delta = word_delta(prev_counts, cur_counts);

  auto& m = a.metadata;
  m[ancillary::kEmptyText] = c.cur_text.empty() ? 1 : 0;
  m[ancillary::kHasComment] = c.comment.empty() ? 0 : 1;
  m[ancillary::kMinor] = c.minor ? 1 : 0;
  const bool links_changed =
      has_external_links_heading(prev_tokens) !=
          has_external_links_heading(cur_tokens) ||
      prev_counts.count("external") != cur_counts.count("external");
  m[ancillary::kExternalLinksChange] = links_changed ? 1 : 0;
  if (c.ip_octet1 < 0 || c.ip_octet1 > 255) {
    throw std::invalid_argument("ip_octet1 out of range: " +
                                std::to_string(c.ip_octet1));
  }
  m[ancillary::kIpOctetBase + c.ip_octet1] = 1;
  if (c.merged_count < 1) {
    throw std::invalid_argument("merged_count must be >= 1");
  }
  m[ancillary::kMergedCount] = c.merged_count - 1;

  const double prev_chars = static_cast<double>(c.prev_text.size());
  const double cur_chars = static_cast<double>(c.cur_text.size());
  const double comment_chars = static_cast<double>(c.comment.size());
  const double prev_words = static_cast<double>(prev_counts.total_tokens);
  const double cur_words = static_cast<double>(cur_counts.total_tokens);
  const double comment_words = static_cast<double>(comment_tokens.size());
  m[ancillary::kPrevTextChars] = prev_chars;
  m[ancillary::kPrevTextWords] = prev_words;
  m[ancillary::kCurTextChars] = cur_chars;
  m[ancillary::kCurTextWords] = cur_words;
  // Only the final comment of a collapsed run is retained, so the
  // previous-comment slots stay zero and the comment diffs reduce to the
  // current comment's counts.
  m[ancillary::kPrevCommentChars] = 0;
  m[ancillary::kPrevCommentWords] = 0;
  m[ancillary::kCurCommentChars] = comment_chars;
  m[ancillary::kCurCommentWords] = comment_words;
  set_signed_pair(m, ancillary::kTextCharsDiffAdd, ancillary::kTextCharsDiffSub,
                  cur_chars - prev_chars);
  set_signed_pair(m, ancillary::kTextWordsDiffAdd, ancillary::kTextWordsDiffSub,
                  cur_words - prev_words);
  set_signed_pair(m, ancillary::kCommentCharsDiffAdd,
                  ancillary::kCommentCharsDiffSub, comment_chars);
  set_signed_pair(m, ancillary::kCommentWordsDiffAdd,
                  ancillary::kCommentWordsDiffSub, comment_words);
  return a;
}

VocabMap VocabMap::build(const std::vector<CaseAnalysis>& analyses) {
  std::set<std::string> words;
  for (const CaseAnalysis& a : analyses) {
    for (const auto& [w, d] : a.delta.diff) words.insert(w);
  }
  return from_words(std::vector<std::string>(words.begin(), words.end()));
}

VocabMap VocabMap::from_words(std::vector<std::string> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  VocabMap v;
  v.words_ = std::move(words);
  v.ids_.reserve(v.words_.size());
  for (std::size_t i = 0; i < v.words_.size(); ++i) {
    v.ids_.emplace(v.words_[i], static_cast<std::int32_t>(i));
  }
  return v;
}

std::optional<std::int32_t> VocabMap::base_id(const std::string& word) const {
  const auto it = ids_.find(word);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

void VocabMap::save(const std::filesystem::path& path,
                    const std::string& comment) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "# vocabulary: <base_id>\\t<word>, word escaped (\\\\ \\t \\n \\r)\n";
  out << "# word feature ids: 4*base_id + {0: diff-add, 1: diff-sub, "
         "2: ratio-pos, 3: ratio-neg}\n";
  out << "# metadata block offset: " << ancillary_offset() << " ("
      << "4 * " << word_count() << " words)\n";
  out << "# metadata slots (relative to offset):\n";
  out << "#   0 empty-text, 1 has-comment, 2 minor-edit, "
         "3 external-links-change,\n";
  out << "#   4..259 ip-octet one-hot, 260 merged-count-minus-1,\n";
  out << "#   261..268 prev/cur text and comment char/word counts,\n";
  out << "#   269..276 sign-split char/word count diffs\n";
  for (std::size_t i = 0; i < words_.size(); ++i) {
    out << i << '\t' << escape_tsv(words_[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

VocabMap VocabMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::pair<std::int32_t, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path.string() + " line " +
                               std::to_string(line_no) + ": missing tab");
    }
    errno = 0;
    char* end = nullptr;
    const long id = std::strtol(line.c_str(), &end, 10);
    if (errno != 0 || end != line.c_str() + tab || id < 0) {
      throw std::runtime_error(path.string() + " line " +
                               std::to_string(line_no) + ": bad base id");
    }
    rows.emplace_back(static_cast<std::int32_t>(id),
                      unescape_tsv(line.substr(tab + 1)));
  }
  std::sort(rows.begin(), rows.end());
  VocabMap v;
  v.words_.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != static_cast<std::int32_t>(i)) {
      throw std::runtime_error(path.string() +
                               ": base ids are not exactly 0..n-1");
    }
    v.words_.push_back(rows[i].second);
  }
  for (std::size_t i = 1; i < v.words_.size(); ++i) {
    if (v.words_[i - 1] >= v.words_[i]) {
      throw std::runtime_error(path.string() +
                               ": words not in sorted order or duplicated");
    }
  }
  v.ids_.reserve(v.words_.size());
  for (std::size_t i = 0; i < v.words_.size(); ++i) {
    v.ids_.emplace(v.words_[i], static_cast<std::int32_t>(i));
  }
  return v;
}

std::string to_string(ScalingKind kind) {
  switch (kind) {
    case ScalingKind::kAtan: return "atan";
    case ScalingKind::kBinary: return "binary";
    case ScalingKind::kLogLin: return "log-lin";
  }
  throw std::invalid_argument("bad scaling kind");
}

ScalingKind scaling_kind_from_string(const std::string& name) {
  if (name == "atan") return ScalingKind::kAtan;
  if (name == "binary") return ScalingKind::kBinary;
  if (name == "log-lin") return ScalingKind::kLogLin;
  throw std::invalid_argument("unknown scaling kind '" + name + "'");
}

ScalingSpec ScalingSpec::fit(ScalingKind kind,
                             const std::vector<SparseVector>& raw_training) {
  ScalingSpec spec(kind);
  if (kind != ScalingKind::kLogLin) return spec;
  if (raw_training.empty()) {
    throw std::invalid_argument("log-lin scaling needs a nonempty training set");
  }
  for (const SparseVector& v : raw_training) {
    for (const SparseEntry& e : v) {
      auto [it, inserted] = spec.max_.emplace(e.id, e.value);
      if (!inserted) it->second = std::max(it->second, e.value);
    }
  }
  return spec;
}

double ScalingSpec::scale(std::int32_t feature_id, double x) const {
  switch (kind_) {
    case ScalingKind::kAtan:
      return std::atan(x) * 2.0 / std::numbers::pi;
    case ScalingKind::kBinary:
      return x > 0 ? 1.0 : 0.0;
    case ScalingKind::kLogLin: {
      const auto it = max_.find(feature_id);
      if (it == max_.end()) return x > 0 ? 1.0 : 0.0;
      if (x > it->second) return 1.0;
      return std::log1p(x) / std::log1p(it->second);
    }
  }
  throw std::invalid_argument("bad scaling kind");
}

void ScalingSpec::save(const std::filesystem::path& path,
                       const std::string& comment) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "scaling " << to_string(kind_) << '\n';
  std::vector<std::pair<std::int32_t, double>> rows(max_.begin(), max_.end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [id, mx] : rows) {
    out << id << '\t' << format_g17(mx) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ScalingSpec ScalingSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    break;
  }
  if (!line.starts_with("scaling ")) {
    throw std::runtime_error(path.string() + ": missing 'scaling <kind>' line");
  }
  ScalingSpec spec(scaling_kind_from_string(line.substr(8)));
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::int32_t id = -1;
    double mx = 0;
    if (!(fields >> id >> mx) || id < 0 || mx <= 0) {
      throw std::runtime_error(path.string() + " line " +
                               std::to_string(line_no) + ": bad max entry");
    }
    if (!spec.max_.emplace(id, mx).second) {
      throw std::runtime_error(path.string() + " line " +
                               std::to_string(line_no) + ": duplicate id");
    }
  }
  if (spec.kind_ != ScalingKind::kLogLin && !spec.max_.empty()) {
    throw std::runtime_error(path.string() +
                             ": max entries only valid for log-lin");
  }
  return spec;
}

SparseVector assemble_raw(const CaseAnalysis& analysis, const VocabMap& vocab) {
  std::vector<SparseEntry> entries;
  for (const auto& [word, v] : sign_split(analysis.delta)) {
    const auto base = vocab.base_id(word);
    if (!base) continue;
    if (v.diff_add > 0)
      entries.push_back({VocabMap::slot_id(*base, SlotKind::kDiffAdd),
                         v.diff_add});
    if (v.diff_sub > 0)
      entries.push_back({VocabMap::slot_id(*base, SlotKind::kDiffSub),
                         v.diff_sub});
    if (v.ratio_pos > 0)
      entries.push_back({VocabMap::slot_id(*base, SlotKind::kRatioPos),
                         v.ratio_pos});
    if (v.ratio_neg > 0)
      entries.push_back({VocabMap::slot_id(*base, SlotKind::kRatioNeg),
                         v.ratio_neg});
  }
  const std::int32_t offset = vocab.ancillary_offset();
  for (std::int32_t i = 0; i < ancillary::kCount; ++i) {
    if (analysis.metadata[i] != 0) {
      entries.push_back({offset + i, analysis.metadata[i]});
    }
  }
  return SparseVector::from_entries(std::move(entries));
}

SparseVector apply_scaling(const SparseVector& raw, const ScalingSpec& scaling,
                           std::int32_t ancillary_offset) {
  SparseVector out;
  const bool drop_ratio = scaling.kind() == ScalingKind::kBinary;
  for (const SparseEntry& e : raw) {
    if (drop_ratio && e.id < ancillary_offset && e.id % 4 >= 2) continue;
    out.push_back(e.id, scaling.scale(e.id, e.value));
  }
  return out;
}

LabeledInstance assemble(const RevisionCase& c, const VocabMap& vocab,
                         const ScalingSpec& scaling,
                         const RepetitionConfig& cfg) {
  LabeledInstance inst;
  inst.features = apply_scaling(assemble_raw(analyze_case(c, cfg), vocab),
                                scaling, vocab.ancillary_offset());
  inst.label = c.vandalism ? 1 : -1;
  return inst;
}

}  // namespace vandet
