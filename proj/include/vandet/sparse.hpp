#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace vandet {

struct SparseEntry {
  std::int32_t id;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Ordered sparse vector: feature ids strictly increasing, zero values never
/// stored.
class SparseVector {
 public:
  SparseVector() = default;

  /// Builds from possibly-unsorted entries; drops exact zeros, rejects
  /// duplicate ids.
  static SparseVector from_entries(std::vector<SparseEntry> entries);

  /// Appends an entry with id greater than any present; zero values are
  /// dropped.
  void push_back(std::int32_t id, double value);

  const std::vector<SparseEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// -1 when empty.
  std::int32_t max_id() const {
    return entries_.empty() ? -1 : entries_.back().id;
  }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::vector<SparseEntry> entries_;
};

/// Label is +1 (vandalism) or -1 (legitimate).
struct LabeledInstance {
  SparseVector features;
  int label = -1;
};

/// `<label> <id>:<value> ...` lines, ids ascending, values %.9g. Lines
/// starting with `#` are comments; a nonempty `comment` is written as one.
void write_instances(std::ostream& out,
                     const std::vector<LabeledInstance>& instances);
void save_instances(const std::filesystem::path& path,
                    const std::vector<LabeledInstance>& instances,
                    const std::string& comment = {});
std::vector<LabeledInstance> read_instances(std::istream& in);
std::vector<LabeledInstance> load_instances(const std::filesystem::path& path);

/// Highest feature id across instances, plus one.
std::int32_t infer_feature_count(const std::vector<LabeledInstance>& instances);

}  // namespace vandet
