#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vandet/xml.hpp"

namespace vandet {

struct RawRevision {
  std::int64_t revision_id = 0;
  std::string timestamp;  // ISO-8601, sorts chronologically as a string
  std::string editor;     // username or IP literal
  bool editor_is_ip = false;
  std::string comment;
  bool minor = false;
  std::string text;
};

struct PageHistory {
  std::int64_t page_id = 0;
  std::vector<RawRevision> revisions;  // timestamp ascending
};

/// One labeled training example: a collapsed run of consecutive revisions by
/// one anonymous editor.
struct RevisionCase {
  std::int64_t page_id = 0;
  std::string prev_text;
  std::string cur_text;
  std::string comment;  // comment of the last revision in the run
  int ip_octet1 = 0;
  bool minor = false;  // minor flag of the last revision in the run
  int merged_count = 1;
  bool vandalism = false;
};

/// Dotted-quad IPv4 with all octets in 0..255, else nullopt.
std::optional<std::array<std::uint8_t, 4>> parse_ipv4(std::string_view s);

/// True when the revision counts as anonymous: contributor came from an <ip>
/// element and the value is a well-formed IPv4 address. IPv6 and unparsable
/// strings are excluded.
bool is_anonymous(const RawRevision& rev);

struct RevertFlags {
  std::vector<bool> revert;    // text identical to an earlier in-window text
  std::vector<bool> damaging;  // strictly between a matched pair
};

/// Flags reverts by exact text equality against the previous `window`
/// revisions (64-bit hash candidate match confirmed byte-wise). Revisions
/// strictly between the matched earlier revision and the revert are flagged
/// damaging. window must be >= 2.
RevertFlags detect_reverts(const std::vector<RawRevision>& revisions,
                           int window);

/// Collapses maximal runs of consecutive anonymous-editor revisions into
/// cases. A run is vandalism iff every revision in it is flagged damaging.
/// Runs that include the page's first revision (no predecessor text) and
/// runs whose before/after texts are equal are dropped.
std::vector<RevisionCase> build_cases(const PageHistory& page,
                                      const RevertFlags& flags);

/// Streams pages out of a dump, one page in memory at a time. Revisions
/// missing a <text> or <timestamp> element are skipped with a warning
/// counter; revisions arriving out of timestamp order are sorted.
class DumpReader {
 public:
  explicit DumpReader(std::unique_ptr<ByteSource> source);

  std::optional<PageHistory> next_page();

  std::uint64_t pages_read() const { return pages_read_; }
  std::uint64_t revisions_read() const { return revisions_read_; }
  std::uint64_t skipped_revisions() const { return skipped_revisions_; }

 private:
  XmlReader reader_;
  bool done_ = false;
  std::uint64_t pages_read_ = 0;
  std::uint64_t revisions_read_ = 0;
  std::uint64_t skipped_revisions_ = 0;
};

struct IngestOptions {
  int window = 10;
};

struct IngestStats {
  std::uint64_t pages = 0;
  std::uint64_t revisions = 0;
  std::uint64_t skipped_revisions = 0;
  std::uint64_t cases = 0;
  std::uint64_t vandalism_cases = 0;
};

/// Full ingest pass: parse, detect reverts, build cases.
std::vector<RevisionCase> ingest_stream(std::unique_ptr<ByteSource> source,
                                        const IngestOptions& options,
                                        IngestStats* stats = nullptr);

/// One JSON object per line, UTF-8.
void write_cases_jsonl(std::ostream& out,
                       const std::vector<RevisionCase>& cases);
std::vector<RevisionCase> read_cases_jsonl(std::istream& in);

}  // namespace vandet
