#include "vandet/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "vandet/text.hpp"

namespace vandet {

std::optional<std::array<std::uint8_t, 4>> parse_ipv4(std::string_view s) {
  std::array<std::uint8_t, 4> octets{};
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    if (i > 0) {
      if (pos >= s.size() || s[pos] != '.') return std::nullopt;
      ++pos;
    }
    const std::size_t start = pos;
    unsigned value = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      value = value * 10 + static_cast<unsigned>(s[pos] - '0');
      if (value > 255 || pos - start >= 3) return std::nullopt;
      ++pos;
    }
    if (pos == start) return std::nullopt;
    octets[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(value);
  }
  if (pos != s.size()) return std::nullopt;
  return octets;
}

bool is_anonymous(const RawRevision& rev) {
  return rev.editor_is_ip && parse_ipv4(rev.editor).has_value();
}

RevertFlags detect_reverts(const std::vector<RawRevision>& revisions,
                           int window) {
  if (window < 2) throw std::invalid_argument("revert window must be >= 2");
  const std::size_t n = revisions.size();
  RevertFlags flags;
  flags.revert.assign(n, false);
  flags.damaging.assign(n, false);

  std::vector<std::uint64_t> hashes(n);
  for (std::size_t i = 0; i < n; ++i) hashes[i] = fnv1a64(revisions[i].text);

  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t lo = k >= static_cast<std::size_t>(window)
                               ? k - static_cast<std::size_t>(window)
                               : 0;
    // Most recent matching earlier revision; nested reverts then compose
    // instead of overlapping.
    for (std::size_t i = k; i-- > lo;) {
      if (hashes[i] != hashes[k] || revisions[i].text != revisions[k].text)
        continue;
      flags.revert[k] = true;
      for (std::size_t j = i + 1; j < k; ++j) flags.damaging[j] = true;
      break;
    }
  }
  return flags;
}

std::vector<RevisionCase> build_cases(const PageHistory& page,
                                      const RevertFlags& flags) {
  const auto& revs = page.revisions;
  std::vector<RevisionCase> cases;
  std::size_t i = 0;
  while (i < revs.size()) {
    if (!is_anonymous(revs[i])) {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < revs.size() && is_anonymous(revs[end]) &&
           revs[end].editor == revs[i].editor)
      ++end;

    // Runs containing the page-creation revision have no predecessor text.
    if (i > 0) {
      const RawRevision& last = revs[end - 1];
      RevisionCase c;
      c.page_id = page.page_id;
      // Sanitized here so every consumer (JSON, tokenizer, counts) sees the
      // same valid UTF-8; revert matching above still uses the raw bytes.
      c.prev_text = sanitize_utf8(revs[i - 1].text);
      c.cur_text = sanitize_utf8(last.text);
      c.comment = sanitize_utf8(last.comment);
      c.minor = last.minor;
      c.ip_octet1 = (*parse_ipv4(revs[i].editor))[0];
      c.merged_count = static_cast<int>(end - i);
      bool all_damaging = true;
      for (std::size_t j = i; j < end; ++j)
        all_damaging = all_damaging && flags.damaging[j];
      c.vandalism = all_damaging;
      if (c.cur_text != c.prev_text) cases.push_back(std::move(c));
    }
    i = end;
  }
  return cases;
}

namespace {

// Elements of the dump subset we care about; everything else is skipped.
struct RevisionAccumulator {
  RawRevision rev;
  bool has_text = false;
  bool has_timestamp = false;
};

}  // namespace

DumpReader::DumpReader(std::unique_ptr<ByteSource> source)
    : reader_(std::move(source)) {}

std::optional<PageHistory> DumpReader::next_page() {
  if (done_) return std::nullopt;

  PageHistory page;
  bool in_page = false;
  bool page_has_id = false;
  int depth_in_page = 0;

  // Path tracking within a <page>.
  std::vector<std::string> path;
  RevisionAccumulator acc;
  std::string* text_target = nullptr;
  std::string element_text;

  auto path_is = [&path](std::initializer_list<const char*> want) {
    if (path.size() != want.size()) return false;
    std::size_t i = 0;
    for (const char* w : want)
      if (path[i++] != w) return false;
    return true;
  };

  while (true) {
    XmlEvent ev = reader_.next();
    switch (ev.kind) {
      case XmlEvent::Kind::EndOfDocument:
        done_ = true;
        return std::nullopt;

      case XmlEvent::Kind::StartElement:
        if (!in_page) {
          if (ev.value == "page") {
            in_page = true;
            depth_in_page = 0;
            page = PageHistory{};
            page_has_id = false;
          }
          break;
        }
        ++depth_in_page;
        path.push_back(ev.value);
        element_text.clear();
        text_target = nullptr;
        if (path_is({"id"}) || path_is({"revision", "id"}) ||
            path_is({"revision", "timestamp"}) ||
            path_is({"revision", "comment"}) ||
            path_is({"revision", "text"}) ||
            path_is({"revision", "contributor", "username"}) ||
            path_is({"revision", "contributor", "ip"}))
          text_target = &element_text;
        if (path_is({"revision"})) acc = RevisionAccumulator{};
        if (path_is({"revision", "minor"})) acc.rev.minor = true;
        break;

      case XmlEvent::Kind::Text:
        if (text_target) *text_target += ev.value;
        break;

      case XmlEvent::Kind::EndElement:
        if (!in_page) break;
        if (ev.value == "page" && depth_in_page == 0) {
          ++pages_read_;
          std::stable_sort(page.revisions.begin(), page.revisions.end(),
                           [](const RawRevision& a, const RawRevision& b) {
                             return a.timestamp < b.timestamp;
                           });
          if (!page_has_id) page.page_id = 0;
          return page;
        }
        if (path_is({"id"})) {
          std::int64_t v = 0;
          std::from_chars(element_text.data(),
                          element_text.data() + element_text.size(), v);
          page.page_id = v;
          page_has_id = true;
        } else if (path_is({"revision", "id"})) {
          std::from_chars(element_text.data(),
                          element_text.data() + element_text.size(),
                          acc.rev.revision_id);
        } else if (path_is({"revision", "timestamp"})) {
          acc.rev.timestamp = element_text;
          acc.has_timestamp = true;
        } else if (path_is({"revision", "comment"})) {
          acc.rev.comment = element_text;
        } else if (path_is({"revision", "text"})) {
          acc.rev.text = element_text;
          acc.has_text = true;
        } else if (path_is({"revision", "contributor", "username"})) {
          acc.rev.editor = element_text;
          acc.rev.editor_is_ip = false;
        } else if (path_is({"revision", "contributor", "ip"})) {
          acc.rev.editor = element_text;
          acc.rev.editor_is_ip = true;
        } else if (path_is({"revision"})) {
          ++revisions_read_;
          // A <text/> element may legitimately be empty, but a revision with
          // no text or timestamp element at all is unusable.
          if (acc.has_text && acc.has_timestamp)
            page.revisions.push_back(std::move(acc.rev));
          else
            ++skipped_revisions_;
        }
        if (!path.empty()) path.pop_back();
        --depth_in_page;
        text_target = nullptr;
        break;
    }
  }
}

std::vector<RevisionCase> ingest_stream(std::unique_ptr<ByteSource> source,
                                        const IngestOptions& options,
                                        IngestStats* stats) {
  DumpReader reader(std::move(source));
  std::vector<RevisionCase> cases;
  while (auto page = reader.next_page()) {
    const RevertFlags flags = detect_reverts(page->revisions, options.window);
    auto page_cases = build_cases(*page, flags);
    cases.insert(cases.end(), std::make_move_iterator(page_cases.begin()),
                 std::make_move_iterator(page_cases.end()));
  }
  if (stats) {
    stats->pages = reader.pages_read();
    stats->revisions = reader.revisions_read();
    stats->skipped_revisions = reader.skipped_revisions();
    stats->cases = cases.size();
    stats->vandalism_cases = 0;
    for (const auto& c : cases)
      if (c.vandalism) ++stats->vandalism_cases;
  }
  return cases;
}

void write_cases_jsonl(std::ostream& out,
                       const std::vector<RevisionCase>& cases) {
  for (const auto& c : cases) {
    nlohmann::json j;
    j["page_id"] = c.page_id;
    j["prev_text"] = c.prev_text;
    j["cur_text"] = c.cur_text;
    j["comment"] = c.comment;
    j["ip_octet1"] = c.ip_octet1;
    j["minor"] = c.minor;
    j["merged_count"] = c.merged_count;
    j["label"] = c.vandalism ? "vandalism" : "legitimate";
    out << j.dump() << '\n';
  }
}

std::vector<RevisionCase> read_cases_jsonl(std::istream& in) {
  std::vector<RevisionCase> cases;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("cases line " + std::to_string(line_no) + ": " +
                               e.what());
    }
    if (!j.contains("page_id")) continue;  // provenance/header records
    RevisionCase c;
    c.page_id = j.at("page_id").get<std::int64_t>();
    c.prev_text = j.at("prev_text").get<std::string>();
    c.cur_text = j.at("cur_text").get<std::string>();
    c.comment = j.at("comment").get<std::string>();
    c.ip_octet1 = j.at("ip_octet1").get<int>();
    c.minor = j.at("minor").get<bool>();
    c.merged_count = j.at("merged_count").get<int>();
    c.vandalism = j.at("label").get<std::string>() == "vandalism";
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace vandet
