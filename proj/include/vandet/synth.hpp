#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace vandet {

/// Knobs for the generated revision-history corpus. Each page starts with a
/// registered creator revision, then a sequence of anonymous edit runs;
/// vandal runs are immediately reverted by a registered patroller.
struct SynthParams {
  int pages = 2000;
  double vandalism_rate = 0.43;  // probability an anonymous run is vandalism
  int base_vocab = 800;          // everyday word pool size
  int vandal_vocab = 40;         // junk word pool size
  int min_runs_per_page = 8;     // anonymous runs per page, uniform range
  int max_runs_per_page = 16;
  std::uint64_t seed = 0;
};

/// One ground-truth record per anonymous run, in page order; case_index
/// counts that page's runs from 0 and matches the ingest case order.
struct SynthStats {
  long pages = 0;
  long revisions = 0;
  long runs = 0;
  long vandal_runs = 0;
};

/// Writes the revision-history XML to xml_out and JSONL ground truth
/// ({"page_id", "case_index", "label"}) to truth_out.
SynthStats synth_corpus(const SynthParams& params, std::ostream& xml_out,
                        std::ostream& truth_out);

SynthStats synth_corpus_files(const SynthParams& params,
                              const std::filesystem::path& xml_path,
                              const std::filesystem::path& truth_path);

}  // namespace vandet
