#include "vandet/synth.hpp"

#include <algorithm>
#include <ctime>
#include <deque>
#include <fstream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vandet/rng.hpp"

namespace vandet {

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Pronounceable pseudo-words, deduplicated against everything already used.
class WordFactory {
 public:
  explicit WordFactory(Rng& rng) : rng_(rng) {
    used_.insert("external");  // reserved for the links-section heading
    used_.insert("links");
  }

  std::string make() {
    static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l",
                                              "m", "n", "p", "r", "s", "t",
                                              "v", "z", "st", "tr", "pl"};
    static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai",
                                              "ou"};
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::string w;
      const int syllables = 2 + static_cast<int>(rng_.uniform_below(3));
      for (int s = 0; s < syllables; ++s) {
        w += kOnsets[rng_.uniform_below(std::size(kOnsets))];
        w += kVowels[rng_.uniform_below(std::size(kVowels))];
      }
      if (used_.insert(w).second) return w;
    }
    std::string w = "word" + std::to_string(counter_++);
    used_.insert(w);
    return w;
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
  long counter_ = 0;
};

std::string format_timestamp(long long epoch_seconds) {
  const std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Skewed toward low indices so a few words dominate, like real prose.
std::size_t zipfish(Rng& rng, std::size_t n) {
  const double u = rng.uniform01();
  auto idx = static_cast<std::size_t>(u * u * static_cast<double>(n));
  return idx < n ? idx : n - 1;
}

constexpr const char* kTextureTokens[] = {
    ",", ".", "==", "[[", "]]", "|", "'''", "<br>",
    "http://example.org/more"};

constexpr const char* kLegitComments[] = {
    "fixed typo",      "added details",   "copyedit",
    "updated links",   "minor cleanup",   "expanded section",
    "reworded intro",  "added reference"};

constexpr const char* kVandalComments[] = {"lol", "hahaha", "best page ever",
                                           "edited lol"};

// First octets that the planted vandals favour, giving the one-hot IP
// features something to pick up.
constexpr int kVandalOctets[] = {24, 62, 196, 205};

class Generator {
 public:
  Generator(const SynthParams& p, std::ostream& xml, std::ostream& truth)
      : params_(p), rng_(p.seed), words_(rng_), xml_(xml), truth_(truth) {
    if (p.pages < 1 || p.base_vocab < 10 || p.vandal_vocab < 1 ||
        p.min_runs_per_page < 1 || p.max_runs_per_page < p.min_runs_per_page ||
        !(p.vandalism_rate >= 0 && p.vandalism_rate <= 1)) {
      throw std::invalid_argument("bad corpus parameters");
    }
    base_.reserve(p.base_vocab);
    for (int i = 0; i < p.base_vocab; ++i) base_.push_back(words_.make());
    vandal_.reserve(p.vandal_vocab);
    for (int i = 0; i < p.vandal_vocab; ++i) vandal_.push_back(words_.make());
  }

  SynthStats run() {
    xml_ << "<mediawiki>\n";
    for (int p = 1; p <= params_.pages; ++p) emit_page(p);
    xml_ << "</mediawiki>\n";
    stats_.pages = params_.pages;
    return stats_;
  }

 private:
  std::string base_word() { return base_[zipfish(rng_, base_.size())]; }
  std::string vandal_word() { return vandal_[zipfish(rng_, vandal_.size())]; }

  std::string make_ip(bool vandal, const std::string& avoid) {
    for (;;) {
      int octet1;
      if (vandal && rng_.bernoulli(0.6)) {
        octet1 = kVandalOctets[rng_.uniform_below(std::size(kVandalOctets))];
      } else {
        octet1 = 1 + static_cast<int>(rng_.uniform_below(223));
      }
      std::string ip = std::to_string(octet1);
      for (int k = 0; k < 3; ++k) {
        ip += '.';
        ip += std::to_string(rng_.uniform_below(256));
      }
      if (ip != avoid) return ip;
    }
  }

  void insert_at_random(std::vector<std::string>& tokens, std::string word) {
    const std::size_t pos = rng_.uniform_below(tokens.size() + 1);
    tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                  std::move(word));
  }

  void legit_edit(std::vector<std::string>& tokens) {
    const int inserts = 1 + static_cast<int>(rng_.uniform_below(15));
    for (int i = 0; i < inserts; ++i) {
      if (rng_.bernoulli(0.05)) {
        insert_at_random(tokens,
                         kTextureTokens[rng_.uniform_below(
                             std::size(kTextureTokens))]);
      } else {
        insert_at_random(tokens, base_word());
      }
    }
    if (rng_.bernoulli(0.03)) {
      // A genuine external-links section.
      tokens.insert(tokens.end(),
                    {"==", "external", "links", "==", base_word()});
    }
    if (rng_.bernoulli(0.4)) {
      const int removals = 1 + static_cast<int>(rng_.uniform_below(10));
      for (int i = 0; i < removals && tokens.size() > 5; ++i) {
        tokens.erase(tokens.begin() +
                     static_cast<std::ptrdiff_t>(
                         rng_.uniform_below(tokens.size())));
      }
    }
    if (rng_.bernoulli(0.08)) {
      // Good-faith editors sometimes quote the junk they are writing about.
      const int k = 1 + static_cast<int>(rng_.uniform_below(2));
      for (int i = 0; i < k; ++i) insert_at_random(tokens, vandal_word());
    }
  }

  void vandal_insert(std::vector<std::string>& tokens, bool subtle) {
    if (subtle) {
      const int k = 1 + static_cast<int>(rng_.uniform_below(2));
      for (int i = 0; i < k; ++i) insert_at_random(tokens, vandal_word());
      return;
    }
    const int k = 3 + static_cast<int>(rng_.uniform_below(18));
    for (int i = 0; i < k; ++i) {
      insert_at_random(tokens,
                       rng_.bernoulli(0.8) ? vandal_word() : base_word());
    }
    if (rng_.bernoulli(0.3)) {
      const std::string w = vandal_word();
      const int reps = 2 + static_cast<int>(rng_.uniform_below(4));
      for (int i = 0; i < reps; ++i) insert_at_random(tokens, w);
    }
  }

  void vandal_blob(std::vector<std::string>& tokens) {
    // A glued repetition ("hahahaha") plus shouted repeats.
    static constexpr const char* kUnits[] = {"ha", "lo", "yo", "zz"};
    const std::string unit = kUnits[rng_.uniform_below(std::size(kUnits))];
    const int glued = 4 + static_cast<int>(rng_.uniform_below(5));
    std::string blob;
    for (int i = 0; i < glued; ++i) blob += unit;
    tokens.push_back(blob);
    const std::string w = vandal_word();
    const int reps = 3 + static_cast<int>(rng_.uniform_below(4));
    for (int i = 0; i < reps; ++i) tokens.push_back(w);
  }

  void vandal_edit(std::vector<std::string>& tokens,
                   const std::deque<std::string>& recent) {
    const bool subtle = rng_.bernoulli(0.15);
    const double action = rng_.uniform01();
    if (!subtle && action < 0.15 &&
        std::find(recent.begin(), recent.end(), std::string()) ==
            recent.end()) {
      tokens.clear();  // page blanking
    } else if (!subtle && action < 0.30) {
      vandal_blob(tokens);
    } else {
      vandal_insert(tokens, subtle);
    }
  }

  void write_revision(const std::string& editor, bool anonymous,
                      const std::string& comment, bool minor,
                      const std::string& text) {
    ++stats_.revisions;
    timestamp_ += 60 + static_cast<long long>(rng_.uniform_below(600));
    xml_ << "    <revision>\n";
    xml_ << "      <id>" << ++revision_id_ << "</id>\n";
    xml_ << "      <timestamp>" << format_timestamp(timestamp_)
         << "</timestamp>\n";
    xml_ << "      <contributor>" << (anonymous ? "<ip>" : "<username>")
         << escape_xml(editor) << (anonymous ? "</ip>" : "</username>")
         << "</contributor>\n";
    if (minor) xml_ << "      <minor/>\n";
    if (!comment.empty()) {
      xml_ << "      <comment>" << escape_xml(comment) << "</comment>\n";
    }
    xml_ << "      <text>" << escape_xml(text) << "</text>\n";
    xml_ << "    </revision>\n";
  }

  void emit_page(int page_id) {
    xml_ << "  <page>\n";
    xml_ << "    <id>" << page_id << "</id>\n";
    xml_ << "    <title>Synth page " << page_id << "</title>\n";

    std::vector<std::string> tokens;
    const int initial = 30 + static_cast<int>(rng_.uniform_below(51));
    for (int i = 0; i < initial; ++i) tokens.push_back(base_word());
    std::deque<std::string> recent;
    auto remember = [&recent](const std::string& text) {
      recent.push_back(text);
      if (recent.size() > 12) recent.pop_front();
    };

    std::string current = join(tokens);
    write_revision("Creator_" + std::to_string(page_id), false, "created page",
                   false, current);
    remember(current);

    const int runs =
        params_.min_runs_per_page +
        static_cast<int>(rng_.uniform_below(static_cast<std::uint64_t>(
            params_.max_runs_per_page - params_.min_runs_per_page + 1)));
    std::string adjacent_ip;  // previous run's IP when no revert intervened
    int case_index = 0;
    for (int r = 0; r < runs; ++r) {
      const bool vandal = rng_.bernoulli(params_.vandalism_rate);
      const int run_length = rng_.bernoulli(0.15) ? 2 : 1;
      const std::string ip = make_ip(vandal, adjacent_ip);
      const std::vector<std::string> snapshot = tokens;

      for (int j = 0; j < run_length; ++j) {
        if (vandal) {
          vandal_edit(tokens, recent);
        } else {
          legit_edit(tokens);
        }
        current = join(tokens);
        while (std::find(recent.begin(), recent.end(), current) !=
               recent.end()) {
          tokens.push_back(base_word());  // avoid an accidental revert
          current = join(tokens);
        }
        std::string comment;
        if (vandal ? rng_.bernoulli(0.15) : rng_.bernoulli(0.75)) {
          comment = vandal ? kVandalComments[rng_.uniform_below(
                                 std::size(kVandalComments))]
                           : kLegitComments[rng_.uniform_below(
                                 std::size(kLegitComments))];
        }
        const bool minor =
            vandal ? rng_.bernoulli(0.05) : rng_.bernoulli(0.2);
        write_revision(ip, true, comment, minor, current);
        remember(current);
      }

      truth_ << nlohmann::json{{"page_id", page_id},
                               {"case_index", case_index},
                               {"label", vandal ? 1 : 0}}
                    .dump()
             << '\n';
      ++case_index;
      ++stats_.runs;
      if (vandal) ++stats_.vandal_runs;

      if (vandal) {
        tokens = snapshot;
        current = join(tokens);
        write_revision(
            "Patrol_" + std::to_string(rng_.uniform_below(5)), false,
            rng_.bernoulli(0.8) ? "rv" : "reverted vandalism",
            rng_.bernoulli(0.5), current);
        remember(current);
        adjacent_ip.clear();  // registered revision separates the runs
      } else {
        adjacent_ip = ip;
      }
    }
    xml_ << "  </page>\n";
  }

  const SynthParams& params_;
  Rng rng_;
  WordFactory words_;
  std::ostream& xml_;
  std::ostream& truth_;
  std::vector<std::string> base_;
  std::vector<std::string> vandal_;
  long revision_id_ = 0;
  long long timestamp_ = 1204329600;  // 2008-03-01T00:00:00Z
  SynthStats stats_;
};

}  // namespace

SynthStats synth_corpus(const SynthParams& params, std::ostream& xml_out,
                        std::ostream& truth_out) {
  Generator gen(params, xml_out, truth_out);
  return gen.run();
}

SynthStats synth_corpus_files(const SynthParams& params,
                              const std::filesystem::path& xml_path,
                              const std::filesystem::path& truth_path) {
  std::ofstream xml(xml_path);
  if (!xml) throw std::runtime_error("cannot open " + xml_path.string());
  std::ofstream truth(truth_path);
  if (!truth) throw std::runtime_error("cannot open " + truth_path.string());
  const SynthStats stats = synth_corpus(params, xml, truth);
  if (!xml || !truth) {
    throw std::runtime_error("write failed for synthetic corpus");
  }
  return stats;
}

}  // namespace vandet
