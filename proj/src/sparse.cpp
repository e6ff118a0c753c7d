#include "vandet/sparse.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vandet/text.hpp"

namespace vandet {

SparseVector SparseVector::from_entries(std::vector<SparseEntry> entries) {
  std::erase_if(entries, [](const SparseEntry& e) { return e.value == 0.0; });
  std::sort(entries.begin(), entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.id < b.id; });
  if (!entries.empty() && entries.front().id < 0)
    throw std::invalid_argument("negative feature id");
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].id == entries[i - 1].id) {
      throw std::invalid_argument("duplicate feature id " +
                                  std::to_string(entries[i].id));
    }
  }
  SparseVector v;
  v.entries_ = std::move(entries);
  return v;
}

void SparseVector::push_back(std::int32_t id, double value) {
  if (id < 0) throw std::invalid_argument("negative feature id");
  if (!entries_.empty() && id <= entries_.back().id) {
    throw std::invalid_argument("feature ids must be strictly increasing");
  }
  if (value == 0.0) return;
  entries_.push_back({id, value});
}

void write_instances(std::ostream& out,
                     const std::vector<LabeledInstance>& instances) {
  for (const LabeledInstance& inst : instances) {
    out << (inst.label > 0 ? "+1" : "-1");
    for (const SparseEntry& e : inst.features) {
      out << ' ' << e.id << ':' << format_g9(e.value);
    }
    out << '\n';
  }
}

void save_instances(const std::filesystem::path& path,
                    const std::vector<LabeledInstance>& instances,
                    const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  write_instances(out, instances);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " +
                           what);
}

}  // namespace

std::vector<LabeledInstance> read_instances(std::istream& in) {
  std::vector<LabeledInstance> instances;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string tok;
    if (!(fields >> tok)) continue;
    LabeledInstance inst;
    if (tok == "+1" || tok == "1") {
      inst.label = 1;
    } else if (tok == "-1") {
      inst.label = -1;
    } else {
      parse_fail(line_no, "bad label '" + tok + "'");
    }
    while (fields >> tok) {
      std::size_t colon = tok.find(':');
      if (colon == std::string::npos) parse_fail(line_no, "missing ':' in '" + tok + "'");
      errno = 0;
      char* end = nullptr;
      long id = std::strtol(tok.c_str(), &end, 10);
      if (errno != 0 || end != tok.c_str() + colon || id < 0) {
        parse_fail(line_no, "bad feature id in '" + tok + "'");
      }
      errno = 0;
      double value = std::strtod(tok.c_str() + colon + 1, &end);
      if (errno != 0 || *end != '\0') {
        parse_fail(line_no, "bad feature value in '" + tok + "'");
      }
      try {
        inst.features.push_back(static_cast<std::int32_t>(id), value);
      } catch (const std::invalid_argument& e) {
        parse_fail(line_no, e.what());
      }
    }
    instances.push_back(std::move(inst));
  }
  return instances;
}

std::vector<LabeledInstance> load_instances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_instances(in);
}

std::int32_t infer_feature_count(
    const std::vector<LabeledInstance>& instances) {
  std::int32_t max_id = -1;
  for (const LabeledInstance& inst : instances) {
    max_id = std::max(max_id, inst.features.max_id());
  }
  return max_id + 1;
}

}  // namespace vandet
