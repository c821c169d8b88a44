#include "odecert/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "odecert/errors.hpp"

namespace odecert {

namespace fs = std::filesystem;

std::string_view complexity_name(Complexity c) { return c == Complexity::Simple ? "simple" : "complex"; }

Complexity classify(const OdeSystem& sys) {
  std::size_t ops = 0;
  for (const auto& eq : sys.equations()) ops += count_operators(eq.rhs);
  return ops >= 1 ? Complexity::Complex : Complexity::Simple;
}

std::string canonical_key(const OdeSystem& sys) {
  std::vector<const Equation*> eqs;
  for (const auto& eq : sys.equations()) eqs.push_back(&eq);
  std::sort(eqs.begin(), eqs.end(), [](const Equation* a, const Equation* b) { return a->var < b->var; });
  std::string key;
  for (const auto* eq : eqs) {
    if (!key.empty()) key += ", ";
    key += eq->var + "' = " + to_string(eq->rhs);
  }
  return key;
}

std::size_t CorpusScan::count(Complexity c) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const CorpusEntry& e) { return classify(e.system) == c; }));
}

std::vector<std::string> brace_groups(std::string_view line) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] != '{') continue;
    int depth = 0;
    for (std::size_t j = i; j < line.size(); ++j) {
      if (line[j] == '{') ++depth;
      if (line[j] == '}' && --depth == 0) {
        out.emplace_back(line.substr(i + 1, j - i - 1));
        break;
      }
    }
  }
  return out;
}

std::optional<Fragment> parse_fragment(std::string_view interior) {
  if (interior.find('\'') == std::string_view::npos) return std::nullopt;
  Fragment f;
  std::string_view body = interior;
  int depth = 0;
  for (std::size_t i = 0; i < interior.size(); ++i) {
    if (interior[i] == '(') ++depth;
    if (interior[i] == ')') --depth;
    if (interior[i] == '&' && depth == 0) {
      body = interior.substr(0, i);
      std::string_view c = interior.substr(i + 1);
      auto b = c.find_first_not_of(" \t");
      auto e = c.find_last_not_of(" \t");
      f.constraint = b == std::string_view::npos ? "" : std::string(c.substr(b, e - b + 1));
      break;
    }
  }
  f.system = parse_system(body);
  return f;
}

CorpusScan scan_corpus(const fs::path& root) {
  std::error_code ec;
  if (!fs::exists(root, ec)) throw IoError("no such file or directory: " + root.string());
  std::vector<fs::path> files;
  if (fs::is_regular_file(root, ec)) {
    files.push_back(root);
  } else {
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec), end;
    if (ec) throw IoError("cannot read " + root.string() + ": " + ec.message());
    for (; it != end; it.increment(ec)) {
      if (ec) throw IoError("cannot read " + root.string() + ": " + ec.message());
      if (it->is_regular_file(ec)) files.push_back(it->path());
    }
  }
  std::sort(files.begin(), files.end());

  CorpusScan scan;
  std::map<std::string, std::size_t> index;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    ++scan.files;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      for (const auto& group : brace_groups(line)) {
        std::optional<Fragment> frag;
        try {
          frag = parse_fragment(group);
        } catch (const Error& e) {
          scan.warnings.push_back({file, lineno, group, e.what()});
          continue;
        }
        if (!frag) continue;
        ++scan.raw;
        std::string key = canonical_key(frag->system);
        auto [pos, fresh] = index.emplace(key, scan.entries.size());
        if (fresh) {
          scan.entries.push_back({file, lineno, frag->system, key, {}, 0});
        }
        auto& entry = scan.entries[pos->second];
        ++entry.occurrences;
        if (!frag->constraint.empty() &&
            std::find(entry.constraints.begin(), entry.constraints.end(), frag->constraint) ==
                entry.constraints.end())
          entry.constraints.push_back(frag->constraint);
      }
    }
    if (in.bad()) throw IoError("error reading " + file.string());
  }
  return scan;
}

std::vector<CorpusEntry> extract_corpus(const fs::path& root) { return scan_corpus(root).entries; }

void write_corpus(const std::vector<CorpusEntry>& entries, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "corpus.txt");
  if (!out) throw IoError("cannot write " + (dir / "corpus.txt").string());
  for (const auto& e : entries) {
    out << "{" << e.system.to_string();
    if (!e.constraints.empty()) out << " & " << e.constraints.front();
    out << "}\n";
  }
}

}  // namespace odecert
