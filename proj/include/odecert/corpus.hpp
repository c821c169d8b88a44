#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "odecert/parser.hpp"

namespace odecert {

enum class Complexity { Simple, Complex };
std::string_view complexity_name(Complexity c);

/// Complex iff the right-hand sides hold at least one operator; unary minus
/// does not count.
Complexity classify(const OdeSystem& sys);

/// Equations sorted by state-variable name, printed in grammar syntax.
std::string canonical_key(const OdeSystem& sys);

struct CorpusEntry {
  std::filesystem::path source_file;  // first occurrence
  std::size_t line = 0;               // 1-based
  OdeSystem system;
  std::string canonical_key;
  std::vector<std::string> constraints;  // stripped evolution-domain constraints
  std::size_t occurrences = 1;
};

struct CorpusWarning {
  std::filesystem::path file;
  std::size_t line = 0;
  std::string fragment;
  std::string message;
};

struct CorpusScan {
  std::vector<CorpusEntry> entries;  // deduplicated, in (file, line) order
  std::size_t files = 0;
  std::size_t raw = 0;  // fragments that parsed, before merging
  std::vector<CorpusWarning> warnings;

  std::size_t duplicates() const { return raw - entries.size(); }
  std::size_t count(Complexity c) const;
};

struct Fragment {
  OdeSystem system;
  std::string constraint;  // empty when absent
};

/// Interior of a "{...}" fragment. nullopt when it has no primed variable;
/// throws the parser's errors when it has one but does not parse.
std::optional<Fragment> parse_fragment(std::string_view interior);

/// Interiors of the balanced "{...}" groups on one line, outer before inner.
std::vector<std::string> brace_groups(std::string_view line);

/// Throws IoError when root is missing or unreadable.
CorpusScan scan_corpus(const std::filesystem::path& root);
std::vector<CorpusEntry> extract_corpus(const std::filesystem::path& root);

/// Writes one "{...}" line per entry to dir/corpus.txt.
void write_corpus(const std::vector<CorpusEntry>& entries, const std::filesystem::path& dir);

}  // namespace odecert
