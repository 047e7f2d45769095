#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "semrel/relation.hpp"

namespace semrel {

struct DictionaryEntry {
  std::string headword;
  std::vector<std::string> candidates;
  bool sense_marked = false;  // carries parenthetical sense annotations

  bool operator==(const DictionaryEntry&) const = default;
};

struct DictionaryParseReport {
  std::size_t lines = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

struct ParsedDictionary {
  std::vector<DictionaryEntry> entries;
  DictionaryParseReport report;
};

/// Reads `headword<TAB>cand1;cand2;...` lines (UTF-8). Any `(...)` marker on
/// the line sets sense_marked. Terms are normalized; candidates equal to the
/// headword are dropped. Lines without a TAB or without candidates are
/// skipped with a warning.
ParsedDictionary parse_dictionary(std::istream& in);

enum class RejectReason { candidate_count, ambiguity };

struct FilterEntriesReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t rejected_candidate_count = 0;
  std::size_t rejected_ambiguity = 0;
};

struct FilteredEntries {
  std::vector<DictionaryEntry> entries;
  FilterEntriesReport report;
};

using AmbiguityPredicate = std::function<bool(const DictionaryEntry&)>;

/// Keeps entries with at most `max_candidates` candidates that the ambiguity
/// predicate (default: sense_marked) does not flag. The candidate-count check
/// is applied first and determines the reported reason.
FilteredEntries filter_entries(std::span<const DictionaryEntry> entries,
                               std::size_t max_candidates = 2,
                               const AmbiguityPredicate& is_ambiguous = {});

/// One canonical (headword, candidate, synonym, dictionary) pair per
/// candidate, deduplicated and sorted.
std::vector<SemanticPair> to_pairs(std::span<const DictionaryEntry> entries);

struct DeconflictResult {
  std::vector<SemanticPair> pairs;
  std::size_t removed = 0;
};

/// Drops dictionary pairs whose unordered term pair occurs among the LLM
/// pairs under any relation.
DeconflictResult deconflict(std::span<const SemanticPair> dict_pairs,
                            std::span<const SemanticPair> llm_pairs);

}  // namespace semrel
