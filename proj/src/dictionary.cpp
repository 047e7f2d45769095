#include "semrel/dictionary.hpp"

#include <algorithm>
#include <istream>
#include <set>

#include "semrel/errors.hpp"
#include "semrel/text.hpp"

namespace semrel {

namespace {

void warn(DictionaryParseReport& r, std::size_t line, const std::string& msg) {
  ++r.skipped;
  if (r.warnings.size() < 100) r.warnings.push_back("line " + std::to_string(line) + ": " + msg);
}

bool has_sense_marker(std::string_view s) {
  const auto open = s.find('(');
  return open != std::string_view::npos && s.find(')', open) != std::string_view::npos;
}

}  // namespace

ParsedDictionary parse_dictionary(std::istream& in) {
  ParsedDictionary out;
  auto& rep = out.report;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++rep.lines;
    if (!is_valid_utf8(line)) {
      warn(rep, lineno, "not valid UTF-8");
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      warn(rep, lineno, "no TAB separator");
      continue;
    }
    DictionaryEntry e;
    e.headword = normalize_term(std::string_view(line).substr(0, tab));
    if (e.headword.empty()) {
      warn(rep, lineno, "empty headword");
      continue;
    }
    e.sense_marked = has_sense_marker(line);

    std::string_view rest = std::string_view(line).substr(tab + 1);
    std::set<std::string> seen;
    while (true) {
      const auto semi = rest.find(';');
      std::string cand = normalize_term(rest.substr(0, semi));
      if (!cand.empty() && cand != e.headword && seen.insert(cand).second)
        e.candidates.push_back(std::move(cand));
      if (semi == std::string_view::npos) break;
      rest.remove_prefix(semi + 1);
    }
    if (e.candidates.empty()) {
      warn(rep, lineno, "no synonym candidates");
      continue;
    }
    out.entries.push_back(std::move(e));
  }
  if (out.entries.empty() && rep.warnings.empty())
    rep.warnings.push_back("dictionary is empty");
  return out;
}

FilteredEntries filter_entries(std::span<const DictionaryEntry> entries,
                               std::size_t max_candidates,
                               const AmbiguityPredicate& is_ambiguous) {
  FilteredEntries out;
  out.report.input = entries.size();
  for (const auto& e : entries) {
    if (e.candidates.size() > max_candidates) {
      ++out.report.rejected_candidate_count;
      continue;
    }
    if (is_ambiguous ? is_ambiguous(e) : e.sense_marked) {
      ++out.report.rejected_ambiguity;
      continue;
    }
    out.entries.push_back(e);
  }
  out.report.kept = out.entries.size();
  return out;
}

std::vector<SemanticPair> to_pairs(std::span<const DictionaryEntry> entries) {
  std::vector<SemanticPair> pairs;
  for (const auto& e : entries)
    for (const auto& c : e.candidates) {
      if (normalize_term(c) == normalize_term(e.headword)) continue;
      pairs.push_back(make_semantic_pair(e.headword, c, Relation::synonym, Source::dictionary));
    }
  std::sort(pairs.begin(), pairs.end(), canonical_less);
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

DeconflictResult deconflict(std::span<const SemanticPair> dict_pairs,
                            std::span<const SemanticPair> llm_pairs) {
  std::set<PairKey> llm_keys;
  for (const auto& p : llm_pairs) llm_keys.insert(p.key());
  DeconflictResult out;
  for (const auto& p : dict_pairs) {
    if (llm_keys.count(p.key())) ++out.removed;
    else out.pairs.push_back(p);
  }
  return out;
}

}  // namespace semrel
