#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semrel/relation.hpp"

namespace semrel {

struct Corpus {
  std::vector<SemanticPair> pairs;  // canonical order, no duplicate triples
  std::map<Source, std::size_t> source_counts;
};

/// Concatenates both inputs and removes duplicate (term_a, term_b, relation)
/// triples. A term pair present under both sources throws IntegrityError
/// (the dictionary side should have been deconflicted).
Corpus merge(std::span<const SemanticPair> llm_pairs, std::span<const SemanticPair> dict_pairs);

/// One `{"sentence1": ..., "sentence2": ..., "label": ...}` object per line,
/// sorted canonically; `\n` endings, no BOM. Sources are not written.
void write_jsonl(const Corpus& corpus, std::ostream& out);
void write_jsonl(std::span<const SemanticPair> pairs, std::ostream& out);

/// Inverse of write_jsonl. Every pair gets `default_source`; the counters
/// are recomputed from it. Throws ParseError with the line number for a
/// malformed line or unknown label.
Corpus read_jsonl(std::istream& in, Source default_source = Source::llm);

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

Tokenizer whitespace_tokenizer();

struct CorpusStats {
  std::size_t total_pairs = 0;
  std::map<Relation, std::size_t> relation_counts;
  std::map<Relation, double> relation_percent;
  std::map<Source, std::size_t> source_counts;
  std::map<Source, double> source_percent;
  double avg_word_count = 0.0;  // whitespace words per side
  double type_token_ratio = 0.0;
  double avg_token_length = 0.0;  // tokens per record (both sides joined by a space)
  std::size_t max_token_length = 0;
  std::size_t distinct_terms = 0;
};

/// Throws DomainError on an empty corpus. Source percentages use
/// corpus.source_counts.
CorpusStats compute_stats(const Corpus& corpus, const Tokenizer& tokenizer = whitespace_tokenizer());

nlohmann::ordered_json to_json(const CorpusStats& stats);

/// Human-readable table in the shape of the published statistics.
std::string format_stats(const CorpusStats& stats);

}  // namespace semrel
