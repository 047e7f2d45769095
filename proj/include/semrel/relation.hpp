#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace semrel {

enum class Relation { synonym, antonym, co_hyponym };
enum class Source { llm, dictionary };

inline constexpr Relation kAllRelations[] = {Relation::synonym, Relation::antonym,
                                             Relation::co_hyponym};

std::string_view to_string(Relation r) noexcept;
std::string_view to_string(Source s) noexcept;
std::optional<Relation> parse_relation(std::string_view s) noexcept;
std::optional<Source> parse_source(std::string_view s) noexcept;

/// Unordered term pair in canonical order (first < second by code point).
struct PairKey {
  std::string first;
  std::string second;

  auto operator<=>(const PairKey&) const = default;
  bool operator==(const PairKey&) const = default;
};

/// The corpus atom. Construct through make_semantic_pair() so the invariants hold.
struct SemanticPair {
  std::string term_a;
  std::string term_b;
  Relation relation = Relation::synonym;
  Source source = Source::llm;

  PairKey key() const { return {term_a, term_b}; }
  bool operator==(const SemanticPair&) const = default;
};

/// Normalizes both terms and orders them. Throws DomainError when the terms
/// coincide after normalization or either is empty.
SemanticPair make_semantic_pair(std::string_view a, std::string_view b, Relation relation,
                                Source source);

/// Ordering used for all persisted corpora: (term_a, term_b, label string).
bool canonical_less(const SemanticPair& x, const SemanticPair& y) noexcept;

}  // namespace semrel
