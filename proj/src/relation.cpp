#include "semrel/relation.hpp"

#include "semrel/errors.hpp"
#include "semrel/text.hpp"

namespace semrel {

std::string_view to_string(Relation r) noexcept {
  switch (r) {
    case Relation::synonym: return "synonym";
    case Relation::antonym: return "antonym";
    case Relation::co_hyponym: return "co_hyponym";
  }
  return "synonym";
}

std::string_view to_string(Source s) noexcept {
  return s == Source::dictionary ? "dictionary" : "llm";
}

std::optional<Relation> parse_relation(std::string_view s) noexcept {
  if (s == "synonym") return Relation::synonym;
  if (s == "antonym") return Relation::antonym;
  if (s == "co_hyponym") return Relation::co_hyponym;
  return std::nullopt;
}

std::optional<Source> parse_source(std::string_view s) noexcept {
  if (s == "llm") return Source::llm;
  if (s == "dictionary") return Source::dictionary;
  return std::nullopt;
}

SemanticPair make_semantic_pair(std::string_view a, std::string_view b, Relation relation,
                                Source source) {
  std::string na = normalize_term(a);
  std::string nb = normalize_term(b);
  if (na.empty() || nb.empty()) throw DomainError("semantic pair with an empty term");
  if (na == nb) throw DomainError("self-relation: '" + na + "'");
  if (nb < na) std::swap(na, nb);
  return {std::move(na), std::move(nb), relation, source};
}

bool canonical_less(const SemanticPair& x, const SemanticPair& y) noexcept {
  if (x.term_a != y.term_a) return x.term_a < y.term_a;
  if (x.term_b != y.term_b) return x.term_b < y.term_b;
  return to_string(x.relation) < to_string(y.relation);
}

}  // namespace semrel
