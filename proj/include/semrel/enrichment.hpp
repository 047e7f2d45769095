#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semrel/cluster_engine.hpp"
#include "semrel/errors.hpp"
#include "semrel/prompt.hpp"
#include "semrel/relation.hpp"

namespace semrel {

struct RelationLists {
  std::vector<std::string> synonyms;
  std::vector<std::string> antonyms;
  std::vector<std::string> co_hyponyms;

  std::vector<std::string>& operator[](Relation r);
  const std::vector<std::string>& operator[](Relation r) const;
  bool operator==(const RelationLists&) const = default;
};

struct EnrichmentResponse {
  std::map<std::string, RelationLists> terms;
  std::string raw_text;
  bool repair_applied = false;
};

/// Raised when no usable JSON object can be recovered; keeps the raw text for audit.
class ResponseParseError : public ParseError {
 public:
  ResponseParseError(const std::string& what, std::string raw)
      : ParseError(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

/// Extracts the first JSON object from an LLM reply. Tolerated: markdown code
/// fences, prose before/after the object, trailing commas. Unknown keys are
/// ignored and missing relation lists are empty. Anything else throws
/// ResponseParseError.
EnrichmentResponse parse_response(std::string_view raw);

/// Canonical JSON text for a response (relation keys in fixed order).
std::string serialize_response(const EnrichmentResponse& response);

struct PostprocessReport {
  std::size_t mentions = 0;        // relation entries seen
  std::size_t self_relations = 0;  // term listed under itself
  std::size_t empty_terms = 0;     // blank after normalization
  std::size_t duplicates = 0;      // repeated (pair, relation) mentions
  std::size_t conflicts = 0;       // pairs seen under more than one relation, dropped
  std::size_t augmented = 0;       // emitted pairs with a term outside the prompting cluster
  std::size_t invalid_text = 0;    // not valid UTF-8
};

struct PostprocessResult {
  std::vector<SemanticPair> pairs;  // canonical order
  PostprocessReport report;
};

/// Turns parsed responses into canonical LLM pairs: NFC + whitespace
/// collapse, self-relations removed, one pair per (unordered pair, relation),
/// pairs claimed under two relations dropped. When `clusters` is given it
/// must align with `responses` and is used only for the `augmented` counter.
PostprocessResult postprocess(std::span<const EnrichmentResponse> responses,
                              std::span<const Cluster> clusters = {});

using TokenCounter = std::function<std::uint64_t(std::string_view)>;

/// ceil(whitespace tokens * inflation).
TokenCounter whitespace_token_counter(double inflation = 1.0);

struct CostEstimate {
  std::uint64_t input_tokens = 0;
  double usd = 0.0;
};

struct ProviderConfig;

/// Sum of prompt tokens over the clusters, priced per million input tokens.
CostEstimate estimate_cost(std::span<const Cluster> clusters, const PromptTemplate& tmpl,
                           const ProviderConfig& config, const TokenCounter& token_counter);

}  // namespace semrel
