#include "semrel/enrichment.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "semrel/provider.hpp"
#include "semrel/text.hpp"

namespace semrel {

std::vector<std::string>& RelationLists::operator[](Relation r) {
  switch (r) {
    case Relation::synonym: return synonyms;
    case Relation::antonym: return antonyms;
    case Relation::co_hyponym: break;
  }
  return co_hyponyms;
}

const std::vector<std::string>& RelationLists::operator[](Relation r) const {
  return const_cast<RelationLists&>(*this)[r];
}

namespace {

constexpr std::string_view kListKeys[] = {"synonyms", "antonyms", "co_hyponyms"};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Body of the first ``` fenced block, if any.
std::optional<std::string_view> fenced_body(std::string_view s) {
  const auto open = s.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto start = s.find('\n', open + 3);
  if (start == std::string_view::npos) return std::nullopt;
  ++start;
  const auto close = s.find("```", start);
  return s.substr(start, (close == std::string_view::npos ? s.size() : close) - start);
}

// Index one past the brace matching s[open], or npos when unterminated.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false, escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

// Drops commas directly followed (modulo whitespace) by a closing bracket.
std::string strip_trailing_commas(std::string_view s, bool& changed) {
  std::string out;
  out.reserve(s.size());
  bool in_string = false, escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      out.push_back(c);
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && is_space(s[j])) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) {
        changed = true;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

bool has_content(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return !is_space(c); });
}

EnrichmentResponse from_json(const nlohmann::json& j, std::string_view raw) {
  if (!j.is_object()) throw ResponseParseError("top-level JSON value is not an object", std::string(raw));
  EnrichmentResponse out;
  for (const auto& [term, rels] : j.items()) {
    if (!rels.is_object())
      throw ResponseParseError("relations for '" + term + "' are not an object", std::string(raw));
    RelationLists lists;
    for (std::size_t k = 0; k < 3; ++k) {
      auto it = rels.find(std::string(kListKeys[k]));
      if (it == rels.end() || it->is_null()) continue;
      if (!it->is_array())
        throw ResponseParseError("'" + std::string(kListKeys[k]) + "' of '" + term + "' is not a list",
                                 std::string(raw));
      for (const auto& v : *it) {
        if (!v.is_string())
          throw ResponseParseError("non-string entry under '" + term + "'", std::string(raw));
        lists[kAllRelations[k]].push_back(v.get<std::string>());
      }
    }
    out.terms[term] = std::move(lists);
  }
  return out;
}

}  // namespace

EnrichmentResponse parse_response(std::string_view raw) {
  bool repaired = false;
  std::string_view text = raw;
  if (auto body = fenced_body(raw)) {
    text = *body;
    repaired = true;
  }

  for (auto open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    const auto close = match_brace(text, open);
    if (close == std::string_view::npos)
      throw ResponseParseError("unterminated JSON object", std::string(raw));

    bool commas = false;
    const std::string candidate = strip_trailing_commas(text.substr(open, close - open), commas);
    nlohmann::json j = nlohmann::json::parse(candidate, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) continue;  // brace inside prose; try the next one

    EnrichmentResponse out = from_json(j, raw);
    out.raw_text = std::string(raw);
    out.repair_applied = repaired || commas || has_content(text.substr(0, open)) ||
                         has_content(text.substr(close));
    return out;
  }
  throw ResponseParseError("no JSON object found in response", std::string(raw));
}

std::string serialize_response(const EnrichmentResponse& response) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [term, lists] : response.terms) {
    nlohmann::ordered_json rels = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < 3; ++k) rels[std::string(kListKeys[k])] = lists[kAllRelations[k]];
    j[term] = std::move(rels);
  }
  return j.dump(2);
}

PostprocessResult postprocess(std::span<const EnrichmentResponse> responses,
                              std::span<const Cluster> clusters) {
  if (!clusters.empty() && clusters.size() != responses.size())
    throw ArgumentError("postprocess: clusters must align with responses");

  PostprocessResult result;
  auto& rep = result.report;

  struct Seen {
    std::set<Relation> relations;
    bool any_in_cluster = false;
  };
  std::map<PairKey, Seen> seen;
  std::set<std::pair<PairKey, Relation>> mentioned;

  auto normalize = [&](std::string_view s, std::string& out) {
    try {
      out = normalize_term(s);
    } catch (const ArgumentError&) {
      ++rep.invalid_text;
      return false;
    }
    if (out.empty()) {
      ++rep.empty_terms;
      return false;
    }
    return true;
  };

  for (std::size_t r = 0; r < responses.size(); ++r) {
    std::unordered_set<std::string> members;
    if (!clusters.empty())
      for (const auto& m : clusters[r].members) {
        std::string n;
        if (normalize(m, n)) members.insert(std::move(n));
      }

    for (const auto& [head_raw, lists] : responses[r].terms) {
      std::string head;
      const bool head_ok = normalize(head_raw, head);
      for (Relation rel : kAllRelations) {
        for (const auto& cand_raw : lists[rel]) {
          ++rep.mentions;
          std::string cand;
          if (!head_ok || !normalize(cand_raw, cand)) continue;
          if (cand == head) {
            ++rep.self_relations;
            continue;
          }
          PairKey key = head < cand ? PairKey{head, cand} : PairKey{cand, head};
          if (!mentioned.emplace(key, rel).second) ++rep.duplicates;
          auto& s = seen[key];
          s.relations.insert(rel);
          if (!clusters.empty() && members.count(head) && members.count(cand)) s.any_in_cluster = true;
        }
      }
    }
  }

  for (auto& [key, s] : seen) {
    if (s.relations.size() > 1) {
      ++rep.conflicts;
      continue;
    }
    if (!clusters.empty() && !s.any_in_cluster) ++rep.augmented;
    result.pairs.push_back({key.first, key.second, *s.relations.begin(), Source::llm});
  }
  // map order already sorts by (term_a, term_b); one relation per key
  return result;
}

TokenCounter whitespace_token_counter(double inflation) {
  if (!(inflation > 0.0)) throw ArgumentError("token inflation factor must be positive");
  return [inflation](std::string_view text) -> std::uint64_t {
    const double n = static_cast<double>(count_whitespace_tokens(text)) * inflation;
    return static_cast<std::uint64_t>(std::ceil(n));
  };
}

CostEstimate estimate_cost(std::span<const Cluster> clusters, const PromptTemplate& tmpl,
                           const ProviderConfig& config, const TokenCounter& token_counter) {
  CostEstimate est;
  for (const auto& c : clusters) est.input_tokens += token_counter(render_prompt(tmpl, c));
  est.usd = static_cast<double>(est.input_tokens) * config.input_price_per_1M_tokens / 1e6;
  return est;
}

}  // namespace semrel
