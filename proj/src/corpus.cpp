#include "semrel/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "semrel/errors.hpp"
#include "semrel/text.hpp"

namespace semrel {

Corpus merge(std::span<const SemanticPair> llm_pairs, std::span<const SemanticPair> dict_pairs) {
  Corpus corpus;
  corpus.pairs.reserve(llm_pairs.size() + dict_pairs.size());
  corpus.pairs.insert(corpus.pairs.end(), llm_pairs.begin(), llm_pairs.end());
  corpus.pairs.insert(corpus.pairs.end(), dict_pairs.begin(), dict_pairs.end());
  std::stable_sort(corpus.pairs.begin(), corpus.pairs.end(), canonical_less);

  std::vector<SemanticPair> unique;
  unique.reserve(corpus.pairs.size());
  std::map<PairKey, Source> key_source;
  for (auto& p : corpus.pairs) {
    auto [it, fresh] = key_source.emplace(p.key(), p.source);
    if (!fresh && it->second != p.source)
      throw IntegrityError("pair (" + p.term_a + ", " + p.term_b +
                           ") appears under both llm and dictionary sources");
    if (!unique.empty() && unique.back().term_a == p.term_a && unique.back().term_b == p.term_b &&
        unique.back().relation == p.relation)
      continue;
    unique.push_back(std::move(p));
  }
  corpus.pairs = std::move(unique);
  for (const auto& p : corpus.pairs) ++corpus.source_counts[p.source];
  return corpus;
}

void write_jsonl(std::span<const SemanticPair> pairs, std::ostream& out) {
  std::vector<const SemanticPair*> order;
  order.reserve(pairs.size());
  for (const auto& p : pairs) order.push_back(&p);
  std::sort(order.begin(), order.end(),
            [](const SemanticPair* a, const SemanticPair* b) { return canonical_less(*a, *b); });
  for (const auto* p : order) {
    out << "{\"sentence1\": " << json_quote(p->term_a) << ", \"sentence2\": "
        << json_quote(p->term_b) << ", \"label\": \"" << to_string(p->relation) << "\"}\n";
  }
}

void write_jsonl(const Corpus& corpus, std::ostream& out) { write_jsonl(corpus.pairs, out); }

Corpus read_jsonl(std::istream& in, Source default_source) {
  std::vector<SemanticPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError("not a JSON object", lineno);
    if (j.size() != 3 || !j.contains("sentence1") || !j.contains("sentence2") ||
        !j.contains("label"))
      throw ParseError("expected exactly the keys sentence1, sentence2, label", lineno);
    if (!j["sentence1"].is_string() || !j["sentence2"].is_string() || !j["label"].is_string())
      throw ParseError("sentence1, sentence2 and label must be strings", lineno);
    const auto label = j["label"].get<std::string>();
    const auto rel = parse_relation(label);
    if (!rel) throw ParseError("unknown label '" + label + "'", lineno);
    try {
      pairs.push_back(make_semantic_pair(j["sentence1"].get<std::string>(),
                                         j["sentence2"].get<std::string>(), *rel, default_source));
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return merge(pairs, {});
}

Tokenizer whitespace_tokenizer() {
  return [](std::string_view s) {
    std::vector<std::string> out;
    for (auto tok : split_whitespace(s)) out.emplace_back(tok);
    return out;
  };
}

CorpusStats compute_stats(const Corpus& corpus, const Tokenizer& tokenizer) {
  if (corpus.pairs.empty()) throw DomainError("cannot compute statistics of an empty corpus");
  CorpusStats st;
  st.total_pairs = corpus.pairs.size();
  const double total = static_cast<double>(st.total_pairs);

  for (Relation r : kAllRelations) st.relation_counts[r] = 0;
  std::set<std::string_view> distinct;
  std::size_t words = 0, tokens = 0;
  for (const auto& p : corpus.pairs) {
    ++st.relation_counts[p.relation];
    distinct.insert(p.term_a);
    distinct.insert(p.term_b);
    words += count_whitespace_tokens(p.term_a) + count_whitespace_tokens(p.term_b);
    const std::size_t n = tokenizer(p.term_a + " " + p.term_b).size();
    tokens += n;
    st.max_token_length = std::max(st.max_token_length, n);
  }
  for (auto& [r, c] : st.relation_counts) st.relation_percent[r] = 100.0 * static_cast<double>(c) / total;

  st.source_counts = corpus.source_counts;
  std::size_t source_total = 0;
  for (const auto& [s, c] : st.source_counts) source_total += c;
  for (const auto& [s, c] : st.source_counts)
    st.source_percent[s] = source_total ? 100.0 * static_cast<double>(c) / static_cast<double>(source_total) : 0.0;

  st.distinct_terms = distinct.size();
  st.avg_word_count = static_cast<double>(words) / (2.0 * total);
  st.type_token_ratio = static_cast<double>(distinct.size()) / (2.0 * total);
  st.avg_token_length = static_cast<double>(tokens) / total;
  return st;
}

nlohmann::ordered_json to_json(const CorpusStats& st) {
  nlohmann::ordered_json j;
  j["total_pairs"] = st.total_pairs;
  nlohmann::ordered_json rel = nlohmann::ordered_json::object();
  for (Relation r : kAllRelations) {
    auto c = st.relation_counts.count(r) ? st.relation_counts.at(r) : 0;
    auto p = st.relation_percent.count(r) ? st.relation_percent.at(r) : 0.0;
    rel[std::string(to_string(r))] = {{"count", c}, {"percent", p}};
  }
  j["relations"] = rel;
  nlohmann::ordered_json src = nlohmann::ordered_json::object();
  for (Source s : {Source::llm, Source::dictionary}) {
    auto c = st.source_counts.count(s) ? st.source_counts.at(s) : 0;
    auto p = st.source_percent.count(s) ? st.source_percent.at(s) : 0.0;
    src[std::string(to_string(s))] = {{"count", c}, {"percent", p}};
  }
  j["sources"] = src;
  j["avg_word_count"] = st.avg_word_count;
  j["type_token_ratio"] = st.type_token_ratio;
  j["distinct_terms"] = st.distinct_terms;
  j["avg_token_length"] = st.avg_token_length;
  j["max_token_length"] = st.max_token_length;
  return j;
}

std::string format_stats(const CorpusStats& st) {
  std::ostringstream os;
  char buf[160];
  auto row = [&](const char* label, std::size_t count, double pct) {
    std::snprintf(buf, sizeof buf, "  %-22s %10zu %8.2f%%\n", label, count, pct);
    os << buf;
  };
  os << "Class distribution\n";
  row("co_hyponym", st.relation_counts.at(Relation::co_hyponym), st.relation_percent.at(Relation::co_hyponym));
  row("synonym", st.relation_counts.at(Relation::synonym), st.relation_percent.at(Relation::synonym));
  row("antonym", st.relation_counts.at(Relation::antonym), st.relation_percent.at(Relation::antonym));
  row("total", st.total_pairs, 100.0);
  os << "Source distribution\n";
  for (Source s : {Source::llm, Source::dictionary}) {
    const auto c = st.source_counts.count(s) ? st.source_counts.at(s) : 0;
    const auto p = st.source_percent.count(s) ? st.source_percent.at(s) : 0.0;
    row(std::string(to_string(s)).c_str(), c, p);
  }
  os << "Textual statistics\n";
  std::snprintf(buf, sizeof buf,
                "  avg word count (per side) %.2f\n  type-token ratio          %.4f\n"
                "  avg token length          %.2f\n  max token length          %zu\n",
                st.avg_word_count, st.type_token_ratio, st.avg_token_length, st.max_token_length);
  os << buf;
  return os.str();
}

}  // namespace semrel
