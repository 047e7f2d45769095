#include <doctest.h>

#include <random>
#include <sstream>

#include "semrel/corpus.hpp"
#include "semrel/errors.hpp"

using namespace semrel;

namespace {

SemanticPair pair(const std::string& a, const std::string& b, Relation r, Source s = Source::llm) {
  return make_semantic_pair(a, b, r, s);
}

std::string write(const Corpus& c) {
  std::ostringstream out;
  write_jsonl(c, out);
  return out.str();
}

Corpus read(const std::string& s) {
  std::istringstream in(s);
  return read_jsonl(in);
}

}  // namespace

TEST_CASE("semantic pairs are canonical") {
  auto p = pair("sözleşme", "mukavele", Relation::synonym);
  CHECK(p.term_a == "mukavele");
  CHECK(p.term_b == "sözleşme");
  CHECK_THROWS_AS(pair("a", " a ", Relation::synonym), DomainError);
  CHECK_THROWS_AS(pair("", "a", Relation::synonym), DomainError);
}

TEST_CASE("jsonl byte pattern") {
  Corpus c = merge(std::vector<SemanticPair>{pair("sözleşme", "mukavele", Relation::synonym)}, {});
  CHECK(write(c) == "{\"sentence1\": \"mukavele\", \"sentence2\": \"sözleşme\", \"label\": \"synonym\"}\n");
  CHECK(write(Corpus{}).empty());
  Corpus q = merge(std::vector<SemanticPair>{pair("a\"b", "c\\d", Relation::co_hyponym)}, {});
  CHECK(write(q) == "{\"sentence1\": \"a\\\"b\", \"sentence2\": \"c\\\\d\", \"label\": \"co_hyponym\"}\n");
}

TEST_CASE("merge counts sources and deduplicates") {
  std::vector<SemanticPair> llm = {pair("a", "b", Relation::synonym), pair("a", "c", Relation::antonym),
                                   pair("b", "c", Relation::co_hyponym)};
  std::vector<SemanticPair> dict = {pair("d", "e", Relation::synonym, Source::dictionary),
                                    pair("d", "f", Relation::synonym, Source::dictionary)};
  auto c = merge(llm, dict);
  CHECK(c.pairs.size() == 5);
  CHECK(c.source_counts[Source::llm] == 3);
  CHECK(c.source_counts[Source::dictionary] == 2);

  llm.push_back(pair("b", "a", Relation::synonym));
  CHECK(merge(llm, {}).pairs.size() == 3);

  std::vector<SemanticPair> clash = {pair("a", "b", Relation::synonym, Source::dictionary)};
  CHECK_THROWS_AS(merge(llm, clash), IntegrityError);

  auto again = merge(c.pairs, {});
  CHECK(again.pairs == c.pairs);
}

TEST_CASE("jsonl read errors carry line numbers") {
  const std::string ok = "{\"sentence1\": \"a\", \"sentence2\": \"b\", \"label\": \"synonym\"}\n";
  try {
    read(ok + "{\"sentence1\": \"a\", \"sentence2\": \"c\", \"label\": \"hypernym\"}\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(read("not json\n"), ParseError);
  CHECK_THROWS_AS(read("{\"sentence1\": \"a\", \"sentence2\": \"b\"}\n"), ParseError);
  CHECK_THROWS_AS(read("{\"sentence1\": \"a\", \"sentence2\": \"b\", \"label\": \"synonym\", \"x\": 1}\n"),
                  ParseError);
  CHECK(read(ok).pairs.size() == 1);
}

TEST_CASE("jsonl round trip") {
  std::mt19937 rng(2);
  std::vector<SemanticPair> ps;
  for (int i = 0; i < 100; ++i) {
    auto a = "t" + std::to_string(rng() % 40), b = "ş" + std::to_string(rng() % 40);
    ps.push_back(pair(a, b, kAllRelations[rng() % 3]));
  }
  auto c = merge(ps, {});
  auto back = read(write(c));
  CHECK(back.pairs == c.pairs);
  CHECK(write(back) == write(c));
}

TEST_CASE("stats fixture") {
  std::vector<SemanticPair> ps;
  for (int i = 0; i < 7; ++i) ps.push_back(pair("c" + std::to_string(i), "x", Relation::co_hyponym));
  for (int i = 0; i < 2; ++i) ps.push_back(pair("s" + std::to_string(i), "x", Relation::synonym));
  ps.push_back(pair("alıcı", "satıcı", Relation::antonym));
  auto s = compute_stats(merge(ps, {}));
  CHECK(s.total_pairs == 10);
  CHECK(s.relation_percent[Relation::co_hyponym] == 70.0);
  CHECK(s.relation_percent[Relation::synonym] == 20.0);
  CHECK(s.relation_percent[Relation::antonym] == 10.0);
  CHECK(s.source_percent[Source::llm] == 100.0);
}

TEST_CASE("stats textual measures") {
  // 2 pairs, 4 slots, 3 distinct terms
  std::vector<SemanticPair> ps = {pair("a", "b", Relation::synonym), pair("a", "c d", Relation::antonym)};
  auto s = compute_stats(merge(ps, {}));
  CHECK(s.type_token_ratio == 0.75);
  CHECK(s.avg_word_count == 1.25);
  CHECK(s.avg_token_length == 2.5);
  CHECK(s.max_token_length == 3);
  CHECK(s.distinct_terms == 3);
  CHECK(s.max_token_length >= std::size_t(std::ceil(s.avg_token_length)));
  CHECK_THROWS_AS(compute_stats(Corpus{}), DomainError);

  auto chars = [](std::string_view t) {
    std::vector<std::string> out;
    for (char ch : t)
      if (ch != ' ') out.emplace_back(1, ch);
    return out;
  };
  auto custom = compute_stats(merge(ps, {}), chars);
  CHECK(custom.max_token_length == 3);
}

TEST_CASE("stats percentages sum to 100 and ignore order") {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SemanticPair> ps;
    for (int i = 0; i < 1 + int(rng() % 60); ++i)
      ps.push_back(pair("a" + std::to_string(rng() % 30), "b" + std::to_string(rng() % 30),
                        kAllRelations[rng() % 3]));
    auto s = compute_stats(merge(ps, {}));
    double sum = 0;
    for (const auto& [r, p] : s.relation_percent) sum += p;
    CHECK(std::abs(sum - 100.0) <= 0.01);
    std::shuffle(ps.begin(), ps.end(), rng);
    auto t = compute_stats(merge(ps, {}));
    CHECK(t.relation_percent == s.relation_percent);
    CHECK(t.type_token_ratio == s.type_token_ratio);
  }
}

TEST_CASE("stats formatting") {
  auto s = compute_stats(merge(std::vector<SemanticPair>{pair("a", "b", Relation::synonym)}, {}));
  auto text = format_stats(s);
  CHECK(text.find("synonym") != std::string::npos);
  CHECK(text.find("100.00%") != std::string::npos);
  auto j = to_json(s);
  CHECK(j["total_pairs"] == 1);
}
