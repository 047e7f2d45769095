#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "semrel/dictionary.hpp"
#include "semrel/errors.hpp"

using namespace semrel;

namespace {

ParsedDictionary parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dictionary(in);
}

SemanticPair syn(const std::string& a, const std::string& b, Source s = Source::dictionary) {
  return make_semantic_pair(a, b, Relation::synonym, s);
}

}  // namespace

TEST_CASE("dictionary lines") {
  auto p = parse("sözleşme\tmukavele\n");
  REQUIRE(p.entries.size() == 1);
  CHECK(p.entries[0] == DictionaryEntry{"sözleşme", {"mukavele"}, false});

  auto marked = parse("yüz\tçehre;surat;100 (sayı)\n");
  REQUIRE(marked.entries.size() == 1);
  CHECK(marked.entries[0].sense_marked);
  CHECK(marked.entries[0].candidates.size() == 3);

  auto bad = parse("no tab here\nkelime\tsöz\n");
  CHECK(bad.entries.size() == 1);
  CHECK(bad.report.skipped == 1);
  CHECK(bad.report.warnings.size() == 1);
}

TEST_CASE("dictionary parser edge cases") {
  auto empty = parse("");
  CHECK(empty.entries.empty());
  CHECK(empty.report.warnings.size() == 1);

  auto p = parse("\xEF\xBB\xBF" "ev\tkonut; mesken ;ev\r\n\t x\nyalnız\t\nçift\tikiz;ikiz\n");
  REQUIRE(p.entries.size() == 2);
  CHECK(p.entries[0] == DictionaryEntry{"ev", {"konut", "mesken"}, false});
  CHECK(p.entries[1].candidates == std::vector<std::string>{"ikiz"});
  CHECK(p.report.skipped == 2);
}

TEST_CASE("filter_entries rejection reasons") {
  std::vector<DictionaryEntry> in = {{"a", {"b", "c", "d"}, false},
                                     {"e", {"f"}, false},
                                     {"g", {"h", "i"}, true},
                                     {"j", {"k", "l", "m"}, true}};
  auto f = filter_entries(in);
  REQUIRE(f.entries.size() == 1);
  CHECK(f.entries[0].headword == "e");
  CHECK(f.report.input == 4);
  CHECK(f.report.kept == 1);
  CHECK(f.report.rejected_candidate_count == 2);
  CHECK(f.report.rejected_ambiguity == 1);

  auto custom = filter_entries(in, 3, [](const DictionaryEntry& e) { return e.headword == "a"; });
  CHECK(custom.entries.size() == 3);
  CHECK(custom.report.rejected_ambiguity == 1);
}

TEST_CASE("to_pairs expands and deduplicates") {
  std::vector<DictionaryEntry> in = {{"x", {"y", "z"}, false}, {"y", {"x"}, false}};
  auto pairs = to_pairs(in);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == syn("x", "y"));
  CHECK(pairs[1] == syn("x", "z"));
  for (const auto& p : pairs) {
    CHECK(p.relation == Relation::synonym);
    CHECK(p.source == Source::dictionary);
  }
  CHECK(to_pairs({}).empty());
}

TEST_CASE("deconflict keys on the unordered pair") {
  std::vector<SemanticPair> d = {syn("a", "b")};
  CHECK(deconflict(d, std::vector<SemanticPair>{syn("a", "b", Source::llm)}).pairs.empty());
  auto co = make_semantic_pair("b", "a", Relation::co_hyponym, Source::llm);
  auto r = deconflict(d, std::vector<SemanticPair>{co});
  CHECK(r.pairs.empty());
  CHECK(r.removed == 1);
  std::vector<SemanticPair> d2 = {syn("a", "c")};
  CHECK(deconflict(d2, std::vector<SemanticPair>{syn("a", "b", Source::llm)}).pairs == d2);
  CHECK(deconflict(d2, {}).pairs == d2);
}

TEST_CASE("deconflict agrees with set algebra") {
  std::mt19937 rng(23);
  const char* words[] = {"a", "b", "c", "d", "e", "f", "g"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SemanticPair> d, l;
    for (int i = 0; i < int(rng() % 12); ++i) {
      auto x = words[rng() % 7], y = words[rng() % 7];
      if (std::string(x) != y) d.push_back(syn(x, y));
    }
    for (int i = 0; i < int(rng() % 12); ++i) {
      auto x = words[rng() % 7], y = words[rng() % 7];
      if (std::string(x) != y)
        l.push_back(make_semantic_pair(x, y, kAllRelations[rng() % 3], Source::llm));
    }
    std::set<PairKey> llm_keys;
    for (const auto& p : l) llm_keys.insert(p.key());
    std::vector<SemanticPair> want;
    for (const auto& p : d)
      if (!llm_keys.count(p.key())) want.push_back(p);
    auto got = deconflict(d, l);
    CHECK(got.pairs == want);
    CHECK(got.removed == d.size() - want.size());
  }
}
