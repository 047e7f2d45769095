#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "semrel/cluster_engine.hpp"
#include "semrel/errors.hpp"

using namespace semrel;

namespace {

std::vector<TermVector> make_vectors(const std::vector<std::vector<float>>& rows) {
  std::vector<TermVector> out;
  for (std::size_t i = 0; i < rows.size(); ++i) out.push_back({"t" + std::to_string(i), rows[i]});
  return out;
}

std::vector<TermVector> random_vectors(std::mt19937& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<float> g;
  std::vector<std::vector<float>> rows(n, std::vector<float>(dim));
  for (auto& r : rows)
    for (auto& x : r) x = g(rng);
  return make_vectors(rows);
}

// Member index sets, sorted, for comparison with the oracle.
std::vector<std::vector<int>> as_sets(const std::vector<Cluster>& clusters) {
  std::vector<std::vector<int>> out;
  for (const auto& c : clusters) {
    std::vector<int> s;
    for (const auto& m : c.members) s.push_back(std::stoi(m.substr(1)));
    std::sort(s.begin(), s.end());
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<double>> square(const DistanceMatrix& m) {
  std::vector<std::vector<double>> d(m.size(), std::vector<double>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) d[i][j] = m.at(i, j);
  return d;
}

oracle::Link to_oracle(Linkage l) {
  return l == Linkage::average ? oracle::Link::average
         : l == Linkage::complete ? oracle::Link::complete
                                  : oracle::Link::single;
}

}  // namespace

TEST_CASE("pairwise distances on small inputs") {
  auto m = pairwise_distances(make_vectors({{1, 0}, {0, 1}}));
  CHECK(m.at(0, 1) == doctest::Approx(1.0));
  CHECK(m.at(1, 0) == doctest::Approx(1.0));
  CHECK(m.at(0, 0) == 0.0);
  auto same = pairwise_distances(make_vectors({{1, 0}, {1, 0}}));
  CHECK(same.at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("pairwise distances match the scalar oracle and ignore worker count") {
  std::mt19937 rng(5);
  auto vs = random_vectors(rng, 40, 6);
  auto m1 = pairwise_distances(vs, 1);
  auto m4 = pairwise_distances(vs, 4);
  CHECK(m1.condensed() == m4.condensed());
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      std::vector<double> u(vs[i].vector.begin(), vs[i].vector.end());
      std::vector<double> v(vs[j].vector.begin(), vs[j].vector.end());
      CHECK(std::abs(m1.at(i, j) - oracle::cosine_distance(u, v)) < 1e-9);
    }
}

TEST_CASE("pairwise distances name the offending term") {
  auto vs = make_vectors({{1, 0}, {0, 0}});
  try {
    pairwise_distances(vs);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("t1") != std::string::npos);
  }
  CHECK_THROWS_AS(pairwise_distances(make_vectors({{1, 0}, {1, 0, 0}})), DomainError);
}

TEST_CASE("three-point threshold example") {
  std::vector<std::vector<float>> pts = {{1, 0}, {0.99f, 0.14f}, {0, 1}};
  auto m = pairwise_distances(make_vectors(pts));
  auto c = agglomerate(m, 0.4, Linkage::average);
  REQUIRE(c.size() == 2);
  CHECK(c[0].id == 0);
  CHECK(c[0].members == std::vector<std::string>{"t0", "t1"});
  CHECK(c[1].members == std::vector<std::string>{"t2"});
}

TEST_CASE("threshold extremes") {
  std::mt19937 rng(9);
  auto m = pairwise_distances(random_vectors(rng, 12, 4));
  CHECK(agglomerate(m, 1e-12).size() == 12);
  auto all = agglomerate(m, 2.0);
  // Opposite vectors sit at exactly 2, so 2.0 merges everything only when
  // no linkage distance reaches 2; random data never does.
  REQUIRE(all.size() == 1);
  CHECK(all[0].members.size() == 12);
  CHECK_THROWS_AS(agglomerate(m, 0.0), ConfigError);
  CHECK_THROWS_AS(agglomerate(m, 2.5), ConfigError);
  CHECK_THROWS_AS(agglomerate(m, std::nan("")), ConfigError);
}

TEST_CASE("exact ties resolve to the lowest id pair") {
  // Orthonormal axes: every pair sits at distance 1.
  auto m = pairwise_distances(make_vectors({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}));
  for (auto link : {Linkage::average, Linkage::complete, Linkage::single}) {
    auto got = as_sets(agglomerate(m, 1.0000001, link));
    auto want = oracle::agglomerate(square(m), 1.0000001, to_oracle(link));
    CHECK(got == want);
  }
  // d(a,b) = d(b,c): merging (a,b) first leaves c out at this threshold.
  auto chain = DistanceMatrix({"a", "b", "c"}, {0.1, 0.9, 0.1});
  auto c = agglomerate(chain, 0.45, Linkage::average);
  REQUIRE(c.size() == 2);
  CHECK(c[0].members == std::vector<std::string>{"a", "b"});
  CHECK(c[1].members == std::vector<std::string>{"c"});
}

TEST_CASE("agglomerate matches the brute-force merger") {
  for (auto link : {Linkage::average, Linkage::complete, Linkage::single}) {
    for (unsigned seed = 0; seed < 20; ++seed) {
      std::mt19937 rng(seed);
      for (std::size_t n = 2; n <= 8; ++n) {
        auto m = pairwise_distances(random_vectors(rng, n, 3));
        for (double t : {0.1, 0.4, 0.8, 1.2})
          CHECK(as_sets(agglomerate(m, t, link)) == oracle::agglomerate(square(m), t, to_oracle(link)));
      }
    }
  }
}

TEST_CASE("output is a partition and ids are minimum members") {
  std::mt19937 rng(21);
  auto vs = random_vectors(rng, 60, 5);
  auto m = pairwise_distances(vs);
  auto c = agglomerate(m, 0.6);
  std::set<std::string> seen;
  std::size_t total = 0;
  int prev = -1;
  for (const auto& cl : c) {
    CHECK(cl.id > prev);
    prev = cl.id;
    CHECK(cl.members.front() == "t" + std::to_string(cl.id));
    for (const auto& mbr : cl.members) seen.insert(mbr);
    total += cl.members.size();
  }
  CHECK(total == 60);
  CHECK(seen.size() == 60);
}

TEST_CASE("threshold monotonicity") {
  std::mt19937 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = pairwise_distances(random_vectors(rng, 30, 4));
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double t : {0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.6, 2.0}) {
      const auto n = agglomerate(m, t).size();
      CHECK(n <= prev);
      prev = n;
    }
  }
}

TEST_CASE("nn-chain route matches the matrix route") {
  for (auto link : {Linkage::average, Linkage::complete, Linkage::single}) {
    for (unsigned seed = 100; seed < 106; ++seed) {
      std::mt19937 rng(seed);
      auto vs = random_vectors(rng, 150, 6);
      auto m = pairwise_distances(vs);
      for (double t : {0.2, 0.5, 0.9}) {
        auto a = agglomerate(m, t, link);
        auto b = agglomerate_nn_chain(vs, t, link, 2);
        CHECK(a == b);
      }
    }
  }
}

TEST_CASE("cluster_terms switches route at the cap") {
  std::mt19937 rng(4);
  auto vs = random_vectors(rng, 50, 4);
  ClusteringOptions matrix{0.5, Linkage::average, 1000, 1};
  ClusteringOptions chain{0.5, Linkage::average, 10, 1};
  CHECK(cluster_terms(vs, matrix) == cluster_terms(vs, chain));
}

TEST_CASE("filter_clusters drops and splits") {
  std::vector<Cluster> in = {{0, {"a"}}, {1, {"b", "c"}}};
  auto f = filter_clusters(in);
  REQUIRE(f.clusters.size() == 1);
  CHECK(f.clusters[0].members == std::vector<std::string>{"b", "c"});
  CHECK(f.clusters[0].id == 0);
  CHECK(f.report.dropped == 1);
  CHECK(f.report.dropped_terms == 1);

  Cluster big{7, {}};
  for (int i = 0; i < 120; ++i) big.members.push_back("m" + std::to_string(i));
  auto s = filter_clusters(std::vector<Cluster>{big}, 2, 50);
  REQUIRE(s.clusters.size() == 3);
  CHECK(s.clusters[0].members.size() == 50);
  CHECK(s.clusters[1].members.size() == 50);
  CHECK(s.clusters[2].members.size() == 20);
  CHECK(s.clusters[1].members.front() == "m50");
  CHECK(s.clusters[2].id == 2);
  CHECK(s.report.split == 1);

  CHECK(filter_clusters(std::vector<Cluster>{}).clusters.empty());
  CHECK_THROWS_AS(filter_clusters(in, 1), ArgumentError);
}

TEST_CASE("cluster file round-trips") {
  std::vector<Cluster> in = {{0, {"mahkeme", "yargı"}}, {1, {"say \"x\"", "a\\b", "c"}}};
  std::stringstream io;
  write_clusters(in, io);
  CHECK(read_clusters(io) == in);
}
