// Slow, obviously-correct reference implementations used to cross-check the
// library. Nothing here calls into semrel except for plain data types.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

inline double cosine_distance(const std::vector<double>& u, const std::vector<double>& v) {
  long double dot = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += (long double)u[i] * v[i];
    uu += (long double)u[i] * u[i];
    vv += (long double)v[i] * v[i];
  }
  return double(1.0L - dot / std::sqrt(uu * vv));
}

inline double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
  return 1.0 - cosine_distance(u, v);
}

enum class Link { average, complete, single };

// Brute-force agglomeration over explicit member sets. Every step recomputes
// each linkage from the raw pairwise distances.
inline std::vector<std::vector<int>> agglomerate(const std::vector<std::vector<double>>& d,
                                                 double threshold, Link link) {
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < int(d.size()); ++i) clusters.push_back({i});
  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    bool found = false;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double acc = link == Link::average ? 0.0
                     : link == Link::complete ? -1.0
                                              : std::numeric_limits<double>::infinity();
        for (int x : clusters[a])
          for (int y : clusters[b]) {
            if (link == Link::average) acc += d[x][y];
            else if (link == Link::complete) acc = std::max(acc, d[x][y]);
            else acc = std::min(acc, d[x][y]);
          }
        if (link == Link::average) acc /= double(clusters[a].size() * clusters[b].size());
        // clusters are kept sorted by smallest member, so (a, b) order is id order
        if (!found || acc < best) {
          best = acc;
          ba = a;
          bb = b;
          found = true;
        }
      }
    }
    if (!found || !(best < threshold)) break;
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    std::sort(clusters[ba].begin(), clusters[ba].end());
    clusters.erase(clusters.begin() + long(bb));
    std::sort(clusters.begin(), clusters.end());
  }
  return clusters;
}

inline std::vector<double> mean_pool(const std::vector<std::vector<double>>& h,
                                     const std::vector<int>& mask) {
  std::vector<double> num(h.empty() ? 0 : h[0].size(), 0.0);
  double den = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = 0; j < num.size(); ++j) num[j] += h[i][j] * mask[i];
    den += mask[i];
  }
  for (auto& x : num) x /= den;
  return num;
}

// Direct softmax, no shift, long double.
inline double cmnrl(const std::vector<std::vector<double>>& u, const std::vector<std::vector<double>>& v,
                    const std::vector<std::vector<double>>& c, double tau) {
  long double total = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    long double denom = 0, numer = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const long double e = std::exp((long double)cosine_similarity(u[i], v[j]) / tau);
      denom += e;
      if (j == i) numer = e;
    }
    for (const auto& x : c) denom += std::exp((long double)cosine_similarity(u[i], x) / tau);
    total += -std::log(numer / denom);
  }
  return double(total / u.size());
}

// Full sort of the candidate pool; returns the number of hits for each k.
inline double retrieval(const std::vector<std::pair<std::string, std::string>>& queries,
                        const std::map<std::string, std::vector<double>>& vectors,
                        std::vector<std::string> pool, std::size_t k) {
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  std::size_t hits = 0;
  for (const auto& [q, pos] : queries) {
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& t : pool)
      if (t != q) ranked.emplace_back(cosine_similarity(vectors.at(q), vectors.at(t)), t);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t r = 0; r < ranked.size() && r < k; ++r)
      if (ranked[r].second == pos) ++hits;
  }
  return double(hits) / double(queries.size());
}

struct Prf {
  double p, r, f;
};

// Confusion matrix over labels 0..2, zero-division scored as 0.
inline std::vector<Prf> per_class(const std::vector<int>& pred, const std::vector<int>& gold) {
  long cm[3][3] = {};
  for (std::size_t i = 0; i < pred.size(); ++i) ++cm[gold[i]][pred[i]];
  std::vector<Prf> out;
  for (int c = 0; c < 3; ++c) {
    long col = 0, row = 0;
    for (int k = 0; k < 3; ++k) {
      col += cm[k][c];
      row += cm[c][k];
    }
    const double p = col ? double(cm[c][c]) / col : 0.0;
    const double r = row ? double(cm[c][c]) / row : 0.0;
    out.push_back({p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0});
  }
  return out;
}

}  // namespace oracle
