#include "semrel/cluster_engine.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <thread>

#include "semrel/text.hpp"

namespace semrel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

unsigned resolve_workers(unsigned workers) {
  if (workers != 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold <= 2.0))
    throw ConfigError("threshold must lie in (0, 2], got " + std::to_string(threshold));
}

double combine(Linkage linkage, double d_ik, double d_jk, double size_i, double size_j) {
  switch (linkage) {
    case Linkage::single: return std::min(d_ik, d_jk);
    case Linkage::complete: return std::max(d_ik, d_jk);
    case Linkage::average: break;
  }
  return (size_i * d_ik + size_j * d_jk) / (size_i + size_j);
}

std::vector<Cluster> to_clusters(const std::vector<std::string>& terms,
                                 std::vector<std::vector<std::size_t>> groups) {
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  std::vector<Cluster> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    Cluster c{static_cast<int>(g.front()), {}};
    c.members.reserve(g.size());
    for (auto idx : g) c.members.push_back(terms[idx]);
    out.push_back(std::move(c));
  }
  return out;
}

// Greedy merging over a mutable condensed matrix, Lance-Williams updates and
// a per-row nearest-neighbour cache (row i only looks at active j > i).
std::vector<std::vector<std::size_t>> merge_matrix(std::size_t n, std::vector<double>& dist,
                                                   double threshold, Linkage linkage) {
  auto d = [&](std::size_t a, std::size_t b) -> double& {
    if (a > b) std::swap(a, b);
    return dist[DistanceMatrix::condensed_index(n, a, b)];
  };

  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<double> size(n, 1.0);
  std::vector<char> active(n, 1);
  // Linked list of active indices for O(active) row scans.
  std::vector<std::size_t> next(n + 1), prev(n + 1);
  const std::size_t head = n;  // sentinel
  for (std::size_t i = 0; i <= n; ++i) {
    next[i] = (i == n) ? 0 : i + 1;
    prev[i] = (i == 0) ? n : i - 1;
  }
  if (n == 0) next[head] = head;
  else next[n - 1] = head;
  prev[head] = n == 0 ? head : n - 1;

  std::vector<std::size_t> nn(n, n);
  std::vector<double> nnd(n, kInf);
  auto rescan = [&](std::size_t k) {
    nn[k] = n;
    nnd[k] = kInf;
    for (std::size_t j = next[k]; j != head; j = next[j]) {
      const double v = d(k, j);
      if (v < nnd[k]) {
        nnd[k] = v;
        nn[k] = j;
      }
    }
  };
  for (std::size_t k = 0; k < n; ++k) rescan(k);

  for (;;) {
    std::size_t best = n;
    double best_d = kInf;
    for (std::size_t k = next[head]; k != head; k = next[k]) {
      if (nnd[k] < best_d) {
        best_d = nnd[k];
        best = k;
      }
    }
    if (best == n || !(best_d < threshold)) break;

    const std::size_t i = best, j = nn[best];
    // unlink j
    active[j] = 0;
    next[prev[j]] = next[j];
    prev[next[j]] = prev[j];

    for (std::size_t k = next[head]; k != head; k = next[k]) {
      if (k == i) continue;
      d(i, k) = combine(linkage, d(i, k), d(j, k), size[i], size[j]);
    }
    size[i] += size[j];
    members[i].insert(members[i].end(), members[j].begin(), members[j].end());
    members[j].clear();

    rescan(i);
    for (std::size_t k = next[head]; k != head && k < j; k = next[k]) {
      if (k == i) continue;
      if (k < i) {
        if (nn[k] == i || nn[k] == j) {
          rescan(k);
        } else {
          const double v = d(k, i);
          if (v < nnd[k] || (v == nnd[k] && i < nn[k])) {
            nnd[k] = v;
            nn[k] = i;
          }
        }
      } else if (nn[k] == j) {
        rescan(k);
      }
    }
  }

  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < n; ++k)
    if (active[k]) groups.push_back(std::move(members[k]));
  return groups;
}

std::vector<double> condensed_distances(std::span<const TermVector> vectors, unsigned workers) {
  const std::size_t n = vectors.size();
  std::vector<double> values(n < 2 ? 0 : n * (n - 1) / 2);
  const unsigned w = std::max(1u, std::min<unsigned>(resolve_workers(workers),
                                                      static_cast<unsigned>(n)));
  auto rows = [&](std::size_t r) {
    for (std::size_t i = r; i < n; i += w) {
      const std::span<const float> u(vectors[i].vector);
      for (std::size_t j = i + 1; j < n; ++j)
        values[DistanceMatrix::condensed_index(n, i, j)] =
            cosine_distance<float>(u, std::span<const float>(vectors[j].vector));
    }
  };
  if (w <= 1) {
    rows(0);
  } else {
    std::vector<std::jthread> pool;
    // Interleaved rows balance the triangular workload; each cell has one writer.
    for (unsigned t = 0; t < w; ++t) pool.emplace_back(rows, t);
  }
  return values;
}

void check_vectors(std::span<const TermVector> vectors) {
  if (vectors.size() < 2) throw DomainError("need at least two vectors to cluster");
  const std::size_t dim = vectors.front().vector.size();
  for (const auto& tv : vectors) {
    if (tv.vector.size() != dim)
      throw DomainError("dimension mismatch for term '" + tv.term + "'");
    double norm = 0.0;
    for (float f : tv.vector) norm += static_cast<double>(f) * f;
    if (norm == 0.0) throw DomainError("zero-norm vector for term '" + tv.term + "'");
  }
}

}  // namespace

std::string_view to_string(Linkage l) noexcept {
  switch (l) {
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    case Linkage::single: return "single";
  }
  return "average";
}

Linkage parse_linkage(std::string_view s) {
  if (s == "average") return Linkage::average;
  if (s == "complete") return Linkage::complete;
  if (s == "single") return Linkage::single;
  throw ConfigError("unknown linkage '" + std::string(s) + "' (expected average|complete|single)");
}

DistanceMatrix::DistanceMatrix(std::vector<std::string> terms, std::vector<double> condensed)
    : terms_(std::move(terms)), values_(std::move(condensed)) {
  const std::size_t n = terms_.size();
  if (values_.size() != (n < 2 ? 0 : n * (n - 1) / 2))
    throw DomainError("condensed matrix size does not match term count");
  for (double v : values_)
    if (!(v >= 0.0 && v <= 2.0)) throw DomainError("distance outside [0, 2]");
}

double DistanceMatrix::at(std::size_t i, std::size_t j) const noexcept {
  if (i == j) return 0.0;
  if (i > j) std::swap(i, j);
  return values_[condensed_index(terms_.size(), i, j)];
}

DistanceMatrix pairwise_distances(std::span<const TermVector> vectors, unsigned workers) {
  check_vectors(vectors);
  std::vector<std::string> terms;
  terms.reserve(vectors.size());
  for (const auto& tv : vectors) terms.push_back(tv.term);
  return DistanceMatrix(std::move(terms), condensed_distances(vectors, workers));
}

std::vector<Cluster> agglomerate(const DistanceMatrix& matrix, double threshold, Linkage linkage) {
  check_threshold(threshold);
  std::vector<double> work = matrix.condensed();
  return to_clusters(matrix.terms(), merge_matrix(matrix.size(), work, threshold, linkage));
}

namespace {

struct Candidate {
  double distance = kInf;
  std::size_t id = std::numeric_limits<std::size_t>::max();

  bool better_than(const Candidate& o) const noexcept {
    return distance < o.distance || (distance == o.distance && id < o.id);
  }
};

class NnChainClusterer {
 public:
  NnChainClusterer(std::span<const TermVector> vectors, Linkage linkage, unsigned workers)
      : n_(vectors.size()),
        dim_(vectors.front().vector.size()),
        linkage_(linkage),
        workers_(resolve_workers(workers)),
        unit_(n_ * dim_),
        members_(n_),
        active_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      double norm = 0.0;
      for (float f : vectors[i].vector) norm += static_cast<double>(f) * f;
      norm = std::sqrt(norm);
      for (std::size_t k = 0; k < dim_; ++k) unit_[i * dim_ + k] = vectors[i].vector[k] / norm;
      members_[i] = {i};
      active_[i] = i;
    }
    // For average linkage the unit rows double as per-cluster sums.
  }

  std::vector<std::vector<std::size_t>> run(double threshold) {
    std::vector<std::vector<std::size_t>> finished;
    std::vector<std::size_t> chain;
    while (!active_.empty()) {
      if (chain.empty()) chain.push_back(active_.front());
      const std::size_t a = chain.back();
      if (active_.size() == 1) {
        finish(a, finished);
        chain.pop_back();
        continue;
      }
      Candidate best = nearest(a);
      const bool has_prev = chain.size() >= 2;
      if (has_prev) {
        const std::size_t p = chain[chain.size() - 2];
        const double dp = linkage_distance(a, p);
        if (dp <= best.distance) best = {dp, p};
      }
      if (!(best.distance < threshold)) {
        finish(a, finished);
        chain.pop_back();
        continue;
      }
      if (has_prev && best.id == chain[chain.size() - 2]) {
        chain.pop_back();
        chain.pop_back();
        merge(a, best.id);
        continue;
      }
      chain.push_back(best.id);
    }
    return finished;
  }

 private:
  const double* row(std::size_t id) const { return unit_.data() + id * dim_; }
  double* row(std::size_t id) { return unit_.data() + id * dim_; }

  double dot(const double* x, const double* y) const {
    double s = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) s += x[k] * y[k];
    return s;
  }

  static double clamp(double d) { return d < 0.0 ? 0.0 : (d > 2.0 ? 2.0 : d); }

  double linkage_distance(std::size_t a, std::size_t b) const {
    if (linkage_ == Linkage::average) {
      const double na = static_cast<double>(members_[a].size());
      const double nb = static_cast<double>(members_[b].size());
      return clamp(1.0 - dot(row(a), row(b)) / (na * nb));
    }
    double acc = linkage_ == Linkage::single ? kInf : -kInf;
    for (auto x : members_[a])
      for (auto y : members_[b]) {
        const double d = clamp(1.0 - dot(row(x), row(y)));
        acc = linkage_ == Linkage::single ? std::min(acc, d) : std::max(acc, d);
      }
    return acc;
  }

  Candidate scan(std::size_t a, std::size_t begin, std::size_t end) const {
    Candidate best;
    for (std::size_t p = begin; p < end; ++p) {
      const std::size_t b = active_[p];
      if (b == a) continue;
      Candidate c{linkage_distance(a, b), b};
      if (c.better_than(best)) best = c;
    }
    return best;
  }

  Candidate nearest(std::size_t a) const {
    constexpr std::size_t kBlock = 2048;
    const std::size_t m = active_.size();
    const std::size_t blocks = (m + kBlock - 1) / kBlock;
    const unsigned w = static_cast<unsigned>(std::min<std::size_t>(workers_, blocks));
    if (w <= 1 || m * dim_ < (1u << 16)) return scan(a, 0, m);

    std::vector<Candidate> partial(w);
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < w; ++t)
        pool.emplace_back([&, t] {
          for (std::size_t blk = t; blk < blocks; blk += w) {
            const Candidate c = scan(a, blk * kBlock, std::min(m, (blk + 1) * kBlock));
            if (c.better_than(partial[t])) partial[t] = c;
          }
        });
    }
    Candidate best;
    for (const auto& c : partial)
      if (c.better_than(best)) best = c;
    return best;
  }

  void merge(std::size_t a, std::size_t b) {
    const std::size_t keep = std::min(a, b), drop = std::max(a, b);
    if (linkage_ == Linkage::average) {
      double* dst = row(keep);
      const double* src = row(drop);
      for (std::size_t k = 0; k < dim_; ++k) dst[k] += src[k];
    }
    auto& mk = members_[keep];
    mk.insert(mk.end(), members_[drop].begin(), members_[drop].end());
    members_[drop].clear();
    members_[drop].shrink_to_fit();
    erase_active(drop);
  }

  void finish(std::size_t a, std::vector<std::vector<std::size_t>>& out) {
    out.push_back(std::move(members_[a]));
    erase_active(a);
  }

  void erase_active(std::size_t id) {
    auto it = std::lower_bound(active_.begin(), active_.end(), id);
    active_.erase(it);
  }

  std::size_t n_;
  std::size_t dim_;
  Linkage linkage_;
  unsigned workers_;
  std::vector<double> unit_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::size_t> active_;  // sorted ids
};

}  // namespace

std::vector<Cluster> agglomerate_nn_chain(std::span<const TermVector> vectors, double threshold,
                                          Linkage linkage, unsigned workers) {
  check_threshold(threshold);
  check_vectors(vectors);
  std::vector<std::string> terms;
  terms.reserve(vectors.size());
  for (const auto& tv : vectors) terms.push_back(tv.term);
  NnChainClusterer clusterer(vectors, linkage, workers);
  return to_clusters(terms, clusterer.run(threshold));
}

std::vector<Cluster> cluster_terms(std::span<const TermVector> vectors,
                                   const ClusteringOptions& options) {
  check_threshold(options.threshold);
  if (vectors.size() > options.matrix_term_cap)
    return agglomerate_nn_chain(vectors, options.threshold, options.linkage, options.workers);
  check_vectors(vectors);
  std::vector<std::string> terms;
  terms.reserve(vectors.size());
  for (const auto& tv : vectors) terms.push_back(tv.term);
  auto dist = condensed_distances(vectors, options.workers);
  return to_clusters(terms, merge_matrix(vectors.size(), dist, options.threshold, options.linkage));
}

FilteredClusters filter_clusters(std::span<const Cluster> clusters, std::size_t min_size,
                                 std::size_t max_prompt_size) {
  if (min_size < 2) throw ArgumentError("min_size must be at least 2");
  if (max_prompt_size < 1) throw ArgumentError("max_prompt_size must be positive");
  FilteredClusters out;
  out.report.input_clusters = clusters.size();
  for (const auto& c : clusters) {
    if (c.members.size() < min_size) {
      ++out.report.dropped;
      out.report.dropped_terms += c.members.size();
      continue;
    }
    if (c.members.size() > max_prompt_size) ++out.report.split;
    for (std::size_t start = 0; start < c.members.size(); start += max_prompt_size) {
      const std::size_t stop = std::min(c.members.size(), start + max_prompt_size);
      out.clusters.push_back(
          {static_cast<int>(out.clusters.size()),
           {c.members.begin() + static_cast<std::ptrdiff_t>(start),
            c.members.begin() + static_cast<std::ptrdiff_t>(stop)}});
    }
  }
  out.report.output_clusters = out.clusters.size();
  return out;
}

void write_clusters(std::span<const Cluster> clusters, std::ostream& out) {
  for (const auto& c : clusters) {
    out << "{\"id\": " << c.id << ", \"members\": [";
    for (std::size_t i = 0; i < c.members.size(); ++i)
      out << (i ? ", " : "") << json_quote(c.members[i]);
    out << "]}\n";
  }
}

std::vector<Cluster> read_clusters(std::istream& in) {
  std::vector<Cluster> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("cluster record: ") + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer() ||
        !j.contains("members") || !j["members"].is_array())
      throw ParseError("cluster record needs integer 'id' and array 'members'", lineno);
    Cluster c{j["id"].get<int>(), {}};
    for (const auto& m : j["members"]) {
      if (!m.is_string()) throw ParseError("cluster member is not a string", lineno);
      c.members.push_back(m.get<std::string>());
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace semrel
