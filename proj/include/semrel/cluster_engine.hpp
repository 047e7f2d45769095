#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semrel/embedding_store.hpp"

namespace semrel {

enum class Linkage { average, complete, single };

std::string_view to_string(Linkage l) noexcept;
Linkage parse_linkage(std::string_view s);  // throws ConfigError

/// Symmetric n x n cosine-distance matrix with a zero diagonal, stored as
/// the strict upper triangle.
class DistanceMatrix {
 public:
  DistanceMatrix(std::vector<std::string> terms, std::vector<double> condensed);

  std::size_t size() const noexcept { return terms_.size(); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  double at(std::size_t i, std::size_t j) const noexcept;
  const std::vector<double>& condensed() const noexcept { return values_; }

  static std::size_t condensed_index(std::size_t n, std::size_t i, std::size_t j) noexcept {
    // requires i < j
    return i * n - i * (i + 1) / 2 + (j - i - 1);
  }

 private:
  std::vector<std::string> terms_;
  std::vector<double> values_;
};

struct Cluster {
  int id = 0;
  std::vector<std::string> members;

  bool operator==(const Cluster&) const = default;
};

/// Entry (i, j) = cosine_distance(v_i, v_j). Rows are split across
/// `workers` threads (0 = hardware concurrency); the result does not depend
/// on the worker count.
DistanceMatrix pairwise_distances(std::span<const TermVector> vectors, unsigned workers = 0);

/// Bottom-up merging: repeatedly merge the pair of clusters with the smallest
/// linkage distance while it is < threshold. A cluster's id is the smallest
/// input index it contains; ties go to the lexicographically lowest
/// (smaller id, larger id) pair. Returns the full partition, singletons
/// included, ordered by id with members in input order.
std::vector<Cluster> agglomerate(const DistanceMatrix& matrix, double threshold,
                                 Linkage linkage = Linkage::average);

/// Matrix-free route for inputs too large for an O(n^2) matrix: nearest-
/// neighbour chain over blocked candidate scans, O(n * dim) memory. For
/// these reducible linkages it yields the same partition as agglomerate()
/// whenever no two candidate linkage distances tie exactly.
std::vector<Cluster> agglomerate_nn_chain(std::span<const TermVector> vectors, double threshold,
                                          Linkage linkage = Linkage::average,
                                          unsigned workers = 0);

struct ClusteringOptions {
  double threshold = 0.4;
  Linkage linkage = Linkage::average;
  std::size_t matrix_term_cap = 8000;
  unsigned workers = 0;
};

/// Chooses the matrix route up to `matrix_term_cap` terms, the NN-chain
/// route above it.
std::vector<Cluster> cluster_terms(std::span<const TermVector> vectors,
                                   const ClusteringOptions& options);

struct FilterReport {
  std::size_t input_clusters = 0;
  std::size_t dropped = 0;        // below min_size
  std::size_t dropped_terms = 0;  // members of dropped clusters
  std::size_t split = 0;          // clusters chunked for prompting
  std::size_t output_clusters = 0;
};

struct FilteredClusters {
  std::vector<Cluster> clusters;  // renumbered 0..n-1 in output order
  FilterReport report;
};

/// Drops clusters smaller than min_size and cuts clusters above
/// max_prompt_size into contiguous, order-preserving chunks.
FilteredClusters filter_clusters(std::span<const Cluster> clusters, std::size_t min_size = 2,
                                 std::size_t max_prompt_size = 50);

/// Cluster file: one JSON object per line, `{"id": <int>, "members": [...]}`.
void write_clusters(std::span<const Cluster> clusters, std::ostream& out);
std::vector<Cluster> read_clusters(std::istream& in);

}  // namespace semrel
