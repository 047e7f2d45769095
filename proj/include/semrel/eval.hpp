#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "semrel/corpus.hpp"
#include "semrel/relation.hpp"

namespace semrel {

using Vec = std::vector<double>;

/// Row-major L x D matrix of hidden states.
struct HiddenStates {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

/// Masked mean of the rows of `hidden`: sum_i H_i * M_i / sum_i M_i.
/// Throws DomainError when the mask selects nothing or has the wrong length,
/// ArgumentError for a mask entry outside {0, 1}.
Vec mean_pool(const HiddenStates& hidden, std::span<const int> mask);

double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct ContrastiveBatch {
  std::vector<Vec> queries;    // u_1..u_B
  std::vector<Vec> positives;  // v_1..v_B
  std::vector<Vec> cache;      // extra negatives shared by every row
  double temperature = 0.07;
};

/// Mean over rows of the in-batch softmax cross-entropy where row i scores
/// its positive v_i against every other v_j and the cache, using cosine
/// similarity scaled by 1/temperature. Evaluated with a max-shifted
/// log-sum-exp. Throws ConfigError for temperature <= 0, DomainError for
/// zero-norm vectors or inconsistent shapes.
double cmnrl_loss(const ContrastiveBatch& batch);

struct TripletRecord {
  std::string query;
  std::string positive;
  std::vector<std::string> hard_negatives;

  bool operator==(const TripletRecord&) const = default;
};

/// One record per (term, synonym partner), in term order. Hard negatives are
/// the term's antonym partners, plus co-hyponym partners when requested.
std::vector<TripletRecord> build_triplets(const Corpus& corpus, bool include_co_hyponyms = false);

using EmbedFn = std::function<Vec(const std::string&)>;

/// Fraction of triplets whose positive ranks within the top k of
/// corpus_terms (query excluded) by descending cosine similarity to the
/// query; ties resolve by ascending term. Errors from `embed` (e.g.
/// OovError) propagate.
double retrieval_accuracy(std::span<const TripletRecord> triplets, const EmbedFn& embed,
                          std::span<const std::string> corpus_terms, std::size_t k);

/// Same ranking, evaluated for several k at once.
std::vector<double> retrieval_accuracy_at(std::span<const TripletRecord> triplets,
                                          const EmbedFn& embed,
                                          std::span<const std::string> corpus_terms,
                                          std::span<const std::size_t> ks);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassificationMetrics {
  std::map<Relation, ClassScores> per_class;
  ClassScores macro;
  std::size_t total = 0;
};

/// One-vs-rest precision/recall/F1 per relation with empty denominators
/// scored as 0; macro values are unweighted means over the three classes.
ClassificationMetrics classification_metrics(std::span<const Relation> predictions,
                                             std::span<const Relation> golds);

std::string format_metrics(const ClassificationMetrics& m);

}  // namespace semrel
