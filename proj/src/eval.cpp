#include "semrel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include "semrel/errors.hpp"

namespace semrel {

Vec mean_pool(const HiddenStates& hidden, std::span<const int> mask) {
  if (hidden.values.size() != hidden.rows * hidden.cols)
    throw DomainError("hidden state buffer does not match its shape");
  if (mask.size() != hidden.rows) throw DomainError("attention mask length differs from L");
  Vec sum(hidden.cols, 0.0);
  double count = 0.0;
  for (std::size_t i = 0; i < hidden.rows; ++i) {
    if (mask[i] != 0 && mask[i] != 1) throw ArgumentError("attention mask entries must be 0 or 1");
    if (mask[i] == 0) continue;
    const auto r = hidden.row(i);
    for (std::size_t d = 0; d < hidden.cols; ++d) sum[d] += r[d];
    count += 1.0;
  }
  if (count == 0.0) throw DomainError("attention mask selects no rows");
  for (auto& v : sum) v /= count;
  return sum;
}

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<Vec> unit_rows(const std::vector<Vec>& rows, std::size_t dim, const char* what) {
  std::vector<Vec> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.size() != dim) throw DomainError(std::string(what) + " vector has the wrong dimension");
    const double n = norm(r);
    if (n == 0.0 || !std::isfinite(n)) throw DomainError(std::string(what) + " vector has zero norm");
    Vec u(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) u[i] = r[i] / n;
    out.push_back(std::move(u));
  }
  return out;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DomainError("cosine_similarity: length mismatch");
  const double nu = norm(u), nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw DomainError("cosine_similarity: zero-norm vector");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s / (nu * nv);
}

double cmnrl_loss(const ContrastiveBatch& batch) {
  if (!(batch.temperature > 0.0)) throw ConfigError("temperature must be positive");
  const std::size_t b = batch.queries.size();
  if (b == 0) throw DomainError("contrastive batch is empty");
  if (batch.positives.size() != b) throw DomainError("queries and positives differ in count");
  const std::size_t dim = batch.queries.front().size();
  const auto q = unit_rows(batch.queries, dim, "query");
  const auto p = unit_rows(batch.positives, dim, "positive");
  const auto c = unit_rows(batch.cache, dim, "cache");
  const double inv_t = 1.0 / batch.temperature;

  std::vector<double> logits(b + c.size());
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) logits[j] = dot(q[i], p[j]) * inv_t;
    for (std::size_t k = 0; k < c.size(); ++k) logits[b + k] = dot(q[i], c[k]) * inv_t;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - mx);
    // -log softmax_i = logsumexp - logit_i
    total += (mx + std::log(sum)) - logits[i];
  }
  const double loss = total / static_cast<double>(b);
  return loss < 0.0 ? 0.0 : loss;
}

std::vector<TripletRecord> build_triplets(const Corpus& corpus, bool include_co_hyponyms) {
  std::map<std::string, std::set<std::string>> synonyms, negatives;
  for (const auto& p : corpus.pairs) {
    switch (p.relation) {
      case Relation::synonym:
        synonyms[p.term_a].insert(p.term_b);
        synonyms[p.term_b].insert(p.term_a);
        break;
      case Relation::co_hyponym:
        if (!include_co_hyponyms) break;
        [[fallthrough]];
      case Relation::antonym:
        negatives[p.term_a].insert(p.term_b);
        negatives[p.term_b].insert(p.term_a);
        break;
    }
  }
  std::vector<TripletRecord> out;
  for (const auto& [term, syns] : synonyms) {
    const auto neg_it = negatives.find(term);
    for (const auto& s : syns) {
      TripletRecord t{term, s, {}};
      if (neg_it != negatives.end())
        for (const auto& n : neg_it->second)
          if (n != s) t.hard_negatives.push_back(n);
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<double> retrieval_accuracy_at(std::span<const TripletRecord> triplets,
                                          const EmbedFn& embed,
                                          std::span<const std::string> corpus_terms,
                                          std::span<const std::size_t> ks) {
  for (auto k : ks)
    if (k < 1) throw ArgumentError("k must be at least 1");
  if (triplets.empty()) throw DomainError("no triplets to evaluate");

  // Candidate pool: distinct terms in ascending order (that is the tie order).
  std::vector<std::string> pool(corpus_terms.begin(), corpus_terms.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  std::unordered_map<std::string, std::size_t> position;
  std::vector<Vec> unit;
  unit.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    position.emplace(pool[i], i);
    Vec v = embed(pool[i]);
    const std::size_t dim = unit.empty() ? v.size() : unit.front().size();
    unit.push_back(unit_rows({std::move(v)}, dim, "candidate").front());
  }

  std::vector<std::size_t> hits(ks.size(), 0);
  for (const auto& t : triplets) {
    const auto pos_it = position.find(t.positive);
    if (pos_it == position.end())
      throw ArgumentError("positive '" + t.positive + "' is not among the corpus terms");
    const Vec qv = embed(t.query);
    const Vec q = unit_rows({qv}, unit.empty() ? qv.size() : unit.front().size(), "query").front();
    const std::size_t pos = pos_it->second;
    const double pos_sim = dot(q, unit[pos]);
    // Rank of the positive = candidates ordered strictly before it.
    std::size_t ahead = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (i == pos || pool[i] == t.query) continue;
      const double s = dot(q, unit[i]);
      if (s > pos_sim || (s == pos_sim && i < pos)) ++ahead;
    }
    for (std::size_t k = 0; k < ks.size(); ++k)
      if (ahead < ks[k]) ++hits[k];
  }
  std::vector<double> out(ks.size());
  for (std::size_t k = 0; k < ks.size(); ++k)
    out[k] = static_cast<double>(hits[k]) / static_cast<double>(triplets.size());
  return out;
}

double retrieval_accuracy(std::span<const TripletRecord> triplets, const EmbedFn& embed,
                          std::span<const std::string> corpus_terms, std::size_t k) {
  const std::size_t ks[] = {k};
  return retrieval_accuracy_at(triplets, embed, corpus_terms, ks).front();
}

ClassificationMetrics classification_metrics(std::span<const Relation> predictions,
                                             std::span<const Relation> golds) {
  if (predictions.size() != golds.size())
    throw ArgumentError("predictions and golds differ in length");
  if (golds.empty()) throw ArgumentError("no labels to score");

  ClassificationMetrics m;
  m.total = golds.size();
  for (Relation r : kAllRelations) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      const bool pred = predictions[i] == r, gold = golds[i] == r;
      tp += pred && gold;
      fp += pred && !gold;
      fn += !pred && gold;
    }
    ClassScores s;
    s.support = tp + fn;
    s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                        : 0.0;
    m.per_class[r] = s;
    m.macro.support += s.support;
  }
  const auto& syn = m.per_class[Relation::synonym];
  const auto& ant = m.per_class[Relation::antonym];
  const auto& coh = m.per_class[Relation::co_hyponym];
  m.macro.precision = (syn.precision + ant.precision + coh.precision) / 3.0;
  m.macro.recall = (syn.recall + ant.recall + coh.recall) / 3.0;
  m.macro.f1 = (syn.f1 + ant.f1 + coh.f1) / 3.0;
  return m;
}

std::string format_metrics(const ClassificationMetrics& m) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-12s %9s %9s %9s %9s\n", "Class", "Precision", "Recall", "F1",
                "Support");
  os << buf;
  for (Relation r : {Relation::synonym, Relation::antonym, Relation::co_hyponym}) {
    const auto& s = m.per_class.at(r);
    std::snprintf(buf, sizeof buf, "%-12s %9.4f %9.4f %9.4f %9zu\n", std::string(to_string(r)).c_str(),
                  s.precision, s.recall, s.f1, s.support);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-12s %9.4f %9.4f %9.4f %9zu\n", "macro avg", m.macro.precision,
                m.macro.recall, m.macro.f1, m.macro.support);
  os << buf;
  return os.str();
}

}  // namespace semrel
