#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semrel/errors.hpp"

namespace semrel {

enum class Provenance { direct, mwe_mean };

std::string_view to_string(Provenance p) noexcept;

struct TermVector {
  std::string term;
  std::vector<float> vector;
  Provenance provenance = Provenance::direct;
};

/// Immutable after construction; concurrent reads are safe.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool contains(std::string_view normalized_term) const;

  /// Empty span when absent. The term must already be normalized.
  std::span<const float> find(std::string_view normalized_term) const;

  /// Terms in insertion (file) order.
  const std::vector<std::string>& terms() const noexcept { return terms_; }

  /// Returns false (and stores nothing) when the term is already present.
  bool insert(std::string normalized_term, std::span<const float> values);

 private:
  std::size_t dimension_;
  std::vector<std::string> terms_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct VecParseReport {
  std::size_t header_count = 0;
  std::size_t lines_read = 0;
  std::size_t skipped = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> warnings;  // capped, see kMaxWarnings
  static constexpr std::size_t kMaxWarnings = 100;
};

struct ParsedVecFile {
  EmbeddingTable table;
  VecParseReport report;
};

/// Streams a textual `.vec` file: header `<count> <dimension>`, then
/// `<term> <f1> ... <fdim>` rows. Malformed rows are skipped and reported;
/// a bad header or zero dimension throws ParseError.
ParsedVecFile parse_vec_file(std::istream& in);

/// Inverse of parse_vec_file for retained entries (shortest round-trip floats).
void write_vec_file(const EmbeddingTable& table, std::ostream& out);

/// Single word: the stored vector. Several whitespace-separated words: the
/// arithmetic mean of the constituents found in the table (absent ones are
/// omitted). Throws OovError when nothing is found, ArgumentError on an
/// empty term.
TermVector embed_term(const EmbeddingTable& table, std::string_view term);

/// 1 - cos(u, v), clamped to [0, 2]. Throws DomainError on length mismatch
/// or a zero-norm argument.
template <typename T>
double cosine_distance(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) throw DomainError("cosine_distance: length mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i], b = v[i];
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) throw DomainError("cosine_distance: zero-norm vector");
  const double d = 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
  return d < 0.0 ? 0.0 : (d > 2.0 ? 2.0 : d);
}

inline double cosine_distance(const std::vector<double>& u, const std::vector<double>& v) {
  return cosine_distance<double>(std::span<const double>(u), std::span<const double>(v));
}

inline double cosine_distance(const std::vector<float>& u, const std::vector<float>& v) {
  return cosine_distance<float>(std::span<const float>(u), std::span<const float>(v));
}

}  // namespace semrel
