#include "semrel/embedding_store.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "semrel/text.hpp"

namespace semrel {

std::string_view to_string(Provenance p) noexcept {
  return p == Provenance::mwe_mean ? "mwe-mean" : "direct";
}

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw ParseError("embedding dimension must be positive");
}

bool EmbeddingTable::contains(std::string_view normalized_term) const {
  return index_.find(std::string(normalized_term)) != index_.end();
}

std::span<const float> EmbeddingTable::find(std::string_view normalized_term) const {
  auto it = index_.find(std::string(normalized_term));
  if (it == index_.end()) return {};
  return {data_.data() + it->second * dimension_, dimension_};
}

bool EmbeddingTable::insert(std::string normalized_term, std::span<const float> values) {
  if (values.size() != dimension_) throw DomainError("vector dimension mismatch");
  for (float f : values)
    if (!std::isfinite(f)) throw DomainError("non-finite vector component");
  auto [it, inserted] = index_.emplace(normalized_term, terms_.size());
  if (!inserted) return false;
  terms_.push_back(std::move(normalized_term));
  data_.insert(data_.end(), values.begin(), values.end());
  return true;
}

namespace {

bool parse_size(std::string_view tok, std::size_t& out) {
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && p == tok.data() + tok.size();
}

void warn(VecParseReport& r, std::size_t line, const std::string& msg) {
  if (r.warnings.size() < VecParseReport::kMaxWarnings)
    r.warnings.push_back("line " + std::to_string(line) + ": " + msg);
}

}  // namespace

ParsedVecFile parse_vec_file(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing .vec header", 1);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_whitespace(line);
  std::size_t count = 0, dim = 0;
  if (header.size() != 2 || !parse_size(header[0], count) || !parse_size(header[1], dim))
    throw ParseError("garbled .vec header '" + line + "'", 1);
  if (dim == 0) throw ParseError("dimension 0 in .vec header", 1);

  ParsedVecFile result{EmbeddingTable(dim), {}};
  auto& report = result.report;
  report.header_count = count;

  std::vector<float> row(dim);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++report.lines_read;

    // Term is everything up to the first space; components are single-space separated.
    const auto fields = split_whitespace(line);
    if (fields.size() != dim + 1) {
      ++report.skipped;
      warn(report, lineno,
           "expected " + std::to_string(dim) + " components, got " +
               std::to_string(fields.empty() ? 0 : fields.size() - 1));
      continue;
    }
    bool ok = true;
    for (std::size_t i = 0; i < dim && ok; ++i) {
      const auto tok = fields[i + 1];
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), row[i]);
      ok = ec == std::errc{} && p == tok.data() + tok.size() && std::isfinite(row[i]);
    }
    if (!ok) {
      ++report.skipped;
      warn(report, lineno, "unparseable or non-finite component");
      continue;
    }
    std::string term;
    try {
      term = normalize_term(fields[0]);
    } catch (const ArgumentError&) {
      ++report.skipped;
      warn(report, lineno, "term is not valid UTF-8");
      continue;
    }
    if (result.table.size() >= count) {
      ++report.skipped;
      warn(report, lineno, "more rows than the header count");
      continue;
    }
    if (!result.table.insert(std::move(term), row)) {
      ++report.duplicates;
      warn(report, lineno, "duplicate term '" + std::string(fields[0]) + "' (first kept)");
    }
  }
  return result;
}

void write_vec_file(const EmbeddingTable& table, std::ostream& out) {
  out << table.size() << ' ' << table.dimension() << '\n';
  char buf[64];
  for (const auto& term : table.terms()) {
    out << term;
    for (float f : table.find(term)) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, f);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(p - buf));
    }
    out << '\n';
  }
}

TermVector embed_term(const EmbeddingTable& table, std::string_view term) {
  std::string normalized = normalize_term(term);
  if (normalized.empty()) throw ArgumentError("cannot embed an empty term");
  const auto words = split_whitespace(normalized);

  if (words.size() == 1) {
    auto v = table.find(normalized);
    if (v.empty()) throw OovError(normalized);
    return {std::move(normalized), {v.begin(), v.end()}, Provenance::direct};
  }

  std::vector<double> sum(table.dimension(), 0.0);
  std::size_t found = 0;
  for (auto w : words) {
    auto v = table.find(w);
    if (v.empty()) continue;
    for (std::size_t i = 0; i < v.size(); ++i) sum[i] += v[i];
    ++found;
  }
  if (found == 0) throw OovError(normalized);
  std::vector<float> mean(sum.size());
  for (std::size_t i = 0; i < sum.size(); ++i)
    mean[i] = static_cast<float>(sum[i] / static_cast<double>(found));
  return {std::move(normalized), std::move(mean), Provenance::mwe_mean};
}

}  // namespace semrel
