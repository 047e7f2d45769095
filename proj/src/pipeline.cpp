#include "semrel/pipeline.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>

#include "semrel/corpus.hpp"
#include "semrel/dictionary.hpp"
#include "semrel/dispatch.hpp"
#include "semrel/embedding_store.hpp"
#include "semrel/enrichment.hpp"
#include "semrel/errors.hpp"
#include "semrel/eval.hpp"
#include "semrel/prompt.hpp"
#include "semrel/text.hpp"

namespace semrel {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::embed: return "embed";
    case Phase::cluster: return "cluster";
    case Phase::enrich: return "enrich";
    case Phase::integrate: return "integrate";
    case Phase::assemble: return "assemble";
    case Phase::stats: return "stats";
    case Phase::eval: return "eval";
  }
  return "?";
}

std::optional<Phase> parse_phase(std::string_view s) noexcept {
  for (Phase p : kAllPhases)
    if (to_string(p) == s) return p;
  return std::nullopt;
}

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const PrerequisiteError*>(&e)) return kExitPrerequisite;
  if (dynamic_cast<const ConfigError*>(&e)) return kExitValidation;
  return kExitRuntime;
}

void write_term_vectors(std::span<const TermVector> vectors, std::ostream& out) {
  char buf[32];
  for (const auto& tv : vectors) {
    out << tv.term << '\t' << to_string(tv.provenance) << '\t';
    for (std::size_t i = 0; i < tv.vector.size(); ++i) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, tv.vector[i]);
      if (i) out << ' ';
      out.write(buf, end - buf);
    }
    out << '\n';
  }
}

std::vector<TermVector> read_term_vectors(std::istream& in) {
  std::vector<TermVector> result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError("expected term<TAB>provenance<TAB>values", lineno);
    TermVector tv;
    tv.term = line.substr(0, t1);
    const auto prov = std::string_view(line).substr(t1 + 1, t2 - t1 - 1);
    if (prov == "direct") tv.provenance = Provenance::direct;
    else if (prov == "mwe-mean") tv.provenance = Provenance::mwe_mean;
    else throw ParseError("unknown provenance '" + std::string(prov) + "'", lineno);
    for (auto tok : split_whitespace(std::string_view(line).substr(t2 + 1))) {
      float v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("bad vector component '" + std::string(tok) + "'", lineno);
      tv.vector.push_back(v);
    }
    if (!result.empty() && tv.vector.size() != result.front().vector.size())
      throw ParseError("inconsistent vector dimension", lineno);
    result.push_back(std::move(tv));
  }
  return result;
}

namespace {

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

void write_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << bytes;
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) % 1000;
  std::ostringstream s;
  s << std::put_time(&tm, "%FT%T") << '.' << std::setw(3) << std::setfill('0') << ms.count() << 'Z';
  return s.str();
}

class Logger {
 public:
  Logger(std::ostream& out, Phase phase) : out_(out), phase_(phase) {}

  void operator()(std::string_view level, std::string_view event, ojson fields = ojson::object()) {
    ojson line;
    line["ts"] = utc_now();
    line["level"] = level;
    line["phase"] = to_string(phase_);
    line["event"] = event;
    for (auto& [k, v] : fields.items()) line[k] = v;
    std::lock_guard lock(mu_);
    out_ << line.dump() << '\n';
    out_.flush();
  }

 private:
  std::ostream& out_;
  Phase phase_;
  std::mutex mu_;
};

// One pipeline instance per output directory.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) {
    const auto path = dir / artifacts::kLock;
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error("output directory " + dir.string() + " is in use by another pipeline run");
    }
  }
  ~DirectoryLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  int fd_ = -1;
};

struct Input {
  std::string name;
  fs::path path;
  Phase producer;  // phase that writes it; ignored for external inputs
  bool external = false;
};

struct PhaseSpec {
  std::vector<Input> inputs;
  std::vector<std::string> outputs;
  ojson config;  // the slice of the config the phase depends on
};

fs::path out_path(const PipelineConfig& cfg, std::string_view name) {
  return cfg.paths.output_dir / std::string(name);
}

Input produced(const PipelineConfig& cfg, std::string_view name, Phase producer) {
  return {std::string(name), out_path(cfg, name), producer, false};
}

Input external(std::string name, const fs::path& path) { return {std::move(name), path, Phase::embed, true}; }

PhaseSpec phase_spec(Phase phase, const PipelineConfig& cfg, const std::string& provider_name) {
  const ojson all = cfg.to_json();
  PhaseSpec s;
  switch (phase) {
    case Phase::embed:
      s.inputs = {external("lexicon", cfg.paths.lexicon), external("vectors", cfg.paths.vectors)};
      s.outputs = {std::string(artifacts::kEmbeddings), std::string(artifacts::kOov)};
      s.config = ojson::object();
      break;
    case Phase::cluster:
      s.inputs = {produced(cfg, artifacts::kEmbeddings, Phase::embed)};
      s.outputs = {std::string(artifacts::kClusters)};
      s.config = all["clustering"];
      s.config.erase("workers");
      break;
    case Phase::enrich: {
      s.inputs = {produced(cfg, artifacts::kClusters, Phase::cluster)};
      s.outputs = {std::string(artifacts::kResponses), std::string(artifacts::kLlmPairs),
                   std::string(artifacts::kEnrichFailures)};
      const auto& tmpl = builtin_template(PromptKind::semantic_enrichment);
      s.config = {{"provider", provider_name},
                  {"model_name", cfg.provider.model_name},
                  {"options", ojson::parse(cfg.provider.options.dump())},
                  {"template", tmpl.version},
                  {"template_digest", sha256_hex(tmpl.body)}};
      if (provider_name == "mock") s.config["mock_seed"] = cfg.provider.mock_seed;
      break;
    }
    case Phase::integrate:
      s.inputs = {external("dictionary", cfg.paths.dictionary),
                  produced(cfg, artifacts::kLlmPairs, Phase::enrich)};
      s.outputs = {std::string(artifacts::kDictPairs), std::string(artifacts::kDictionaryReport)};
      s.config = all["dictionary"];
      break;
    case Phase::assemble:
      s.inputs = {produced(cfg, artifacts::kLlmPairs, Phase::enrich),
                  produced(cfg, artifacts::kDictPairs, Phase::integrate)};
      s.outputs = {std::string(artifacts::kCorpus), std::string(artifacts::kCorpusSummary)};
      s.config = ojson::object();
      break;
    case Phase::stats:
      s.inputs = {produced(cfg, artifacts::kCorpus, Phase::assemble),
                  produced(cfg, artifacts::kCorpusSummary, Phase::assemble)};
      s.outputs = {std::string(artifacts::kStats), std::string(artifacts::kStatsText)};
      s.config = all["stats"];
      break;
    case Phase::eval:
      s.inputs = {produced(cfg, artifacts::kCorpus, Phase::assemble),
                  external("vectors", cfg.paths.vectors)};
      if (cfg.paths.predictions) s.inputs.push_back(external("predictions", *cfg.paths.predictions));
      s.outputs = {std::string(artifacts::kTriplets), std::string(artifacts::kEval),
                   std::string(artifacts::kEvalText)};
      s.config = all["eval"];
      break;
  }
  return s;
}

fs::path manifest_path(const PipelineConfig& cfg, Phase phase) {
  return cfg.paths.output_dir / (std::string(to_string(phase)) + ".manifest.json");
}

void check_prerequisites(Phase phase, const PhaseSpec& spec) {
  for (const auto& in : spec.inputs) {
    if (fs::is_regular_file(in.path)) continue;
    if (in.external) throw ConfigError("input file does not exist: " + in.path.string());
    throw PrerequisiteError("phase '" + std::string(to_string(phase)) + "' needs " +
                            in.path.string() + "; run '" + std::string(to_string(in.producer)) +
                            "' first");
  }
}

ojson input_digests(const PhaseSpec& spec) {
  ojson d = ojson::object();
  for (const auto& in : spec.inputs) d[in.name] = file_sha256(in.path);
  return d;
}

bool up_to_date(const PipelineConfig& cfg, Phase phase, const PhaseSpec& spec,
                const std::string& config_digest, const ojson& inputs) {
  std::ifstream in(manifest_path(cfg, phase));
  if (!in) return false;
  const auto m = ojson::parse(in, nullptr, false);
  if (m.is_discarded() || !m.is_object()) return false;
  if (m.value("config_digest", "") != config_digest) return false;
  if (!m.contains("inputs") || m["inputs"] != inputs) return false;
  if (!m.contains("outputs") || !m["outputs"].is_object()) return false;
  for (const auto& name : spec.outputs) {
    const auto p = out_path(cfg, name);
    if (!m["outputs"].contains(name) || !fs::is_regular_file(p)) return false;
    if (m["outputs"][name] != file_sha256(p)) return false;
  }
  return true;
}

void write_manifest(const PipelineConfig& cfg, Phase phase, const PhaseSpec& spec,
                    const std::string& config_digest, const ojson& inputs, const ojson& counters) {
  ojson m;
  m["phase"] = to_string(phase);
  m["config"] = spec.config;
  m["config_digest"] = config_digest;
  m["inputs"] = inputs;
  ojson outputs = ojson::object();
  for (const auto& name : spec.outputs) outputs[name] = file_sha256(out_path(cfg, name));
  m["outputs"] = outputs;
  m["counters"] = counters;
  write_atomic(manifest_path(cfg, phase), m.dump(2) + "\n");
}

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return in;
}

template <typename Writer>
std::string render(Writer&& w) {
  std::ostringstream s;
  w(s);
  return s.str();
}

std::vector<SemanticPair> read_pairs(const fs::path& p, Source source) {
  auto in = open_input(p);
  return read_jsonl(in, source).pairs;
}

// ---- phases ---------------------------------------------------------------

ojson run_embed(const PipelineConfig& cfg, Logger& log) {
  auto vin = open_input(cfg.paths.vectors);
  auto parsed = parse_vec_file(vin);
  for (const auto& w : parsed.report.warnings) log("warn", "vectors.skipped_row", {{"detail", w}});
  log("info", "vectors.loaded", {{"entries", parsed.table.size()},
                                 {"dimension", parsed.table.dimension()},
                                 {"skipped", parsed.report.skipped},
                                 {"duplicates", parsed.report.duplicates}});

  auto lin = open_input(cfg.paths.lexicon);
  std::vector<std::string> terms;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0, invalid = 0;
  while (std::getline(lin, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!is_valid_utf8(line)) {
      ++invalid;
      log("warn", "lexicon.invalid_utf8", {{"line", lineno}});
      continue;
    }
    auto term = normalize_term(line);
    if (term.empty() || !seen.insert(term).second) continue;
    terms.push_back(std::move(term));
  }

  std::vector<TermVector> vectors;
  std::vector<std::string> oov;
  std::size_t mwe = 0, zero_norm = 0;
  for (const auto& t : terms) {
    try {
      auto tv = embed_term(parsed.table, t);
      double norm = 0.0;
      for (float x : tv.vector) norm += double(x) * x;
      if (norm == 0.0) {
        ++zero_norm;
        log("warn", "embed.zero_norm", {{"term", t}});
        continue;
      }
      if (tv.provenance == Provenance::mwe_mean) ++mwe;
      vectors.push_back(std::move(tv));
    } catch (const OovError&) {
      oov.push_back(t);
    }
  }
  write_atomic(out_path(cfg, artifacts::kEmbeddings),
               render([&](std::ostream& o) { write_term_vectors(vectors, o); }));
  std::string oov_text;
  for (const auto& t : oov) oov_text += t + "\n";
  write_atomic(out_path(cfg, artifacts::kOov), oov_text);
  if (!oov.empty()) log("warn", "embed.oov", {{"count", oov.size()}});
  return {{"lexicon_terms", terms.size()}, {"embedded", vectors.size()}, {"mwe_mean", mwe},
          {"oov", oov.size()},            {"zero_norm", zero_norm},      {"invalid_lines", invalid}};
}

ojson run_cluster(const PipelineConfig& cfg, Logger& log) {
  auto in = open_input(out_path(cfg, artifacts::kEmbeddings));
  const auto vectors = read_term_vectors(in);
  if (vectors.empty()) throw Error("no embedded terms to cluster");
  const auto& c = cfg.clustering;
  const bool matrix = vectors.size() <= c.matrix_term_cap;
  log("info", "cluster.start", {{"terms", vectors.size()}, {"route", matrix ? "matrix" : "nn-chain"}});
  const auto raw = cluster_terms(vectors, {c.threshold, c.linkage, c.matrix_term_cap, c.workers});
  const auto filtered = filter_clusters(raw, c.min_size, c.max_prompt_size);
  write_atomic(out_path(cfg, artifacts::kClusters),
               render([&](std::ostream& o) { write_clusters(filtered.clusters, o); }));
  std::size_t retained = 0;
  for (const auto& cl : filtered.clusters) retained += cl.members.size();
  const auto& r = filtered.report;
  return {{"terms", vectors.size()},
          {"route", matrix ? "matrix" : "nn-chain"},
          {"raw_clusters", r.input_clusters},
          {"dropped_clusters", r.dropped},
          {"dropped_terms", r.dropped_terms},
          {"split_clusters", r.split},
          {"clusters", r.output_clusters},
          {"retained_terms", retained},
          {"retained_ratio", double(retained) / double(vectors.size())}};
}

ojson run_enrich(const PipelineConfig& cfg, const RunOptions& opt, Provider& provider, Logger& log,
                 bool& dry_run) {
  auto in = open_input(out_path(cfg, artifacts::kClusters));
  const auto clusters = read_clusters(in);
  const auto& tmpl = builtin_template(PromptKind::semantic_enrichment);
  const auto cost =
      estimate_cost(clusters, tmpl, cfg.provider, whitespace_token_counter(cfg.provider.token_inflation));
  ojson counters = {{"clusters", clusters.size()},
                    {"estimated_input_tokens", cost.input_tokens},
                    {"estimated_usd", cost.usd}};
  log("info", "enrich.cost_estimate", counters);
  if (opt.dry_run) {
    dry_run = true;
    return counters;
  }
  if (clusters.empty()) throw Error("no clusters to enrich");

  DispatchOptions dopt;
  dopt.prompt_template = &tmpl;
  dopt.checkpoint = out_path(cfg, artifacts::kCheckpoint);
  dopt.on_outcome = [&](const DispatchOutcome& o) {
    log(o.ok ? "info" : "warn", "enrich.outcome",
        {{"cluster_id", o.cluster_id}, {"ok", o.ok}, {"attempts", o.attempts}});
  };
  const auto outcomes = dispatch_batch(clusters, provider, cfg.provider, dopt);

  std::map<int, const Cluster*> by_id;
  for (const auto& c : clusters) by_id[c.id] = &c;

  std::vector<EnrichmentResponse> responses;
  std::vector<Cluster> aligned;
  std::string responses_text, failures_text, audit_text;
  std::size_t restored = 0, failed = 0, parse_failed = 0, repaired = 0;
  for (const auto& o : outcomes) {
    const Cluster& cluster = *by_id.at(o.cluster_id);
    ojson audit = {{"cluster_id", o.cluster_id}, {"timestamp", utc_now()}, {"ok", o.ok},
                   {"attempts", o.attempts},     {"from_checkpoint", o.from_checkpoint}};
    if (o.from_checkpoint) ++restored;
    if (!o.ok) {
      ++failed;
      audit["error"] = o.error;
      failures_text += ojson({{"cluster_id", o.cluster_id}, {"stage", "request"},
                              {"attempts", o.attempts}, {"error", o.error}})
                           .dump() + "\n";
      audit_text += audit.dump() + "\n";
      continue;
    }
    audit["raw"] = o.raw;
    try {
      auto r = parse_response(o.raw);
      audit["repair_applied"] = r.repair_applied;
      if (r.repair_applied) ++repaired;
      ojson line = {{"cluster_id", o.cluster_id},
                    {"members", cluster.members},
                    {"repair_applied", r.repair_applied},
                    {"response", ojson::parse(serialize_response(r))}};
      responses_text += line.dump() + "\n";
      responses.push_back(std::move(r));
      aligned.push_back(cluster);
    } catch (const ResponseParseError& e) {
      ++parse_failed;
      audit["repair_applied"] = false;
      audit["error"] = e.what();
      failures_text += ojson({{"cluster_id", o.cluster_id}, {"stage", "parse"},
                              {"error", e.what()}, {"raw", e.raw()}})
                           .dump() + "\n";
    }
    audit_text += audit.dump() + "\n";
  }
  {
    std::ofstream audit(out_path(cfg, artifacts::kAudit), std::ios::binary | std::ios::app);
    audit << audit_text;
  }
  const auto post = postprocess(responses, aligned);
  write_atomic(out_path(cfg, artifacts::kResponses), responses_text);
  write_atomic(out_path(cfg, artifacts::kEnrichFailures), failures_text);
  write_atomic(out_path(cfg, artifacts::kLlmPairs),
               render([&](std::ostream& o) { write_jsonl(std::span<const SemanticPair>(post.pairs), o); }));
  if (failed + parse_failed > 0)
    log("warn", "enrich.failures", {{"request_failures", failed}, {"parse_failures", parse_failed}});

  std::map<Relation, std::size_t> rel;
  for (const auto& p : post.pairs) ++rel[p.relation];
  const auto& r = post.report;
  counters["provider"] = provider.name();
  counters["restored_from_checkpoint"] = restored;
  counters["request_failures"] = failed;
  counters["parse_failures"] = parse_failed;
  counters["repaired"] = repaired;
  counters["mentions"] = r.mentions;
  counters["self_relations"] = r.self_relations;
  counters["duplicates"] = r.duplicates;
  counters["conflicts"] = r.conflicts;
  counters["augmented"] = r.augmented;
  counters["empty_terms"] = r.empty_terms;
  counters["invalid_text"] = r.invalid_text;
  counters["pairs"] = post.pairs.size();
  for (Relation x : kAllRelations) counters[std::string(to_string(x))] = rel[x];
  return counters;
}

ojson run_integrate(const PipelineConfig& cfg, Logger& log) {
  auto in = open_input(cfg.paths.dictionary);
  const auto parsed = parse_dictionary(in);
  for (const auto& w : parsed.report.warnings) log("warn", "dictionary.skipped_line", {{"detail", w}});
  const auto filtered = filter_entries(parsed.entries, cfg.dictionary.max_candidates);
  const auto pairs = to_pairs(filtered.entries);
  const auto llm = read_pairs(out_path(cfg, artifacts::kLlmPairs), Source::llm);
  const auto dec = deconflict(pairs, llm);
  write_atomic(out_path(cfg, artifacts::kDictPairs),
               render([&](std::ostream& o) { write_jsonl(std::span<const SemanticPair>(dec.pairs), o); }));
  const auto& f = filtered.report;
  ojson counters = {{"lines", parsed.report.lines},
                    {"skipped_lines", parsed.report.skipped},
                    {"entries", f.input},
                    {"kept_entries", f.kept},
                    {"rejected_candidate_count", f.rejected_candidate_count},
                    {"rejected_ambiguity", f.rejected_ambiguity},
                    {"candidate_pairs", pairs.size()},
                    {"removed_overlap", dec.removed},
                    {"pairs", dec.pairs.size()}};
  ojson report = counters;
  report["warnings"] = parsed.report.warnings;
  write_atomic(out_path(cfg, artifacts::kDictionaryReport), report.dump(2) + "\n");
  return counters;
}

ojson run_assemble(const PipelineConfig& cfg, Logger&) {
  const auto llm = read_pairs(out_path(cfg, artifacts::kLlmPairs), Source::llm);
  const auto dict = read_pairs(out_path(cfg, artifacts::kDictPairs), Source::dictionary);
  const auto corpus = merge(llm, dict);
  write_atomic(out_path(cfg, artifacts::kCorpus),
               render([&](std::ostream& o) { write_jsonl(corpus, o); }));
  std::map<Relation, std::size_t> rel;
  for (const auto& p : corpus.pairs) ++rel[p.relation];
  ojson summary;
  summary["pairs"] = corpus.pairs.size();
  summary["relations"] = ojson::object();
  for (Relation r : kAllRelations) summary["relations"][std::string(to_string(r))] = rel[r];
  summary["sources"] = ojson::object();
  for (Source s : {Source::llm, Source::dictionary}) {
    auto it = corpus.source_counts.find(s);
    summary["sources"][std::string(to_string(s))] = it == corpus.source_counts.end() ? 0 : it->second;
  }
  write_atomic(out_path(cfg, artifacts::kCorpusSummary), summary.dump(2) + "\n");
  return summary;
}

ojson run_stats(const PipelineConfig& cfg, Logger&) {
  auto in = open_input(out_path(cfg, artifacts::kCorpus));
  auto corpus = read_jsonl(in);
  auto sin = open_input(out_path(cfg, artifacts::kCorpusSummary));
  const auto summary = ojson::parse(sin, nullptr, false);
  if (summary.is_discarded() || !summary.contains("sources"))
    throw Error("malformed " + std::string(artifacts::kCorpusSummary));
  corpus.source_counts.clear();
  for (Source s : {Source::llm, Source::dictionary})
    corpus.source_counts[s] = summary["sources"].value(std::string(to_string(s)), std::size_t{0});
  const auto stats = compute_stats(corpus, whitespace_tokenizer());
  write_atomic(out_path(cfg, artifacts::kStats), to_json(stats).dump(2) + "\n");
  write_atomic(out_path(cfg, artifacts::kStatsText), format_stats(stats));
  return {{"pairs", stats.total_pairs},
          {"distinct_terms", stats.distinct_terms},
          {"type_token_ratio", stats.type_token_ratio}};
}

bool in_test_split(const TripletRecord& t, const PipelineConfig::Eval& e) {
  const auto h = fnv1a64(t.query + '\t' + t.positive, fnv1a64(std::to_string(e.split_seed)));
  return double(h >> 11) * 0x1.0p-53 < e.test_fraction;
}

ojson run_eval(const PipelineConfig& cfg, Logger& log) {
  auto cin = open_input(out_path(cfg, artifacts::kCorpus));
  const auto corpus = read_jsonl(cin);
  const auto& e = cfg.eval;
  const auto triplets = build_triplets(corpus, e.include_co_hyponym_negatives);
  write_atomic(out_path(cfg, artifacts::kTriplets), render([&](std::ostream& o) {
                 for (const auto& t : triplets)
                   o << ojson({{"query", t.query}, {"positive", t.positive},
                               {"hard_negatives", t.hard_negatives}})
                            .dump()
                     << '\n';
               }));

  // Baseline: the static word vectors the clustering used.
  auto vin = open_input(cfg.paths.vectors);
  const auto table = parse_vec_file(vin).table;
  std::map<std::string, Vec> cache;
  std::set<std::string> oov;
  auto lookup = [&](const std::string& term) -> const Vec* {
    if (auto it = cache.find(term); it != cache.end()) return &it->second;
    if (oov.count(term)) return nullptr;
    try {
      auto tv = embed_term(table, term);
      double norm = 0.0;
      for (float x : tv.vector) norm += double(x) * x;
      if (norm == 0.0) throw OovError(term);
      return &cache.emplace(term, Vec(tv.vector.begin(), tv.vector.end())).first->second;
    } catch (const OovError&) {
      oov.insert(term);
      return nullptr;
    }
  };

  std::set<std::string> terms;
  for (const auto& p : corpus.pairs) {
    terms.insert(p.term_a);
    terms.insert(p.term_b);
  }
  std::vector<std::string> pool;
  for (const auto& t : terms)
    if (lookup(t)) pool.push_back(t);

  std::vector<TripletRecord> test;
  std::size_t skipped_oov = 0;
  for (const auto& t : triplets) {
    if (!in_test_split(t, e)) continue;
    if (!lookup(t.query) || !lookup(t.positive)) {
      ++skipped_oov;
      continue;
    }
    TripletRecord r = t;
    std::erase_if(r.hard_negatives, [&](const std::string& n) { return !lookup(n); });
    test.push_back(std::move(r));
  }
  if (skipped_oov) log("warn", "eval.oov_triplets", {{"count", skipped_oov}});

  ojson result;
  result["baseline"] = "static-vectors";
  result["triplets"] = triplets.size();
  result["test_triplets"] = test.size();
  result["skipped_oov"] = skipped_oov;
  result["candidate_pool"] = pool.size();
  result["retrieval"] = ojson::object();
  std::string text = "Retrieval (static-vector baseline, " + std::to_string(test.size()) +
                     " test queries, pool " + std::to_string(pool.size()) + ")\n";
  if (!test.empty()) {
    const EmbedFn embed = [&](const std::string& t) {
      const Vec* v = lookup(t);
      if (!v) throw OovError(t);
      return *v;
    };
    const auto acc = retrieval_accuracy_at(test, embed, pool, e.k);
    for (std::size_t i = 0; i < e.k.size(); ++i) {
      result["retrieval"]["top" + std::to_string(e.k[i])] = acc[i];
      std::ostringstream row;
      row << "  top-" << e.k[i] << " accuracy  " << std::fixed << std::setprecision(4) << acc[i] << '\n';
      text += row.str();
    }

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < test.size(); b += e.batch_size) {
      ContrastiveBatch batch;
      batch.temperature = e.temperature;
      for (std::size_t i = b; i < std::min(test.size(), b + e.batch_size); ++i) {
        batch.queries.push_back(*lookup(test[i].query));
        batch.positives.push_back(*lookup(test[i].positive));
        for (const auto& n : test[i].hard_negatives) batch.cache.push_back(*lookup(n));
      }
      loss_sum += cmnrl_loss(batch);
      ++batches;
    }
    result["cmnrl_loss"] = loss_sum / double(batches);
    std::ostringstream row;
    row << "  contrastive loss  " << std::fixed << std::setprecision(4) << loss_sum / double(batches)
        << " (tau " << e.temperature << ", batch " << e.batch_size << ")\n";
    text += row.str();
  }

  if (cfg.paths.predictions) {
    auto pin = open_input(*cfg.paths.predictions);
    std::vector<Relation> preds, golds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(pin, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      const auto j = ojson::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("label") || !j.contains("prediction") ||
          !j["label"].is_string() || !j["prediction"].is_string())
        throw ParseError("expected {\"label\": ..., \"prediction\": ...}", lineno);
      auto g = parse_relation(j["label"].get<std::string>());
      auto p = parse_relation(j["prediction"].get<std::string>());
      if (!g || !p) throw ParseError("unknown relation label", lineno);
      golds.push_back(*g);
      preds.push_back(*p);
    }
    const auto m = classification_metrics(preds, golds);
    ojson cls = ojson::object();
    for (const auto& [rel, s] : m.per_class)
      cls[std::string(to_string(rel))] = {
          {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
    cls["macro"] = {{"precision", m.macro.precision}, {"recall", m.macro.recall}, {"f1", m.macro.f1}};
    result["classification"] = cls;
    text += "\nClassification (" + std::to_string(m.total) + " predictions)\n" + format_metrics(m);
  }

  write_atomic(out_path(cfg, artifacts::kEval), result.dump(2) + "\n");
  write_atomic(out_path(cfg, artifacts::kEvalText), text);
  return result;
}

}  // namespace

PhaseResult run_phase(Phase phase, const PipelineConfig& config, const RunOptions& options) {
  std::ostream& sink = options.log ? *options.log : std::cerr;
  Logger log(sink, phase);
  fs::create_directories(config.paths.output_dir);
  DirectoryLock lock(config.paths.output_dir);

  std::unique_ptr<Provider> owned;
  Provider* provider = options.provider;
  std::string provider_name = provider ? provider->name() : (options.mock_provider ? "mock" : "http");
  if (phase == Phase::enrich && !provider && !options.dry_run) {
    if (options.mock_provider)
      owned = std::make_unique<MockProvider>(config.provider.mock_seed);
    else
      owned = std::make_unique<HttpProvider>(HttpProvider::from_environment(config.provider));
    provider = owned.get();
    provider_name = provider->name();
  }

  const auto spec = phase_spec(phase, config, provider_name);
  check_prerequisites(phase, spec);
  const auto config_digest = sha256_hex(spec.config.dump());
  const auto inputs = input_digests(spec);

  PhaseResult result;
  result.phase = phase;
  for (const auto& name : spec.outputs) result.artifacts.push_back(out_path(config, name));
  if (!options.force && !(options.dry_run && phase == Phase::enrich) &&
      up_to_date(config, phase, spec, config_digest, inputs)) {
    log("info", "phase.up_to_date");
    result.up_to_date = true;
    std::ifstream in(manifest_path(config, phase));
    const auto m = ojson::parse(in, nullptr, false);
    if (!m.is_discarded() && m.contains("counters")) result.counters = m["counters"];
    return result;
  }

  log("info", "phase.start");
  const auto t0 = std::chrono::steady_clock::now();
  switch (phase) {
    case Phase::embed: result.counters = run_embed(config, log); break;
    case Phase::cluster: result.counters = run_cluster(config, log); break;
    case Phase::enrich:
      result.counters = run_enrich(config, options, *provider, log, result.dry_run);
      break;
    case Phase::integrate: result.counters = run_integrate(config, log); break;
    case Phase::assemble: result.counters = run_assemble(config, log); break;
    case Phase::stats: result.counters = run_stats(config, log); break;
    case Phase::eval: result.counters = run_eval(config, log); break;
  }
  const auto elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (result.dry_run) {
    log("info", "phase.dry_run");
    return result;
  }
  write_manifest(config, phase, spec, config_digest, inputs, result.counters);
  log("info", "phase.done", {{"seconds", elapsed}, {"counters", result.counters}});
  return result;
}

std::vector<PhaseResult> run_all(const PipelineConfig& config, const RunOptions& options) {
  std::vector<PhaseResult> results;
  for (Phase p : kAllPhases) {
    results.push_back(run_phase(p, config, options));
    if (results.back().dry_run) break;
  }
  return results;
}

}  // namespace semrel
