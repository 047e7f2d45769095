#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semrel/cluster_engine.hpp"
#include "semrel/provider.hpp"

namespace semrel {

namespace fs = std::filesystem;

enum class Phase { embed, cluster, enrich, integrate, assemble, stats, eval };

inline constexpr Phase kAllPhases[] = {Phase::embed,     Phase::cluster,  Phase::enrich,
                                       Phase::integrate, Phase::assemble, Phase::stats,
                                       Phase::eval};

std::string_view to_string(Phase p) noexcept;
std::optional<Phase> parse_phase(std::string_view s) noexcept;

struct PipelineConfig {
  struct Paths {
    fs::path vectors;
    fs::path lexicon;
    fs::path dictionary;
    fs::path output_dir;
    std::optional<fs::path> predictions;  // classifier output to score in `eval`
  } paths;

  struct Clustering {
    double threshold = 0.4;
    Linkage linkage = Linkage::average;
    std::size_t min_size = 2;
    std::size_t max_prompt_size = 50;
    std::size_t matrix_term_cap = 8000;
    unsigned workers = 0;
  } clustering;

  ProviderConfig provider;

  struct Dictionary {
    std::size_t max_candidates = 2;
  } dictionary;

  struct Stats {
    std::string tokenizer = "whitespace";
  } stats;

  struct Eval {
    std::vector<std::size_t> k{1, 3, 5};
    std::uint64_t split_seed = 13;
    double test_fraction = 0.2;
    double temperature = 0.07;
    std::size_t batch_size = 128;
    bool include_co_hyponym_negatives = false;
  } eval;

  /// Fully resolved configuration, defaults included.
  nlohmann::ordered_json to_json() const;
};

/// Applies defaults and range checks. Unknown keys are rejected with a
/// "did you mean" suggestion. Relative paths resolve against `base_dir`.
/// Throws ConfigError.
PipelineConfig validate_config(const nlohmann::json& source, const fs::path& base_dir);

/// Reads a JSON config file and validates it (paths relative to the file).
PipelineConfig load_config(const fs::path& file);

struct RunOptions {
  bool force = false;
  bool dry_run = false;        // enrich: print the cost estimate and stop
  bool mock_provider = false;  // enrich: seeded mock instead of the HTTP provider
  Provider* provider = nullptr;  // explicit provider (takes precedence)
  std::ostream* log = nullptr;   // structured log lines; defaults to std::cerr
};

struct PhaseResult {
  Phase phase = Phase::embed;
  bool up_to_date = false;  // nothing to do, previous artifacts kept
  bool dry_run = false;
  nlohmann::ordered_json counters = nlohmann::ordered_json::object();
  std::vector<fs::path> artifacts;
};

/// Runs one phase. Each phase reads the artifacts of earlier phases from the
/// output directory (PrerequisiteError when missing), writes its own
/// artifacts plus `<phase>.manifest.json`, and is skipped when the manifest
/// shows unchanged inputs, config and outputs (unless forced).
PhaseResult run_phase(Phase phase, const PipelineConfig& config, const RunOptions& options = {});

/// All phases in order; stops after enrich on a dry run.
std::vector<PhaseResult> run_all(const PipelineConfig& config, const RunOptions& options = {});

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2, kExitPrerequisite = 3 };

/// Maps an exception from the pipeline to the CLI exit code.
int exit_code_for(const std::exception& e) noexcept;

/// Artifact file names inside the output directory.
namespace artifacts {
inline constexpr std::string_view kEmbeddings = "embeddings.tsv";
inline constexpr std::string_view kOov = "embed.oov.txt";
inline constexpr std::string_view kClusters = "clusters.jsonl";
inline constexpr std::string_view kResponses = "responses.jsonl";
inline constexpr std::string_view kLlmPairs = "llm_pairs.jsonl";
inline constexpr std::string_view kEnrichFailures = "enrich.failures.jsonl";
inline constexpr std::string_view kCheckpoint = "enrich.checkpoint.jsonl";
inline constexpr std::string_view kAudit = "enrich.audit.jsonl";
inline constexpr std::string_view kDictPairs = "dict_pairs.jsonl";
inline constexpr std::string_view kDictionaryReport = "dictionary.report.json";
inline constexpr std::string_view kCorpus = "corpus.jsonl";
inline constexpr std::string_view kCorpusSummary = "corpus.summary.json";
inline constexpr std::string_view kStats = "stats.json";
inline constexpr std::string_view kStatsText = "stats.txt";
inline constexpr std::string_view kTriplets = "triplets.jsonl";
inline constexpr std::string_view kEval = "eval.json";
inline constexpr std::string_view kEvalText = "eval.txt";
inline constexpr std::string_view kLock = ".semrel.lock";
}  // namespace artifacts

/// Embedded term vectors: `term<TAB>direct|mwe-mean<TAB>v1 v2 ...` per line.
void write_term_vectors(std::span<const TermVector> vectors, std::ostream& out);
std::vector<TermVector> read_term_vectors(std::istream& in);

std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace semrel
