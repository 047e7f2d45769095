#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semrel/cluster_engine.hpp"
#include "semrel/prompt.hpp"
#include "semrel/provider.hpp"

namespace semrel {

struct DispatchOutcome {
  int cluster_id = 0;
  bool ok = false;
  std::string raw;     // model text when ok
  std::string error;   // last error message otherwise
  int attempts = 0;    // 0 when restored from the checkpoint
  bool from_checkpoint = false;
};

struct DispatchOptions {
  const PromptTemplate* prompt_template = nullptr;  // defaults to the builtin enrichment template
  std::optional<std::filesystem::path> checkpoint;  // JSONL of completed clusters
  std::function<void(std::chrono::milliseconds)> sleep;  // backoff hook; defaults to sleep_for
  std::function<void(const DispatchOutcome&)> on_outcome;  // called once per fresh outcome
};

/// Sends one request per cluster, up to max_concurrent_requests in flight.
/// Transient failures are retried max_retries times with exponential
/// backoff; exhausted retries and rejected requests become failure records.
/// AuthenticationError aborts the batch and is rethrown. Successful replies
/// are appended to the checkpoint as they arrive; clusters already present
/// there (same id and prompt digest) are not re-sent. Results are ordered
/// by cluster id.
std::vector<DispatchOutcome> dispatch_batch(std::span<const Cluster> clusters, Provider& provider,
                                            const ProviderConfig& config,
                                            const DispatchOptions& options = {});

}  // namespace semrel
