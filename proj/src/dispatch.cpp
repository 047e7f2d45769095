#include "semrel/dispatch.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>
#include <thread>

#include "semrel/text.hpp"

namespace semrel {

namespace {

struct CheckpointEntry {
  std::string digest;
  std::string raw;
};

// Truncated or garbled lines (an interrupted write) are ignored.
std::map<int, CheckpointEntry> load_checkpoint(const std::filesystem::path& path) {
  std::map<int, CheckpointEntry> entries;
  std::ifstream in(path, std::ios::binary);
  if (!in) return entries;
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    auto id = j.find("cluster_id");
    auto digest = j.find("prompt_digest");
    auto raw = j.find("raw");
    if (id == j.end() || digest == j.end() || raw == j.end() || !id->is_number_integer() ||
        !digest->is_string() || !raw->is_string())
      continue;
    entries[id->get<int>()] = {digest->get<std::string>(), raw->get<std::string>()};
  }
  return entries;
}

class CheckpointWriter {
 public:
  explicit CheckpointWriter(const std::filesystem::path& path) {
    bool needs_newline = false;
    {
      std::ifstream probe(path, std::ios::binary | std::ios::ate);
      if (probe && probe.tellg() > 0) {
        probe.seekg(-1, std::ios::end);
        needs_newline = probe.get() != '\n';
      }
    }
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw Error("cannot open checkpoint " + path.string());
    if (needs_newline) out_ << '\n';
  }

  void append(int cluster_id, const std::string& digest, const std::string& raw) {
    const nlohmann::json j = {{"cluster_id", cluster_id}, {"prompt_digest", digest}, {"raw", raw}};
    std::lock_guard lock(mu_);
    out_ << j.dump() << '\n';
    out_.flush();
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

std::chrono::milliseconds backoff_delay(const ProviderConfig& config, int attempt) {
  auto delay = config.backoff_initial;
  for (int i = 1; i < attempt && delay < config.backoff_max; ++i) delay *= 2;
  return std::min(delay, config.backoff_max);
}

}  // namespace

std::vector<DispatchOutcome> dispatch_batch(std::span<const Cluster> clusters, Provider& provider,
                                            const ProviderConfig& config,
                                            const DispatchOptions& options) {
  config.validate();
  if (clusters.empty()) throw ArgumentError("dispatch_batch: no clusters");
  {
    std::set<int> ids;
    for (const auto& c : clusters)
      if (!ids.insert(c.id).second)
        throw ArgumentError("dispatch_batch: duplicate cluster id " + std::to_string(c.id));
  }
  const PromptTemplate& tmpl = options.prompt_template
                                   ? *options.prompt_template
                                   : builtin_template(PromptKind::semantic_enrichment);
  auto sleep = options.sleep ? options.sleep
                             : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

  std::vector<ProviderRequest> requests;
  std::vector<std::string> digests;
  requests.reserve(clusters.size());
  for (const auto& c : clusters) {
    requests.push_back({c.id, render_prompt(tmpl, c), c.members});
    digests.push_back(hex64(fnv1a64(requests.back().prompt)));
  }

  std::vector<DispatchOutcome> outcomes(clusters.size());
  std::vector<std::size_t> pending;
  std::map<int, CheckpointEntry> restored;
  if (options.checkpoint) restored = load_checkpoint(*options.checkpoint);
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    outcomes[i].cluster_id = clusters[i].id;
    auto it = restored.find(clusters[i].id);
    if (it != restored.end() && it->second.digest == digests[i]) {
      outcomes[i].ok = true;
      outcomes[i].raw = it->second.raw;
      outcomes[i].from_checkpoint = true;
    } else {
      pending.push_back(i);
    }
  }

  std::optional<CheckpointWriter> writer;
  if (options.checkpoint && !pending.empty()) writer.emplace(*options.checkpoint);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex fatal_mu, callback_mu;
  std::exception_ptr fatal;

  auto work = [&] {
    for (;;) {
      if (abort) return;
      const std::size_t slot = next.fetch_add(1);
      if (slot >= pending.size()) return;
      const std::size_t i = pending[slot];
      auto& out = outcomes[i];
      for (int attempt = 1;; ++attempt) {
        if (abort) return;
        out.attempts = attempt;
        try {
          out.raw = provider.complete(requests[i]);
          out.ok = true;
          out.error.clear();
          if (writer) writer->append(out.cluster_id, digests[i], out.raw);
          break;
        } catch (const TransientProviderError& e) {
          out.error = e.what();
          if (attempt > config.max_retries) break;
          sleep(backoff_delay(config, attempt));
        } catch (const RequestRejectedError& e) {
          out.error = e.what();
          break;
        } catch (...) {
          std::lock_guard lock(fatal_mu);
          if (!fatal) fatal = std::current_exception();
          abort = true;
          return;
        }
      }
      if (options.on_outcome) {
        std::lock_guard lock(callback_mu);
        options.on_outcome(out);
      }
    }
  };

  const auto workers = std::min<std::size_t>(
      static_cast<std::size_t>(config.max_concurrent_requests), pending.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  if (fatal) std::rethrow_exception(fatal);

  std::sort(outcomes.begin(), outcomes.end(),
            [](const auto& a, const auto& b) { return a.cluster_id < b.cluster_id; });
  return outcomes;
}

}  // namespace semrel
