#include "semrel/provider.hpp"

#include <optional>

#include "semrel/relation.hpp"
#include "semrel/text.hpp"

namespace semrel {

void ProviderConfig::validate() const {
  if (model_name.empty()) throw ConfigError("provider.model_name must not be empty");
  if (!(input_price_per_1M_tokens >= 0.0))
    throw ConfigError("provider.input_price_per_1M_tokens must be >= 0");
  if (max_retries < 0) throw ConfigError("provider.max_retries must be >= 0");
  if (max_concurrent_requests < 1) throw ConfigError("provider.max_concurrent_requests must be >= 1");
  if (request_timeout.count() <= 0) throw ConfigError("provider.request_timeout_ms must be > 0");
  if (backoff_initial.count() < 0 || backoff_max.count() < 0)
    throw ConfigError("provider backoff durations must be >= 0");
  if (!(token_inflation > 0.0)) throw ConfigError("provider.token_inflation must be > 0");
  if (!options.is_object()) throw ConfigError("provider.options must be an object");
}

namespace {

// Bucket a pair into a relation (or none) from a seeded hash; 15% synonym,
// 10% antonym, 45% co-hyponym, 30% skipped as uncertain.
std::optional<Relation> mock_relation(std::uint64_t seed, const std::string& x,
                                      const std::string& y) {
  const auto& lo = x < y ? x : y;
  const auto& hi = x < y ? y : x;
  const std::uint64_t h = fnv1a64(lo + '\x1f' + hi, seed);
  const auto bucket = (h >> 7) % 20;
  if (bucket < 3) return Relation::synonym;
  if (bucket < 5) return Relation::antonym;
  if (bucket < 14) return Relation::co_hyponym;
  return std::nullopt;
}

}  // namespace

std::string MockProvider::complete(const ProviderRequest& request) {
  ++requests_;
  const std::uint64_t base = fnv1a64(std::to_string(seed_));

  nlohmann::ordered_json reply = nlohmann::ordered_json::object();
  for (const auto& x : request.members) {
    nlohmann::ordered_json syn = nlohmann::ordered_json::array();
    nlohmann::ordered_json ant = nlohmann::ordered_json::array();
    nlohmann::ordered_json coh = nlohmann::ordered_json::array();
    if ((fnv1a64("self:" + x, base) >> 5) % 5 == 0) syn.push_back(x);
    for (const auto& y : request.members) {
      if (y == x) continue;
      const auto rel = mock_relation(base, x, y);
      if (!rel) continue;
      switch (*rel) {
        case Relation::synonym: syn.push_back(y); break;
        case Relation::antonym: ant.push_back(y); break;
        case Relation::co_hyponym: coh.push_back(y); break;
      }
    }
    if ((fnv1a64("augment:" + x, base) >> 5) % 4 == 0) coh.push_back(x + " sistemi");
    reply[x] = {{"synonyms", syn}, {"antonyms", ant}, {"co_hyponyms", coh}};
  }

  std::string key;
  for (const auto& m : request.members) key += m + '\n';
  switch ((fnv1a64("format:" + key, base) >> 3) % 3) {
    case 0: return reply.dump(2);
    case 1: return "```json\n" + reply.dump(2) + "\n```\n";
    default: return "Here is the classification for the cluster:\n" + reply.dump();
  }
}

}  // namespace semrel
