#include <algorithm>
#include <fstream>
#include <set>

#include "semrel/errors.hpp"
#include "semrel/pipeline.hpp"

namespace semrel {

using nlohmann::json;

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

// Reads one section, rejecting unknown keys with the closest known one.
class Section {
 public:
  Section(const json& parent, std::string name) : name_(std::move(name)) {
    if (name_.empty()) {
      node_ = &parent;
    } else if (auto it = parent.find(name_); it != parent.end()) {
      if (!it->is_object()) throw ConfigError("'" + name_ + "' must be an object");
      node_ = &*it;
    }
  }

  void allow(std::initializer_list<const char*> keys) {
    for (auto k : keys) known_.insert(k);
    if (!node_) return;
    for (const auto& [key, _] : node_->items()) {
      if (known_.count(key)) continue;
      std::string best;
      std::size_t best_d = std::string::npos;
      for (const auto& k : known_) {
        const auto d = edit_distance(key, k);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      std::string msg = "unknown config key '" + qualified(key) + "'";
      if (best_d <= std::max<std::size_t>(2, key.size() / 3))
        msg += "; did you mean '" + qualified(best) + "'?";
      throw ConfigError(msg);
    }
  }

  const json* get(const char* key) const {
    if (!node_) return nullptr;
    auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const char* key, T& out) const {
    const json* v = get(key);
    if (!v) return;
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!v->is_number_integer() || v->get<long long>() < 0)
          throw ConfigError("'" + qualified(key) + "' must be a non-negative integer");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v->is_number_integer()) throw ConfigError("'" + qualified(key) + "' must be an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw ConfigError("'" + qualified(key) + "' must be a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError("'" + qualified(key) + "' must be true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError("'" + qualified(key) + "' must be a string");
      }
      out = v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + qualified(key) + "' has the wrong type");
    }
  }

  std::string qualified(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> known_;
};

void range_error(const std::string& key, const std::string& range, const std::string& got) {
  throw ConfigError("'" + key + "' out of range: expected " + range + ", got " + got);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

PipelineConfig validate_config(const json& source, const fs::path& base_dir) {
  if (!source.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig cfg;

  Section top(source, "");
  top.allow({"paths", "clustering", "provider", "dictionary", "stats", "eval"});

  Section paths(source, "paths");
  paths.allow({"vectors", "lexicon", "dictionary", "output_dir", "predictions"});
  for (const char* key : {"vectors", "lexicon", "dictionary", "output_dir"}) {
    std::string value;
    paths.read(key, value);
    if (value.empty()) throw ConfigError("missing required path 'paths." + std::string(key) + "'");
    const auto resolved = resolve(base_dir, value);
    if (std::string_view(key) == "vectors") cfg.paths.vectors = resolved;
    else if (std::string_view(key) == "lexicon") cfg.paths.lexicon = resolved;
    else if (std::string_view(key) == "dictionary") cfg.paths.dictionary = resolved;
    else cfg.paths.output_dir = resolved;
  }
  if (const json* p = paths.get("predictions")) {
    if (!p->is_string()) throw ConfigError("'paths.predictions' must be a string");
    cfg.paths.predictions = resolve(base_dir, p->get<std::string>());
  }
  for (const auto* p : {&cfg.paths.vectors, &cfg.paths.lexicon, &cfg.paths.dictionary})
    if (!fs::is_regular_file(*p)) throw ConfigError("input file does not exist: " + p->string());
  if (cfg.paths.predictions && !fs::is_regular_file(*cfg.paths.predictions))
    throw ConfigError("input file does not exist: " + cfg.paths.predictions->string());

  Section cl(source, "clustering");
  cl.allow({"threshold", "linkage", "min_size", "max_prompt_size", "matrix_term_cap", "workers"});
  auto& c = cfg.clustering;
  cl.read("threshold", c.threshold);
  if (!(c.threshold > 0.0 && c.threshold <= 2.0))
    range_error("clustering.threshold", "(0, 2]", std::to_string(c.threshold));
  std::string linkage(to_string(c.linkage));
  cl.read("linkage", linkage);
  c.linkage = parse_linkage(linkage);
  cl.read("min_size", c.min_size);
  if (c.min_size < 2) range_error("clustering.min_size", ">= 2", std::to_string(c.min_size));
  cl.read("max_prompt_size", c.max_prompt_size);
  if (c.max_prompt_size < 1)
    range_error("clustering.max_prompt_size", ">= 1", std::to_string(c.max_prompt_size));
  cl.read("matrix_term_cap", c.matrix_term_cap);
  if (c.matrix_term_cap < 2)
    range_error("clustering.matrix_term_cap", ">= 2", std::to_string(c.matrix_term_cap));
  cl.read("workers", c.workers);

  Section pr(source, "provider");
  pr.allow({"model_name", "endpoint", "api_key_env", "input_price_per_1M_tokens", "max_retries",
            "request_timeout_ms", "max_concurrent_requests", "backoff_initial_ms", "backoff_max_ms",
            "token_inflation", "mock_seed", "options"});
  auto& p = cfg.provider;
  pr.read("model_name", p.model_name);
  pr.read("endpoint", p.endpoint);
  pr.read("api_key_env", p.api_key_env);
  pr.read("input_price_per_1M_tokens", p.input_price_per_1M_tokens);
  pr.read("max_retries", p.max_retries);
  long long ms = p.request_timeout.count();
  pr.read("request_timeout_ms", ms);
  p.request_timeout = std::chrono::milliseconds(ms);
  pr.read("max_concurrent_requests", p.max_concurrent_requests);
  ms = p.backoff_initial.count();
  pr.read("backoff_initial_ms", ms);
  p.backoff_initial = std::chrono::milliseconds(ms);
  ms = p.backoff_max.count();
  pr.read("backoff_max_ms", ms);
  p.backoff_max = std::chrono::milliseconds(ms);
  pr.read("token_inflation", p.token_inflation);
  pr.read("mock_seed", p.mock_seed);
  if (const json* o = pr.get("options")) p.options = *o;
  if (pr.get("api_key") != nullptr) throw ConfigError("API keys belong in the environment");
  p.validate();

  Section di(source, "dictionary");
  di.allow({"max_candidates"});
  di.read("max_candidates", cfg.dictionary.max_candidates);
  if (cfg.dictionary.max_candidates < 1)
    range_error("dictionary.max_candidates", ">= 1", std::to_string(cfg.dictionary.max_candidates));

  Section st(source, "stats");
  st.allow({"tokenizer"});
  st.read("tokenizer", cfg.stats.tokenizer);
  if (cfg.stats.tokenizer != "whitespace")
    throw ConfigError("'stats.tokenizer' must be \"whitespace\", got \"" + cfg.stats.tokenizer + "\"");

  Section ev(source, "eval");
  ev.allow({"k", "split_seed", "test_fraction", "temperature", "batch_size",
            "include_co_hyponym_negatives"});
  auto& e = cfg.eval;
  if (const json* k = ev.get("k")) {
    if (!k->is_array() || k->empty()) throw ConfigError("'eval.k' must be a non-empty list");
    e.k.clear();
    for (const auto& v : *k) {
      if (!v.is_number_integer() || v.get<long long>() < 1)
        range_error("eval.k", "integers >= 1", v.dump());
      e.k.push_back(v.get<std::size_t>());
    }
  }
  ev.read("split_seed", e.split_seed);
  ev.read("test_fraction", e.test_fraction);
  if (!(e.test_fraction > 0.0 && e.test_fraction <= 1.0))
    range_error("eval.test_fraction", "(0, 1]", std::to_string(e.test_fraction));
  ev.read("temperature", e.temperature);
  if (!(e.temperature > 0.0)) range_error("eval.temperature", "> 0", std::to_string(e.temperature));
  ev.read("batch_size", e.batch_size);
  if (e.batch_size < 1) range_error("eval.batch_size", ">= 1", std::to_string(e.batch_size));
  ev.read("include_co_hyponym_negatives", e.include_co_hyponym_negatives);
  return cfg;
}

PipelineConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  json source;
  try {
    source = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + file.string() + " is not valid JSON: " + e.what());
  }
  return validate_config(source, fs::absolute(file).parent_path());
}

nlohmann::ordered_json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["paths"] = {{"vectors", paths.vectors.string()},
                {"lexicon", paths.lexicon.string()},
                {"dictionary", paths.dictionary.string()},
                {"output_dir", paths.output_dir.string()}};
  if (paths.predictions) j["paths"]["predictions"] = paths.predictions->string();
  j["clustering"] = {{"threshold", clustering.threshold},
                     {"linkage", std::string(semrel::to_string(clustering.linkage))},
                     {"min_size", clustering.min_size},
                     {"max_prompt_size", clustering.max_prompt_size},
                     {"matrix_term_cap", clustering.matrix_term_cap},
                     {"workers", clustering.workers}};
  j["provider"] = {{"model_name", provider.model_name},
                   {"endpoint", provider.endpoint},
                   {"api_key_env", provider.api_key_env},
                   {"input_price_per_1M_tokens", provider.input_price_per_1M_tokens},
                   {"max_retries", provider.max_retries},
                   {"request_timeout_ms", provider.request_timeout.count()},
                   {"max_concurrent_requests", provider.max_concurrent_requests},
                   {"backoff_initial_ms", provider.backoff_initial.count()},
                   {"backoff_max_ms", provider.backoff_max.count()},
                   {"token_inflation", provider.token_inflation},
                   {"mock_seed", provider.mock_seed},
                   {"options", nlohmann::ordered_json::parse(provider.options.dump())}};
  j["dictionary"] = {{"max_candidates", dictionary.max_candidates}};
  j["stats"] = {{"tokenizer", stats.tokenizer}};
  j["eval"] = {{"k", eval.k},
               {"split_seed", eval.split_seed},
               {"test_fraction", eval.test_fraction},
               {"temperature", eval.temperature},
               {"batch_size", eval.batch_size},
               {"include_co_hyponym_negatives", eval.include_co_hyponym_negatives}};
  return j;
}

}  // namespace semrel
