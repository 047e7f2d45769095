// Toy-lexicon workspace shared by the pipeline tests and the acceptance suite.
#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "semrel/pipeline.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline nlohmann::json toy_config_json(const fs::path& out_dir) {
  return {{"paths",
           {{"vectors", "vectors.vec"},
            {"lexicon", "lexicon.txt"},
            {"dictionary", "dictionary.tsv"},
            {"output_dir", out_dir.string()}}},
          {"provider", {{"backoff_initial_ms", 1}, {"backoff_max_ms", 2}}},
          {"eval", {{"test_fraction", 1.0}}}};
}

// Fresh output directory under the system temp dir.
inline fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "semrel_pipeline_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline semrel::PipelineConfig toy_config(const fs::path& out_dir) {
  return semrel::validate_config(toy_config_json(out_dir), SEMREL_TOY_DIR);
}

}  // namespace fixture
