// Command-line entry point: one subcommand per pipeline phase.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "semrel/errors.hpp"
#include "semrel/pipeline.hpp"
#include "semrel/prompt.hpp"

namespace {

void print_result(const semrel::PhaseResult& r) {
  std::cout << semrel::to_string(r.phase) << ": "
            << (r.dry_run ? "dry run" : r.up_to_date ? "up to date" : "done") << ' '
            << r.counters.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic relation corpus builder"};
  app.require_subcommand(1);

  std::string config_path;
  semrel::RunOptions options;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "pipeline config (JSON)")->required();
    sub->add_flag("--force", options.force, "re-run even if the manifest is current");
  };

  std::vector<std::pair<CLI::App*, std::optional<semrel::Phase>>> runners;
  for (auto phase : semrel::kAllPhases) {
    auto* sub = app.add_subcommand(std::string(semrel::to_string(phase)),
                                   "run the " + std::string(semrel::to_string(phase)) + " phase");
    add_common(sub);
    if (phase == semrel::Phase::enrich) {
      sub->add_flag("--dry-run", options.dry_run, "print the cost estimate and stop");
      sub->add_flag("--mock-provider", options.mock_provider, "use the seeded offline provider");
    }
    runners.emplace_back(sub, phase);
  }
  auto* all = app.add_subcommand("all", "run every phase in order");
  add_common(all);
  all->add_flag("--dry-run", options.dry_run, "stop after the enrich cost estimate");
  all->add_flag("--mock-provider", options.mock_provider, "use the seeded offline provider");
  runners.emplace_back(all, std::nullopt);

  auto* validate = app.add_subcommand("validate", "check a config and print it with defaults");
  validate->add_option("-c,--config", config_path, "pipeline config (JSON)")->required();

  std::string prompt_kind = "semantic-enrichment";
  std::vector<std::string> prompt_terms;
  std::string prompt_file;
  auto* prompt = app.add_subcommand("prompt", "render a shipped prompt template");
  prompt->add_option("--template", prompt_kind, "semantic-enrichment or ner-augmentation")
      ->check(CLI::IsMember({"semantic-enrichment", "ner-augmentation"}));
  prompt->add_option("--terms", prompt_terms, "cluster members (semantic-enrichment)");
  prompt->add_option("--document", prompt_file, "text file (ner-augmentation)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? semrel::kExitOk : semrel::kExitValidation;
  }

  try {
    if (*prompt) {
      if (prompt_kind == "semantic-enrichment") {
        semrel::Cluster c{0, prompt_terms};
        std::cout << semrel::render_prompt(
            semrel::builtin_template(semrel::PromptKind::semantic_enrichment), c);
      } else {
        std::ifstream in(prompt_file, std::ios::binary);
        if (!in) throw semrel::ArgumentError("cannot read document '" + prompt_file + "'");
        std::ostringstream doc;
        doc << in.rdbuf();
        std::cout << semrel::render_prompt(
            semrel::builtin_template(semrel::PromptKind::ner_augmentation), doc.str());
      }
      return semrel::kExitOk;
    }

    const auto config = semrel::load_config(config_path);
    if (*validate) {
      std::cout << config.to_json().dump(2) << '\n';
      return semrel::kExitOk;
    }
    for (auto& [sub, phase] : runners) {
      if (!*sub) continue;
      if (phase) {
        print_result(semrel::run_phase(*phase, config, options));
      } else {
        for (const auto& r : semrel::run_all(config, options)) print_result(r);
      }
    }
    return semrel::kExitOk;
  } catch (const semrel::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return semrel::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return semrel::exit_code_for(e);
  }
}
