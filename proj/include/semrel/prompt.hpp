#pragma once

#include <string>
#include <string_view>

#include "semrel/cluster_engine.hpp"

namespace semrel {

enum class PromptKind { semantic_enrichment, ner_augmentation };

std::string_view to_string(PromptKind k) noexcept;

/// A prompt body with exactly one `{{INPUT}}` insertion slot.
struct PromptTemplate {
  PromptKind kind = PromptKind::semantic_enrichment;
  std::string version;
  std::string body;

  static constexpr std::string_view kSlot = "{{INPUT}}";
};

/// Validates the slot count. Throws ArgumentError.
PromptTemplate make_template(PromptKind kind, std::string version, std::string body);

/// The shipped, versioned templates (compiled in from assets/prompts).
const PromptTemplate& builtin_template(PromptKind kind);

/// Inserts the cluster as a JSON-style list: ["a", "b", "c"]. Byte-stable.
/// Throws ArgumentError for an empty cluster.
std::string render_prompt(const PromptTemplate& tmpl, const Cluster& cluster);

/// Inserts a free-text document chunk (used with the NER template).
std::string render_prompt(const PromptTemplate& tmpl, std::string_view document);

std::string format_cluster_list(const Cluster& cluster);

}  // namespace semrel
