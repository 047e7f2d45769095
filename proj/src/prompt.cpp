#include "semrel/prompt.hpp"

#include "semrel/errors.hpp"
#include "semrel/text.hpp"

namespace semrel {

namespace assets {
extern const char kSemanticEnrichmentV1[];
extern const char kNerAugmentationV1[];
}  // namespace assets

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size()))
    ++count;
  return count;
}

std::string substitute(const PromptTemplate& tmpl, std::string_view value) {
  const auto pos = tmpl.body.find(PromptTemplate::kSlot);
  std::string out;
  out.reserve(tmpl.body.size() + value.size());
  out.append(tmpl.body, 0, pos);
  out.append(value);
  out.append(tmpl.body, pos + PromptTemplate::kSlot.size());
  return out;
}

}  // namespace

std::string_view to_string(PromptKind k) noexcept {
  return k == PromptKind::ner_augmentation ? "ner-augmentation" : "semantic-enrichment";
}

PromptTemplate make_template(PromptKind kind, std::string version, std::string body) {
  if (count_occurrences(body, PromptTemplate::kSlot) != 1)
    throw ArgumentError("prompt template must contain exactly one " +
                        std::string(PromptTemplate::kSlot) + " slot");
  return {kind, std::move(version), std::move(body)};
}

const PromptTemplate& builtin_template(PromptKind kind) {
  static const PromptTemplate semantic =
      make_template(PromptKind::semantic_enrichment, "v1", assets::kSemanticEnrichmentV1);
  static const PromptTemplate ner =
      make_template(PromptKind::ner_augmentation, "v1", assets::kNerAugmentationV1);
  return kind == PromptKind::ner_augmentation ? ner : semantic;
}

std::string format_cluster_list(const Cluster& cluster) {
  std::string out = "[";
  for (std::size_t i = 0; i < cluster.members.size(); ++i) {
    if (i) out += ", ";
    out += json_quote(cluster.members[i]);
  }
  out += "]";
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const Cluster& cluster) {
  if (cluster.members.empty()) throw ArgumentError("cannot render a prompt for an empty cluster");
  return substitute(tmpl, format_cluster_list(cluster));
}

std::string render_prompt(const PromptTemplate& tmpl, std::string_view document) {
  if (trim(document).empty()) throw ArgumentError("cannot render a prompt for an empty document");
  return substitute(tmpl, document);
}

}  // namespace semrel
