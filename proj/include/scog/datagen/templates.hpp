#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace scog::datagen {

/// Prompt text with `{name}` placeholders.
struct PromptTemplate {
  std::string id;
  std::string text;
};

/// Shipped templates: atomic_generation, atomic_validation,
/// description_expansion, description_validation, element_annotation,
/// question_generation.
PromptTemplate builtin_template(std::string_view id);
std::vector<std::string> builtin_template_ids();

/// Loads `<dir>/<id>.txt` when present, else the shipped template.
PromptTemplate resolve_template(std::string_view id, const std::filesystem::path& override_dir);
PromptTemplate load_template(const std::filesystem::path& path);

/// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(const PromptTemplate& tpl);

/// Substitutes every placeholder; throws ValidationError if a value is
/// missing or unused.
std::string render(const PromptTemplate& tpl, const std::map<std::string, std::string>& values);

}  // namespace scog::datagen
