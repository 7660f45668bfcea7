#include "scog/datagen/templates.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "builtin_templates.inc"
#include "scog/corpus/io.hpp"
#include "scog/error.hpp"

namespace scog::datagen {

namespace {

struct Placeholder {
  std::size_t begin;
  std::size_t end;  // one past '}'
  std::string name;
};

std::vector<Placeholder> scan(std::string_view text) {
  std::vector<Placeholder> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') {
      continue;
    }
    std::size_t j = i + 1;
    while (j < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
      ++j;
    }
    if (j < text.size() && text[j] == '}' && j > i + 1) {
      out.push_back({i, j + 1, std::string(text.substr(i + 1, j - i - 1))});
      i = j;
    }
  }
  return out;
}

}  // namespace

PromptTemplate builtin_template(std::string_view id) {
  for (const auto& [name, text] : kBuiltinTemplates) {
    if (name == id) {
      return PromptTemplate{std::string(name), std::string(text)};
    }
  }
  throw ValidationError("no shipped prompt template named \"" + std::string(id) + "\"");
}

std::vector<std::string> builtin_template_ids() {
  std::vector<std::string> ids;
  for (const auto& [name, text] : kBuiltinTemplates) {
    ids.emplace_back(name);
  }
  return ids;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  return PromptTemplate{path.stem().string(), corpus::read_file(path)};
}

PromptTemplate resolve_template(std::string_view id, const std::filesystem::path& override_dir) {
  if (!override_dir.empty()) {
    const auto path = override_dir / (std::string(id) + ".txt");
    if (std::filesystem::exists(path)) {
      return load_template(path);
    }
  }
  return builtin_template(id);
}

std::vector<std::string> placeholders(const PromptTemplate& tpl) {
  std::vector<std::string> names;
  for (const auto& p : scan(tpl.text)) {
    if (std::find(names.begin(), names.end(), p.name) == names.end()) {
      names.push_back(p.name);
    }
  }
  return names;
}

std::string render(const PromptTemplate& tpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  std::set<std::string> used;
  for (const auto& p : scan(tpl.text)) {
    auto it = values.find(p.name);
    if (it == values.end()) {
      throw ValidationError("template " + tpl.id + ": no value for {" + p.name + "}");
    }
    out.append(tpl.text, pos, p.begin - pos);
    out += it->second;
    used.insert(p.name);
    pos = p.end;
  }
  out.append(tpl.text, pos);
  for (const auto& [name, value] : values) {
    if (!used.count(name)) {
      throw ValidationError("template " + tpl.id + " has no {" + name + "} placeholder");
    }
  }
  return out;
}

}  // namespace scog::datagen
