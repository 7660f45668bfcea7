#include "scog/corpus/io.hpp"

#include <fstream>
#include <sstream>

#include "scog/error.hpp"

namespace scog::corpus {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw Error("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

namespace {

template <typename Record>
void validate_one(const Record& r, const ReadOptions&) {
  validate(r);
}

template <>
void validate_one<ScenarioAnnotation>(const ScenarioAnnotation& r, const ReadOptions& options) {
  const std::string* host = nullptr;
  if (options.host_texts != nullptr) {
    auto it = options.host_texts->find(r.knowledge_id);
    if (it != options.host_texts->end()) {
      host = &it->second;
    }
  }
  validate(r, host);
}

}  // namespace

template <typename Record>
std::vector<Record> read_records(const fs::path& path, const ReadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open " + path.string());
  }
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      Record r = from_json<Record>(json::parse(line));
      validate_one(r, options);
      r.line.value = line_no;
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": malformed line: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

template <typename Record>
void write_records(const std::vector<Record>& records, const fs::path& path) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump(-1, ' ', false, json::error_handler_t::strict);
    out += '\n';
  }
  write_file_atomic(path, out);
}

template std::vector<AtomicKnowledge> read_records(const fs::path&, const ReadOptions&);
template std::vector<KnowledgeDescription> read_records(const fs::path&, const ReadOptions&);
template std::vector<ScenarioAnnotation> read_records(const fs::path&, const ReadOptions&);
template std::vector<ScenarioQuestion> read_records(const fs::path&, const ReadOptions&);
template void write_records(const std::vector<AtomicKnowledge>&, const fs::path&);
template void write_records(const std::vector<KnowledgeDescription>&, const fs::path&);
template void write_records(const std::vector<ScenarioAnnotation>&, const fs::path&);
template void write_records(const std::vector<ScenarioQuestion>&, const fs::path&);

DatasetManifest read_manifest(const fs::path& path) {
  try {
    DatasetManifest m = from_json<DatasetManifest>(json::parse(read_file(path)));
    validate(m);
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed manifest: " + e.what());
  }
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  write_file_atomic(path, to_json(manifest).dump(2) + "\n");
}

std::map<std::string, std::string> host_text_index(const std::vector<AtomicKnowledge>& atomics) {
  std::map<std::string, std::string> index;
  for (const auto& a : atomics) {
    index.emplace(a.id, a.text);
  }
  return index;
}

}  // namespace scog::corpus
