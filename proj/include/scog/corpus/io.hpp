#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scog/corpus/records.hpp"

namespace scog::corpus {

struct ReadOptions {
  // knowledge_id -> host text; when set, annotation spans are checked against it.
  const std::map<std::string, std::string>* host_texts = nullptr;
};

/// Reads one record per line. Blank lines are skipped. Errors name the file
/// and line; every record passes its type invariants.
template <typename Record>
std::vector<Record> read_records(const std::filesystem::path& path, const ReadOptions& options = {});

/// Writes one compact JSON object per line (UTF-8, keys sorted).
template <typename Record>
void write_records(const std::vector<Record>& records, const std::filesystem::path& path);

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Writes `content` to `path` through a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// Map of knowledge id -> text, for annotation span checks.
std::map<std::string, std::string> host_text_index(const std::vector<AtomicKnowledge>& atomics);

}  // namespace scog::corpus
