#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scog/corpus/text.hpp"

namespace scog::probe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SampleMeta {
  std::string text;
  std::vector<int> layer_ids;  // strictly increasing, 1-based transformer blocks
  std::size_t n_tokens = 0;
  std::size_t dim = 0;
  std::vector<corpus::Span> token_char_spans;
};

/// Hidden states on disk: `manifest.json` mapping sample id to SampleMeta,
/// plus one blob `<sample_id>.L<layer>.f32` per (sample, layer) holding an
/// n_tokens x dim row-major matrix of little-endian float32.
class HiddenArchive {
 public:
  /// Reads and validates the manifest and blob sizes; tensors load lazily.
  static HiddenArchive open(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const { return dir_; }
  const std::map<std::string, SampleMeta>& samples() const { return samples_; }
  const SampleMeta& sample(const std::string& sample_id) const;
  bool contains(const std::string& sample_id) const { return samples_.count(sample_id) != 0; }
  /// Common hidden size (archives with mixed dims are rejected).
  std::size_t dim() const { return dim_; }

  /// n_tokens x dim matrix, widened to double.
  Matrix layer(const std::string& sample_id, int layer_id) const;

 private:
  std::filesystem::path dir_;
  std::map<std::string, SampleMeta> samples_;
  std::size_t dim_ = 0;
};

std::filesystem::path blob_path(const std::filesystem::path& dir, const std::string& sample_id,
                                int layer_id);

/// Throws ValidationError unless the invariants of one manifest entry hold.
void validate(const std::string& sample_id, const SampleMeta& meta);

/// Writes a complete archive. `tensors[sample_id][k]` is the matrix for
/// `meta.layer_ids[k]`, stored as float32.
void write_archive(const std::filesystem::path& dir,
                   const std::map<std::string, SampleMeta>& samples,
                   const std::map<std::string, std::vector<Matrix>>& tensors);

/// Token index range [begin, end).
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

/// Tokens whose character spans overlap `span`. Throws ValidationError when
/// none do.
TokenRange tokens_for_span(const SampleMeta& meta, const corpus::Span& span);

}  // namespace scog::probe
