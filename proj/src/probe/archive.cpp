#include "scog/probe/archive.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "scog/corpus/io.hpp"
#include "scog/error.hpp"

namespace scog::probe {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "archive blobs are read by reinterpreting little-endian float32");

fs::path blob_path(const fs::path& dir, const std::string& sample_id, int layer_id) {
  return dir / (sample_id + ".L" + std::to_string(layer_id) + ".f32");
}

void validate(const std::string& sample_id, const SampleMeta& meta) {
  const std::string where = "archive sample " + sample_id;
  if (meta.layer_ids.empty()) throw ValidationError(where + ": no layers");
  for (std::size_t k = 0; k < meta.layer_ids.size(); ++k) {
    if (meta.layer_ids[k] < 1 || (k > 0 && meta.layer_ids[k] <= meta.layer_ids[k - 1])) {
      throw ValidationError(where + ": layer_ids must be 1-based and strictly increasing");
    }
  }
  if (meta.dim == 0) throw ValidationError(where + ": dim must be positive");
  if (meta.token_char_spans.size() != meta.n_tokens) {
    throw ValidationError(where + ": " + std::to_string(meta.token_char_spans.size()) +
                          " token spans for n_tokens " + std::to_string(meta.n_tokens));
  }
  for (std::size_t t = 0; t < meta.token_char_spans.size(); ++t) {
    const auto& s = meta.token_char_spans[t];
    corpus::check_span(s, meta.text, where + " token " + std::to_string(t));
    if (t > 0 && s.char_start < meta.token_char_spans[t - 1].char_end) {
      throw ValidationError(where + ": token spans overlap or are out of order at token " +
                            std::to_string(t));
    }
  }
}

HiddenArchive HiddenArchive::open(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest)) {
    throw DependencyError("hidden archive " + dir.string() + " has no manifest.json");
  }
  json j;
  try {
    j = json::parse(corpus::read_file(manifest));
  } catch (const json::exception& e) {
    throw ValidationError(manifest.string() + ": " + e.what());
  }
  HiddenArchive a;
  a.dir_ = dir;
  for (const auto& [id, entry] : j.items()) {
    SampleMeta m;
    try {
      m.text = entry.at("text").get<std::string>();
      m.layer_ids = entry.at("layer_ids").get<std::vector<int>>();
      m.n_tokens = entry.at("n_tokens").get<std::size_t>();
      m.dim = entry.at("dim").get<std::size_t>();
      for (const auto& s : entry.at("token_char_spans")) {
        m.token_char_spans.push_back(
            {s.at("char_start").get<std::size_t>(), s.at("char_end").get<std::size_t>()});
      }
    } catch (const json::exception& e) {
      throw ValidationError("archive sample " + id + ": " + e.what());
    }
    validate(id, m);
    if (a.dim_ == 0) a.dim_ = m.dim;
    if (m.dim != a.dim_) {
      throw ValidationError("archive sample " + id + ": dim " + std::to_string(m.dim) +
                            " differs from " + std::to_string(a.dim_));
    }
    const auto expected = m.n_tokens * m.dim * 4;
    for (int layer : m.layer_ids) {
      const auto p = blob_path(dir, id, layer);
      if (!fs::exists(p)) throw ValidationError("missing blob " + p.string());
      if (fs::file_size(p) != expected) {
        throw ValidationError("blob " + p.string() + " has " + std::to_string(fs::file_size(p)) +
                              " bytes, expected " + std::to_string(expected));
      }
    }
    a.samples_.emplace(id, std::move(m));
  }
  return a;
}

const SampleMeta& HiddenArchive::sample(const std::string& sample_id) const {
  auto it = samples_.find(sample_id);
  if (it == samples_.end()) throw ValidationError("archive has no sample " + sample_id);
  return it->second;
}

Matrix HiddenArchive::layer(const std::string& sample_id, int layer_id) const {
  const auto& m = sample(sample_id);
  if (std::find(m.layer_ids.begin(), m.layer_ids.end(), layer_id) == m.layer_ids.end()) {
    throw ValidationError("archive sample " + sample_id + " lacks layer " +
                          std::to_string(layer_id));
  }
  const std::string bytes = corpus::read_file(blob_path(dir_, sample_id, layer_id));
  std::vector<float> values(m.n_tokens * m.dim);
  std::memcpy(values.data(), bytes.data(), values.size() * sizeof(float));
  Matrix out(m.n_tokens, m.dim);
  for (std::size_t t = 0; t < m.n_tokens; ++t) {
    for (std::size_t k = 0; k < m.dim; ++k) {
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = values[t * m.dim + k];
    }
  }
  return out;
}

void write_archive(const fs::path& dir, const std::map<std::string, SampleMeta>& samples,
                   const std::map<std::string, std::vector<Matrix>>& tensors) {
  fs::create_directories(dir);
  json manifest = json::object();
  for (const auto& [id, m] : samples) {
    validate(id, m);
    const auto& mats = tensors.at(id);
    if (mats.size() != m.layer_ids.size()) {
      throw ValidationError("archive sample " + id + ": tensor count != layer count");
    }
    json spans = json::array();
    for (const auto& s : m.token_char_spans) {
      spans.push_back({{"char_start", s.char_start}, {"char_end", s.char_end}});
    }
    manifest[id] = {{"text", m.text},
                    {"layer_ids", m.layer_ids},
                    {"n_tokens", m.n_tokens},
                    {"dim", m.dim},
                    {"token_char_spans", spans}};
    for (std::size_t k = 0; k < mats.size(); ++k) {
      const auto& x = mats[k];
      if (static_cast<std::size_t>(x.rows()) != m.n_tokens ||
          static_cast<std::size_t>(x.cols()) != m.dim) {
        throw ValidationError("archive sample " + id + ": tensor shape mismatch");
      }
      std::vector<float> values;
      values.reserve(m.n_tokens * m.dim);
      for (Eigen::Index t = 0; t < x.rows(); ++t) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) values.push_back(static_cast<float>(x(t, c)));
      }
      std::string bytes(values.size() * sizeof(float), '\0');
      std::memcpy(bytes.data(), values.data(), bytes.size());
      corpus::write_file_atomic(blob_path(dir, id, m.layer_ids[k]), bytes);
    }
  }
  corpus::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

TokenRange tokens_for_span(const SampleMeta& meta, const corpus::Span& span) {
  TokenRange r{meta.n_tokens, 0};
  for (std::size_t t = 0; t < meta.n_tokens; ++t) {
    if (meta.token_char_spans[t].overlaps(span)) {
      r.begin = std::min(r.begin, t);
      r.end = t + 1;
    }
  }
  if (r.end == 0) {
    throw ValidationError("no token overlaps characters [" + std::to_string(span.char_start) +
                          ", " + std::to_string(span.char_end) + ")");
  }
  return r;
}

}  // namespace scog::probe
