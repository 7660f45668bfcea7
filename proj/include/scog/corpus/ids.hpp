#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace scog::corpus {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Issues ids of the form `<first 12 hex of sha256(text)>-<NNNN>`, where the
/// suffix counts up from 1 per minter. Stable across reruns that mint in the
/// same order.
class IdMinter {
 public:
  explicit IdMinter(std::size_t start = 0) : counter_(start) {}
  std::string next(std::string_view text);
  std::size_t issued() const { return counter_; }

 private:
  std::size_t counter_;
};

}  // namespace scog::corpus
