#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace scog::corpus {

/// Character span over a host text, counted in Unicode scalar values.
/// `char_start` is inclusive and `char_end` exclusive.
struct Span {
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  std::size_t length() const { return char_end - char_start; }
  bool overlaps(const Span& other) const {
    return char_start < other.char_end && other.char_start < char_end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

namespace utf8 {

/// Number of scalar values in `text`. Throws ValidationError on malformed UTF-8.
std::size_t length(std::string_view text);

/// Byte offset of the scalar at `scalar_index` (== text.size() when index == length).
std::size_t byte_offset(std::string_view text, std::size_t scalar_index);

/// Scalar index of the byte position `byte_pos`, which must sit on a scalar boundary.
std::size_t scalar_offset(std::string_view text, std::size_t byte_pos);

}  // namespace utf8

/// Throws ValidationError unless 0 <= start < end <= length(host).
void check_span(const Span& span, std::string_view host, std::string_view what);

/// Host slice at `span`. The span must already be valid for `host`.
std::string_view slice(std::string_view host, const Span& span);

/// Location of the `occurrence`-th (1-based) appearance of `surface` in `host`.
/// Overlapping occurrences count ("aaa" holds "aa" twice).
Span resolve_span(std::string_view host, std::string_view surface, std::size_t occurrence = 1);

/// True when `text` is one sentence: it ends with a terminal mark (. ! ?),
/// optionally followed by closing quotes or brackets, and carries no other
/// sentence terminator. Abbreviations such as "Dr." and single-letter
/// initials are not terminators.
bool is_single_sentence(std::string_view text);

std::string trim(std::string_view text);

}  // namespace scog::corpus
