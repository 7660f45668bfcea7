#include "scog/corpus/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

#include "scog/error.hpp"

namespace scog::corpus {

namespace utf8 {
namespace {

// Width of the scalar starting at text[pos]; throws on malformed input.
std::size_t scalar_width(std::string_view text, std::size_t pos) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  std::size_t width = 0;
  if (lead < 0x80) {
    return 1;
  } else if ((lead & 0xE0) == 0xC0) {
    width = 2;
  } else if ((lead & 0xF0) == 0xE0) {
    width = 3;
  } else if ((lead & 0xF8) == 0xF0) {
    width = 4;
  } else {
    throw ValidationError("malformed UTF-8 at byte " + std::to_string(pos));
  }
  if (pos + width > text.size()) {
    throw ValidationError("truncated UTF-8 sequence at byte " + std::to_string(pos));
  }
  for (std::size_t k = 1; k < width; ++k) {
    if ((static_cast<unsigned char>(text[pos + k]) & 0xC0) != 0x80) {
      throw ValidationError("malformed UTF-8 at byte " + std::to_string(pos + k));
    }
  }
  return width;
}

}  // namespace

std::size_t length(std::string_view text) {
  std::size_t count = 0;
  for (std::size_t pos = 0; pos < text.size(); pos += scalar_width(text, pos)) {
    ++count;
  }
  return count;
}

std::size_t byte_offset(std::string_view text, std::size_t scalar_index) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < scalar_index; ++i) {
    if (pos >= text.size()) {
      throw ValidationError("scalar index " + std::to_string(scalar_index) +
                            " beyond text length");
    }
    pos += scalar_width(text, pos);
  }
  return pos;
}

std::size_t scalar_offset(std::string_view text, std::size_t byte_pos) {
  std::size_t pos = 0;
  std::size_t count = 0;
  while (pos < byte_pos) {
    pos += scalar_width(text, pos);
    ++count;
  }
  if (pos != byte_pos) {
    throw ValidationError("byte position " + std::to_string(byte_pos) +
                          " is not on a scalar boundary");
  }
  return count;
}

}  // namespace utf8

void check_span(const Span& span, std::string_view host, std::string_view what) {
  const std::size_t len = utf8::length(host);
  if (span.char_start >= span.char_end || span.char_end > len) {
    throw ValidationError("Span invariant violated (" + std::string(what) + "): [" +
                          std::to_string(span.char_start) + ", " +
                          std::to_string(span.char_end) + ") over text of length " +
                          std::to_string(len));
  }
}

std::string_view slice(std::string_view host, const Span& span) {
  const std::size_t begin = utf8::byte_offset(host, span.char_start);
  const std::size_t end = utf8::byte_offset(host, span.char_end);
  return host.substr(begin, end - begin);
}

Span resolve_span(std::string_view host, std::string_view surface, std::size_t occurrence) {
  if (surface.empty()) {
    throw ValidationError("cannot resolve an empty surface string");
  }
  if (occurrence == 0) {
    throw ValidationError("occurrence is 1-based");
  }
  std::size_t seen = 0;
  std::size_t pos = host.find(surface);
  while (pos != std::string_view::npos) {
    if (++seen == occurrence) {
      const std::size_t start = utf8::scalar_offset(host, pos);
      return Span{start, start + utf8::length(surface)};
    }
    pos = host.find(surface, pos + 1);
  }
  if (seen == 0) {
    throw ValidationError("surface \"" + std::string(surface) + "\" not found in text");
  }
  throw ValidationError("surface \"" + std::string(surface) + "\" occurs " +
                        std::to_string(seen) + " time(s); occurrence " +
                        std::to_string(occurrence) + " out of range");
}

std::string trim(std::string_view text) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  auto first = std::find_if_not(text.begin(), text.end(), is_space);
  auto last = std::find_if_not(text.rbegin(), text.rend(), is_space).base();
  return first < last ? std::string(first, last) : std::string();
}

namespace {

constexpr std::array<std::string_view, 34> kAbbreviations = {
    "dr",   "mr",  "mrs",  "ms",   "prof", "st",   "jr",  "sr",  "mt",
    "capt", "col", "gen",  "lt",   "sgt",  "rev",  "hon", "vs",  "etc",
    "e.g",  "i.e", "no",   "inc",  "ltd",  "co",   "corp", "ave", "blvd",
    "dept", "univ", "approx", "fig", "gov", "sen", "rep"};

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(std::string_view text, std::size_t pos, std::size_t* width) {
  static constexpr std::array<std::string_view, 7> closers = {
      "\"", "'", ")", "]", "\xE2\x80\x9D", "\xE2\x80\x99", "}"};
  for (auto c : closers) {
    if (text.substr(pos, c.size()) == c) {
      *width = c.size();
      return true;
    }
  }
  return false;
}

// Word immediately preceding text[dot], lowercased.
std::string word_before(std::string_view text, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && !std::isspace(static_cast<unsigned char>(text[begin - 1])) &&
         text[begin - 1] != '(' && text[begin - 1] != '"') {
    --begin;
  }
  std::string word(text.substr(begin, dot - begin));
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return word;
}

bool is_abbreviation(std::string_view text, std::size_t dot) {
  const std::string word = word_before(text, dot);
  if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0]))) {
    return true;  // initial
  }
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

}  // namespace

bool is_single_sentence(std::string_view raw) {
  const std::string text = trim(raw);
  if (text.empty()) {
    return false;
  }
  // Peel trailing closers to find the final terminal mark.
  std::size_t end = text.size();
  bool peeled = true;
  while (peeled && end > 0) {
    peeled = false;
    for (std::size_t w = 1; w <= 3 && w <= end; ++w) {
      std::size_t width = 0;
      if (is_closer(text, end - w, &width) && width == w) {
        end -= w;
        peeled = true;
        break;
      }
    }
  }
  if (end == 0 || !is_terminal(text[end - 1])) {
    return false;
  }
  const std::size_t final_mark = end - 1;
  if (final_mark > 0 && is_terminal(text[final_mark - 1])) {
    return false;
  }
  for (std::size_t i = 0; i < final_mark; ++i) {
    if (!is_terminal(text[i])) {
      continue;
    }
    // A mark only terminates when followed by whitespace (after any closers).
    std::size_t next = i + 1;
    std::size_t width = 0;
    while (next < text.size() && is_closer(text, next, &width)) {
      next += width;
    }
    if (next >= text.size() || !std::isspace(static_cast<unsigned char>(text[next]))) {
      continue;
    }
    if (text[i] == '.' && is_abbreviation(text, i)) {
      continue;
    }
    return false;
  }
  return true;
}

}  // namespace scog::corpus
