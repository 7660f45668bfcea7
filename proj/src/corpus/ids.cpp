#include "scog/corpus/ids.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <memory>

#include "scog/error.hpp"

namespace scog::corpus {

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int size = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &size) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(size * 2);
  for (unsigned int i = 0; i < size; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0x0F]);
  }
  return out;
}

std::string IdMinter::next(std::string_view text) {
  char suffix[24];
  std::snprintf(suffix, sizeof suffix, "-%04zu", ++counter_);
  return sha256_hex(text).substr(0, 12) + suffix;
}

}  // namespace scog::corpus
