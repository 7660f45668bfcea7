#include "scog/eval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>

#include "scog/error.hpp"

namespace scog::eval {

namespace {

using Gram = std::vector<std::string>;

std::map<Gram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<Gram, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                  tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

// Sum over prediction n-grams of min(count in prediction, count in reference).
std::size_t clipped_matches(const std::map<Gram, std::size_t>& pred,
                            const std::map<Gram, std::size_t>& ref) {
  std::size_t m = 0;
  for (const auto& [gram, c] : pred) {
    auto it = ref.find(gram);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

std::size_t total_ngrams(std::size_t len, std::size_t n) { return len >= n ? len - n + 1 : 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

std::string normalize_for_em(std::string_view text) {
  std::string out;
  bool space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  while (!out.empty() && (out.back() == '.' || out.back() == '!' || out.back() == '?' ||
                          out.back() == ' ')) {
    out.pop_back();
  }
  return out;
}

int exact_match(std::string_view prediction, std::string_view reference) {
  return normalize_for_em(prediction) == normalize_for_em(reference) ? 1 : 0;
}

double bleu(const std::vector<std::string>& prediction, const std::vector<std::string>& reference,
            int max_order) {
  if (max_order < 1 || max_order > 4) {
    throw ValidationError("BLEU order must be in 1..4");
  }
  if (prediction.empty() || reference.empty()) return 0.0;
  const std::size_t order = std::min<std::size_t>(max_order, reference.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= order; ++n) {
    const std::size_t m = clipped_matches(ngram_counts(prediction, n), ngram_counts(reference, n));
    const std::size_t t = total_ngrams(prediction.size(), n);
    const double p = m > 0 ? static_cast<double>(m) / static_cast<double>(t)
                           : 1.0 / static_cast<double>(t + 1);
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(prediction.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / static_cast<double>(order));
}

double bleu_n(std::string_view prediction, std::string_view reference, int max_order) {
  return bleu(tokenize(prediction), tokenize(reference), max_order);
}

double f1_score(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

PRF rouge_n(const std::vector<std::string>& prediction, const std::vector<std::string>& reference,
            int n) {
  if (n < 1) throw ValidationError("ROUGE-N order must be positive");
  const auto un = static_cast<std::size_t>(n);
  const std::size_t tp = total_ngrams(prediction.size(), un);
  const std::size_t tr = total_ngrams(reference.size(), un);
  if (tp == 0 || tr == 0) return {};
  const std::size_t m = clipped_matches(ngram_counts(prediction, un), ngram_counts(reference, un));
  PRF out;
  out.precision = static_cast<double>(m) / static_cast<double>(tp);
  out.recall = static_cast<double>(m) / static_cast<double>(tr);
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

PRF rouge_n(std::string_view prediction, std::string_view reference, int n) {
  return rouge_n(tokenize(prediction), tokenize(reference), n);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PRF rouge_l(const std::vector<std::string>& prediction, const std::vector<std::string>& reference) {
  if (prediction.empty() || reference.empty()) return {};
  const double l = static_cast<double>(lcs_length(prediction, reference));
  PRF out;
  out.precision = l / static_cast<double>(prediction.size());
  out.recall = l / static_cast<double>(reference.size());
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

PRF rouge_l(std::string_view prediction, std::string_view reference) {
  return rouge_l(tokenize(prediction), tokenize(reference));
}

ItemScores score_item(std::string_view prediction, std::string_view reference) {
  const auto p = tokenize(prediction);
  const auto r = tokenize(reference);
  ItemScores s;
  s.em = exact_match(prediction, reference);
  s.bleu1 = bleu(p, r, 1);
  s.bleu4 = bleu(p, r, 4);
  s.rouge1 = rouge_n(p, r, 1).f1;
  s.rouge2 = rouge_n(p, r, 2).f1;
  s.rougeL = rouge_l(p, r).f1;
  return s;
}

}  // namespace scog::eval
