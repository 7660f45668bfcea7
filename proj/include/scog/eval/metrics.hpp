#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace scog::eval {

/// Lowercases ASCII letters, splits on whitespace, and makes every ASCII
/// punctuation character a token of its own.
std::vector<std::string> tokenize(std::string_view text);

/// Lowercased, trimmed, whitespace runs collapsed, trailing . ! ? removed.
std::string normalize_for_em(std::string_view text);

int exact_match(std::string_view prediction, std::string_view reference);

/// Sentence BLEU over orders 1..min(max_order, |ref|) with uniform weights.
/// Orders without matches use (0 + 1) / (candidates + 1). Brevity penalty
/// exp(1 - r/c) when c <= r. Empty prediction or reference gives 0.
double bleu(const std::vector<std::string>& prediction, const std::vector<std::string>& reference,
            int max_order);
double bleu_n(std::string_view prediction, std::string_view reference, int max_order);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Harmonic mean, 0 when both are 0.
double f1_score(double precision, double recall);

/// Clipped n-gram overlap.
PRF rouge_n(const std::vector<std::string>& prediction, const std::vector<std::string>& reference,
            int n);
PRF rouge_n(std::string_view prediction, std::string_view reference, int n);

/// Longest-common-subsequence precision/recall/F1.
PRF rouge_l(const std::vector<std::string>& prediction, const std::vector<std::string>& reference);
PRF rouge_l(std::string_view prediction, std::string_view reference);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// All six per-item scores; ROUGE entries are F1.
struct ItemScores {
  double em = 0.0;
  double bleu1 = 0.0;
  double bleu4 = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
};

ItemScores score_item(std::string_view prediction, std::string_view reference);

}  // namespace scog::eval
