#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mtp::evaluate {

struct Bleu {
    double score = 0.0;  // 0..100
    bool empty_candidate = false;
};

/// Sentence BLEU over word_tokenize tokens: clipped n-gram precisions for
/// n = 1..4, uniform weights, brevity penalty, no smoothing (any zero
/// precision gives 0), scaled to 0..100.
Bleu bleu(std::string_view candidate, std::string_view reference);
Bleu bleu_tokens(const std::vector<std::string> &candidate, const std::vector<std::string> &reference);

struct RougeL {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool both_empty = false;
};

RougeL rouge_l(std::string_view candidate, std::string_view reference);
RougeL rouge_l_tokens(const std::vector<std::string> &candidate, const std::vector<std::string> &reference);
std::size_t lcs_length(const std::vector<std::string> &a, const std::vector<std::string> &b);

/// Unique tokens over total tokens, case-sensitive. Throws EvalError when the
/// text has no tokens.
double ttr(std::string_view text);

struct MetricReport {
    std::string metric;
    double value = 0.0;
    std::int64_t count = 0;
    std::string fingerprint;
};

/// sample_id,metric,value
std::string metric_csv_header();
std::string metric_csv_row(const std::string &sample_id, const std::string &metric, double value);

}  // namespace mtp::evaluate
