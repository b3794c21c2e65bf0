#include "mtp/evaluate/text_metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "mtp/evaluate/likelihood.hpp"
#include "mtp/tokenize/word_tokenizer.hpp"

namespace mtp::evaluate {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::int64_t> ngram_counts(const std::vector<std::string> &tokens, std::size_t n) {
    std::map<Ngram, std::int64_t> counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

}  // namespace

Bleu bleu_tokens(const std::vector<std::string> &candidate, const std::vector<std::string> &reference) {
    Bleu result;
    if (candidate.empty()) {
        result.empty_candidate = true;
        return result;
    }
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto cand = ngram_counts(candidate, n);
        const auto ref = ngram_counts(reference, n);
        std::int64_t matched = 0;
        for (const auto &[gram, count] : cand) {
            auto it = ref.find(gram);
            if (it != ref.end()) matched += std::min(count, it->second);
        }
        if (matched == 0) return result;
        const auto total = static_cast<std::int64_t>(candidate.size() - n + 1);
        log_sum += 0.25 * std::log(static_cast<double>(matched) / static_cast<double>(total));
    }
    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
    result.score = 100.0 * brevity * std::exp(log_sum);
    return result;
}

Bleu bleu(std::string_view candidate, std::string_view reference) {
    return bleu_tokens(tokenize::word_tokenize(candidate), tokenize::word_tokenize(reference));
}

std::size_t lcs_length(const std::vector<std::string> &a, const std::vector<std::string> &b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeL rouge_l_tokens(const std::vector<std::string> &candidate, const std::vector<std::string> &reference) {
    RougeL r;
    if (candidate.empty() && reference.empty()) {
        r.both_empty = true;
        return r;
    }
    if (candidate.empty() || reference.empty()) return r;
    const auto lcs = static_cast<double>(lcs_length(candidate, reference));
    r.precision = lcs / static_cast<double>(candidate.size());
    r.recall = lcs / static_cast<double>(reference.size());
    r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

RougeL rouge_l(std::string_view candidate, std::string_view reference) {
    return rouge_l_tokens(tokenize::word_tokenize(candidate), tokenize::word_tokenize(reference));
}

double ttr(std::string_view text) {
    const auto tokens = tokenize::word_tokenize(text);
    if (tokens.empty()) throw EvalError("ttr: text has no tokens");
    const std::set<std::string> unique(tokens.begin(), tokens.end());
    return static_cast<double>(unique.size()) / static_cast<double>(tokens.size());
}

std::string metric_csv_header() { return "sample_id,metric,value\n"; }

std::string metric_csv_row(const std::string &sample_id, const std::string &metric, double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return sample_id + "," + metric + "," + buf + "\n";
}

}  // namespace mtp::evaluate
