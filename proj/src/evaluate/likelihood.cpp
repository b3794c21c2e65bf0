#include "mtp/evaluate/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mtp::evaluate {

namespace {

double log_softmax_at(std::span<const float> row, std::int32_t target) {
    double peak = -INFINITY;
    for (float v : row) peak = std::max(peak, static_cast<double>(v));
    double sum = 0.0;
    for (float v : row) sum += std::exp(static_cast<double>(v) - peak);
    return static_cast<double>(row[static_cast<std::size_t>(target)]) - peak - std::log(sum);
}

}  // namespace

double score_sequence(const model::LanguageModel &model, std::span<const std::int32_t> tokens, std::size_t first_scored) {
    if (first_scored < 1) throw EvalError("score_sequence: first scored position must be at least 1");
    if (static_cast<std::int64_t>(tokens.size()) > model.context()) {
        throw EvalError("score_sequence: " + std::to_string(tokens.size()) + " tokens exceed context " +
                        std::to_string(model.context()));
    }
    const auto V = model.vocab_size();
    for (auto id : tokens) {
        if (id < 0 || id >= V) throw EvalError("score_sequence: token " + std::to_string(id) + " outside vocab");
    }
    if (tokens.size() <= first_scored) return 0.0;
    std::vector<std::int32_t> positions(tokens.size() - first_scored);
    std::iota(positions.begin(), positions.end(), static_cast<std::int32_t>(first_scored - 1));
    const auto logits = model.logits(tokens, positions, 1);
    const auto Vs = static_cast<std::size_t>(V);
    double nll = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto target = tokens[static_cast<std::size_t>(positions[i]) + 1];
        const double lp = log_softmax_at(std::span(logits).subspan(i * Vs, Vs), target);
        if (!std::isfinite(lp)) {
            throw EvalError("score_sequence: token at position " + std::to_string(positions[i] + 1) +
                            " has zero probability");
        }
        nll -= lp;
    }
    return nll;
}

double score_long_sequence(const model::LanguageModel &model, std::span<const std::int32_t> tokens) {
    const auto C = static_cast<std::size_t>(model.context());
    if (C < 2) throw EvalError("score_long_sequence: context must be at least 2");
    double nll = 0.0;
    for (std::size_t start = 0; start + 1 < tokens.size(); start += C - 1) {
        const auto len = std::min(C, tokens.size() - start);
        nll += score_sequence(model, tokens.subspan(start, len));
    }
    return nll;
}

BitsPerByte bits_per_byte(const model::LanguageModel &model, const std::vector<std::string> &texts,
                          const tokenize::Tokenizer &tokenizer) {
    BitsPerByte r;
    for (const auto &text : texts) {
        if (text.empty()) continue;
        const auto ids = tokenizer.encode(text, true, false);
        r.nats += score_long_sequence(model, ids);
        r.bytes += static_cast<std::int64_t>(text.size());
        r.tokens_scored += static_cast<std::int64_t>(ids.size()) - 1;
    }
    if (r.bytes == 0) throw EvalError("bits_per_byte: corpus has no bytes");
    r.bpb = r.nats / (std::log(2.0) * static_cast<double>(r.bytes));
    return r;
}

}  // namespace mtp::evaluate
