#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtp/model/language_model.hpp"
#include "mtp/tokenize/tokenizer.hpp"

namespace mtp::evaluate {

class EvalError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Negative log-likelihood in nats under head 1 of tokens[first_scored..],
/// each conditioned on everything before it. The sequence must fit the
/// context; first_scored >= 1.
double score_sequence(const model::LanguageModel &model, std::span<const std::int32_t> tokens, std::size_t first_scored = 1);

/// Like score_sequence but for sequences longer than the context: windows of
/// C tokens that share one token with their predecessor, so every token after
/// the first is scored exactly once.
double score_long_sequence(const model::LanguageModel &model, std::span<const std::int32_t> tokens);

struct BitsPerByte {
    double bpb = 0.0;
    double nats = 0.0;
    std::int64_t bytes = 0;
    std::int64_t tokens_scored = 0;
};

/// Each text is encoded with a leading BOS and no EOS, so exactly the text's
/// own tokens are scored. BPB = total nats / (ln 2 * total UTF-8 bytes).
BitsPerByte bits_per_byte(const model::LanguageModel &model, const std::vector<std::string> &texts,
                          const tokenize::Tokenizer &tokenizer);

}  // namespace mtp::evaluate
