#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtp/model/language_model.hpp"

namespace mtp::decode {

using TokenId = std::int32_t;

class DecodeError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct GenerationTrace {
    std::vector<TokenId> prompt;
    std::vector<TokenId> generated;
    std::int64_t forward_passes = 0;
    int k_used = 1;
    /// Index j holds tokens credited to head j + 1: head 1 for the token every
    /// pass confirms, head j + 1 for accepted drafts from head j + 1.
    std::vector<std::int64_t> head_tallies;
    std::vector<int> tokens_per_pass;
};

/// Index of the largest value; ties go to the lowest index.
TokenId argmax(std::span<const float> logits);

/// n_tokens passes, each appending head 1's argmax at the last position.
GenerationTrace greedy_generate(const model::LanguageModel &model, std::span<const TokenId> prompt, int n_tokens);

/// Greedy blockwise self-speculative decoding. Each pass runs the model on
/// the confirmed sequence plus pending drafts, accepts the longest prefix of
/// drafts that head 1 agrees with, appends head 1's next token, and drafts
/// the following k_used - 1 tokens from heads 2..k_used. The output equals
/// greedy_generate's exactly.
GenerationTrace speculative_generate(const model::LanguageModel &model, std::span<const TokenId> prompt, int n_tokens,
                                     int k_used);

struct SpeedupReport {
    std::int64_t tokens = 0;
    std::int64_t baseline_passes = 0;
    std::int64_t speculative_passes = 0;
    double speedup = 1.0;
    std::vector<double> accept_shares;  // per head, sums to 1
};

/// Compares traces pairwise; prompts and generated lengths must match.
SpeedupReport speedup_report(std::span<const GenerationTrace> baseline, std::span<const GenerationTrace> speculative);

/// prompt_id,method,k_used,tokens,forward_passes,accept_share_head_1..k
std::string trace_csv_header(int k);
std::string trace_csv_row(const std::string &prompt_id, const std::string &method, const GenerationTrace &trace, int k);

}  // namespace mtp::decode
