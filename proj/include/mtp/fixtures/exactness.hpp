#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtp/model/language_model.hpp"

namespace mtp::fixtures {

struct ExactnessResult {
    std::int64_t runs = 0;
    std::int64_t mismatches = 0;
    std::string first_mismatch;  // empty when none
};

/// Runs greedy and speculative decoding on each prompt for every k in
/// k_values and counts runs whose outputs differ.
ExactnessResult check_exactness(const model::LanguageModel &model, const std::vector<std::vector<std::int32_t>> &prompts,
                                int n_tokens, const std::vector<int> &k_values);

/// Exhaustive sweep over table mocks: every head-1 transcript over `vocab`
/// of each length up to max_len, combined with several draft patterns
/// (correct, always wrong, shifted by one, seeded random), decoded from a
/// one-token prompt for k = 2..k_max.
ExactnessResult exhaustive_table_exactness(int vocab, int max_len, int k_max);

}  // namespace mtp::fixtures
