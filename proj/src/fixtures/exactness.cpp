#include "mtp/fixtures/exactness.hpp"

#include "mtp/decode/decode.hpp"
#include "mtp/fixtures/mocks.hpp"
#include "mtp/numerics/rng.hpp"

namespace mtp::fixtures {

namespace {

std::string describe(const std::vector<std::int32_t> &ids) {
    std::string s;
    for (auto id : ids) s += (s.empty() ? "" : " ") + std::to_string(id);
    return s;
}

void run_one(const model::LanguageModel &model, const std::vector<std::int32_t> &prompt, int n_tokens, int k,
             ExactnessResult &result) {
    const auto greedy = decode::greedy_generate(model, prompt, n_tokens);
    const auto spec = decode::speculative_generate(model, prompt, n_tokens, k);
    ++result.runs;
    if (greedy.generated != spec.generated) {
        if (result.mismatches == 0) {
            result.first_mismatch = "prompt [" + describe(prompt) + "] k=" + std::to_string(k) + ": greedy [" +
                                    describe(greedy.generated) + "] speculative [" + describe(spec.generated) + "]";
        }
        ++result.mismatches;
    }
}

}  // namespace

ExactnessResult check_exactness(const model::LanguageModel &model, const std::vector<std::vector<std::int32_t>> &prompts,
                                int n_tokens, const std::vector<int> &k_values) {
    ExactnessResult result;
    for (const auto &prompt : prompts) {
        for (int k : k_values) run_one(model, prompt, n_tokens, k, result);
    }
    return result;
}

ExactnessResult exhaustive_table_exactness(int vocab, int max_len, int k_max) {
    if (vocab < 2 || max_len < 1 || k_max < 2) throw FixtureError("exhaustive sweep needs vocab >= 2, len >= 1, k >= 2");
    ExactnessResult result;
    const std::vector<std::int32_t> prompt{0};
    numerics::Rng rng(0x5eed);
    for (int len = 1; len <= max_len; ++len) {
        std::vector<std::int32_t> transcript(static_cast<std::size_t>(len), 0);
        const auto L = static_cast<std::size_t>(len);
        while (true) {
            for (int pattern = 0; pattern < 4; ++pattern) {
                std::vector<std::vector<std::int32_t>> rows(L, std::vector<std::int32_t>(static_cast<std::size_t>(k_max)));
                for (std::size_t t = 0; t < L; ++t) {
                    for (int j = 1; j <= k_max; ++j) {
                        // Head j at position t scores the token j - 1 rows later.
                        const auto correct = transcript[(t + static_cast<std::size_t>(j) - 1) % L];
                        std::int32_t id = correct;
                        if (j > 1) {
                            switch (pattern) {
                                case 1: id = (correct + 1) % vocab; break;
                                case 2: id = transcript[(t + static_cast<std::size_t>(j)) % L]; break;
                                case 3: id = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(vocab))); break;
                                default: break;
                            }
                        }
                        rows[t][static_cast<std::size_t>(j - 1)] = id;
                    }
                }
                const auto model = MockModel::table(std::move(rows), vocab);
                for (int k = 2; k <= k_max; ++k) run_one(model, prompt, len, k, result);
            }
            std::size_t i = 0;
            while (i < L && ++transcript[i] == vocab) transcript[i++] = 0;
            if (i == L) break;
        }
    }
    return result;
}

}  // namespace mtp::fixtures
