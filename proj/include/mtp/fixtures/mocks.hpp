#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mtp/model/language_model.hpp"

namespace mtp::fixtures {

using TokenId = std::int32_t;

class FixtureError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

enum class MockKind { kAllAccept, kNeverAccept, kTableDriven };

MockKind parse_mock_kind(std::string_view name);

/// Scripted model: every head emits a one-hot logit row (1 for the scripted
/// token, 0 elsewhere), so argmax reads the script back exactly.
///
/// Rule mocks follow a fixed next-token rule of the last two tokens. Head 1
/// applies it; in the all-accept mock head j rolls the rule j steps ahead,
/// in the never-accept mock it emits that rollout plus one (mod vocab).
///
/// Table mocks are keyed by position: row t lists the argmax of each head at
/// position t, and rows repeat cyclically past the end of the table.
class MockModel final : public model::LanguageModel {
   public:
    static constexpr int kDefaultContext = 1 << 16;

    static MockModel rule(MockKind kind, int k_max, int vocab, int context = kDefaultContext);
    static MockModel table(std::vector<std::vector<TokenId>> rows, int vocab, int context = kDefaultContext);
    /// Whitespace-separated ids, one line per position, one column per head.
    /// Blank lines and lines starting with '#' are skipped.
    static MockModel parse_table(std::string_view text, int vocab, int context = kDefaultContext);
    static MockModel load_table(const std::string &path, int vocab, int context = kDefaultContext);

    int k_max() const override { return k_max_; }
    int vocab_size() const override { return vocab_; }
    int context() const override { return context_; }
    std::vector<float> logits(std::span<const std::int32_t> tokens, std::span<const std::int32_t> positions,
                              int heads) const override;

    /// Token head `head` (1-based) picks at `position` given `tokens`.
    TokenId predict(std::span<const TokenId> tokens, std::int32_t position, int head) const;
    MockKind kind() const { return kind_; }

   private:
    MockModel(MockKind kind, int k_max, int vocab, int context) : kind_(kind), k_max_(k_max), vocab_(vocab), context_(context) {}
    TokenId next_by_rule(TokenId prev, TokenId last) const;

    MockKind kind_;
    int k_max_;
    int vocab_;
    int context_;
    std::vector<std::vector<TokenId>> rows_;
};

std::unique_ptr<model::LanguageModel> make_mock(MockKind kind, int k_max, int vocab,
                                                const std::string &table_path = {});

/// Every head gives equal logits to ids below `live` and -1e30 to the rest.
class UniformModel final : public model::LanguageModel {
   public:
    UniformModel(int vocab, int live, int k_max = 1, int context = MockModel::kDefaultContext);
    int k_max() const override { return k_max_; }
    int vocab_size() const override { return vocab_; }
    int context() const override { return context_; }
    std::vector<float> logits(std::span<const std::int32_t> tokens, std::span<const std::int32_t> positions,
                              int heads) const override;

   private:
    int vocab_, live_, k_max_, context_;
};

/// Reads ahead in its input: head j at position t puts all mass on token
/// t + j, so any sequence it is scored on has likelihood 1. Positions whose
/// target lies past the input get uniform logits.
class PeekingModel final : public model::LanguageModel {
   public:
    explicit PeekingModel(int vocab, int k_max = 1, int context = MockModel::kDefaultContext)
        : vocab_(vocab), k_max_(k_max), context_(context) {}
    int k_max() const override { return k_max_; }
    int vocab_size() const override { return vocab_; }
    int context() const override { return context_; }
    std::vector<float> logits(std::span<const std::int32_t> tokens, std::span<const std::int32_t> positions,
                              int heads) const override;

   private:
    int vocab_, k_max_, context_;
};

}  // namespace mtp::fixtures
