#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mtp/model/model.hpp"

namespace mtp::model {

/// What decoding and scoring need from a model: one forward pass over a
/// token sequence, read out at selected positions. Implemented by the
/// transformer and by the scripted mocks.
class LanguageModel {
   public:
    virtual ~LanguageModel() = default;
    virtual int k_max() const = 0;
    virtual int vocab_size() const = 0;
    virtual int context() const = 0;
    /// Logits of heads 1..heads at each position in `positions`, laid out
    /// [position index][head][vocab]. Position t of head j scores token t + j.
    virtual std::vector<float> logits(std::span<const std::int32_t> tokens, std::span<const std::int32_t> positions,
                                      int heads) const = 0;
};

class TransformerLM final : public LanguageModel {
   public:
    explicit TransformerLM(std::shared_ptr<const Model<float>> model) : model_(std::move(model)) {}
    int k_max() const override { return model_->config.k_max; }
    int vocab_size() const override { return model_->config.vocab; }
    int context() const override { return model_->config.context; }
    std::vector<float> logits(std::span<const std::int32_t> tokens, std::span<const std::int32_t> positions,
                              int heads) const override;
    const Model<float> &model() const { return *model_; }

   private:
    std::shared_ptr<const Model<float>> model_;
};

}  // namespace mtp::model
