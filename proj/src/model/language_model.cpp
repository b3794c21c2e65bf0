#include "mtp/model/language_model.hpp"

namespace mtp::model {

std::vector<float> TransformerLM::logits(std::span<const std::int32_t> tokens, std::span<const std::int32_t> positions,
                                         int heads) const {
    if (positions.empty()) return {};
    Graph<float> g(numerics::GradMode::kInference);
    ForwardOptions opt;
    opt.heads = heads;
    opt.rows.assign(positions.begin(), positions.end());
    const auto r = forward_mtp(g, *model_, tokens, 1, static_cast<int>(tokens.size()), opt);
    const auto V = static_cast<std::size_t>(vocab_size());
    std::vector<float> out(positions.size() * static_cast<std::size_t>(heads) * V);
    for (std::size_t j = 0; j < r.logits.size(); ++j) {
        const auto src = g.value(r.logits[j]).data();
        for (std::size_t p = 0; p < positions.size(); ++p) {
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(p * V), V,
                        out.begin() + static_cast<std::ptrdiff_t>((p * static_cast<std::size_t>(heads) + j) * V));
        }
    }
    return out;
}

}  // namespace mtp::model
