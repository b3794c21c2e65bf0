#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <cmath>
#include <string>
#include <vector>

#include "mtp/datapack/datapack.hpp"
#include "mtp/model/model.hpp"
#include "mtp/numerics/gradcheck.hpp"
#include "mtp/numerics/rng.hpp"
#include "mtp/train/train.hpp"

namespace mtp::testing {

inline model::ModelConfig tiny_config(model::HeadKind kind, int k_max) {
    model::ModelConfig c;
    c.vocab = 13;
    c.d_model = 16;
    c.n_heads = 2;
    // Transformer heads sit on top of a two-block trunk.
    c.n_layers = kind == model::HeadKind::kLinear ? 2 : 2 + k_max;
    c.context = 16;
    c.k_max = k_max;
    c.head_kind = kind;
    return c;
}

/// Two packed rows of length `seq` with a segment boundary in the second.
inline datapack::PackedBatch random_batch(numerics::Rng &rng, int vocab, int seq) {
    datapack::PackedBatch batch;
    for (int r = 0; r < 2; ++r) {
        datapack::PackedRow row;
        for (int t = 0; t < seq; ++t) row.tokens.push_back(static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(vocab))));
        if (r == 0) {
            row.segments = {{0, seq, 0}};
        } else {
            row.segments = {{0, seq / 2, 1}, {seq / 2, seq, 2}};
        }
        batch.rows.push_back(row);
    }
    return batch;
}

/// Finite-difference check of the full multi-token loss through the model.
/// Weights are the usual init plus N(0, 0.3^2) noise so that attention and
/// every head carry gradients well above roundoff.
inline numerics::GradientCheckReport check_model_gradients(const model::ModelConfig &config, std::uint64_t seed,
                                                           int seq, double tolerance) {
    auto m = model::init_model<double>(config, seed);
    numerics::Rng noise(seed, 1234);
    for (auto &[name, t] : m.params) {
        for (auto &v : t.mutable_data()) v += noise.normal() * 0.3;
    }
    numerics::Rng rng(seed, 99);
    const auto batch = random_batch(rng, config.vocab, seq);
    const auto inputs = datapack::batch_inputs(batch);
    std::vector<datapack::HeadTargets> targets;
    for (int j = 1; j <= config.k_max; ++j) targets.push_back(datapack::head_targets(batch, j));
    auto build = [&](numerics::Graph<double> &g, const numerics::ParameterNodes &params) {
        model::ForwardOptions opt;
        opt.bound = &params;
        const auto fwd = model::forward_mtp(g, m, inputs, batch.batch_size(), batch.seq_len(), opt);
        return train::mtp_loss(g, fwd.logits, targets, config.k_max).total;
    };
    return numerics::check_gradients(build, m.params, 1e-3, tolerance, numerics::Stencil::kFourPoint);
}

}  // namespace mtp::testing
