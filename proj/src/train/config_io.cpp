#include "mtp/train/config_io.hpp"

#include <algorithm>

namespace mtp::train {

using nlohmann::json;

void require_keys(const json &doc, std::initializer_list<const char *> allowed, const std::string &where) {
    if (!doc.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto &[key, value] : doc.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char *a) { return key == a; })) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

json model_config_to_json(const ModelConfig &c) {
    return {{"vocab", c.vocab},         {"d_model", c.d_model},
            {"n_layers", c.n_layers},   {"n_heads", c.n_heads},
            {"context", c.context},     {"k_max", c.k_max},
            {"head_kind", model::head_kind_name(c.head_kind)},
            {"rope_base", c.rope_base}, {"norm_eps", c.norm_eps},
            {"ffn_hidden", c.ffn_hidden}};
}

ModelConfig model_config_from_json(const json &doc, const std::string &where) {
    require_keys(doc,
                 {"vocab", "d_model", "n_layers", "n_heads", "context", "k_max", "head_kind", "rope_base", "norm_eps",
                  "ffn_hidden"},
                 where);
    ModelConfig c;
    read_field(doc, "vocab", c.vocab, where);
    read_field(doc, "d_model", c.d_model, where);
    read_field(doc, "n_layers", c.n_layers, where);
    read_field(doc, "n_heads", c.n_heads, where);
    read_field(doc, "context", c.context, where);
    read_field(doc, "k_max", c.k_max, where);
    std::string kind = model::head_kind_name(c.head_kind);
    read_field(doc, "head_kind", kind, where);
    try {
        c.head_kind = model::parse_head_kind(kind);
    } catch (const model::ModelError &e) {
        throw ConfigError(where + ".head_kind: " + e.what());
    }
    read_field(doc, "rope_base", c.rope_base, where);
    read_field(doc, "norm_eps", c.norm_eps, where);
    read_field(doc, "ffn_hidden", c.ffn_hidden, where);
    try {
        c.validate();
    } catch (const model::ModelError &e) {
        throw ConfigError(where + ": " + e.what());
    }
    return c;
}

json train_config_to_json(const TrainConfig &c) {
    return {{"peak_lr", c.peak_lr},
            {"warmup_fraction", c.warmup_fraction},
            {"final_lr_fraction", c.final_lr_fraction},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_eps", c.adam_eps},
            {"weight_decay", c.weight_decay},
            {"clip_norm", c.clip_norm},
            {"batch_size", c.batch_size},
            {"total_steps", c.total_steps},
            {"seed", c.seed},
            {"curriculum", curriculum::mode_name(c.curriculum)},
            {"eval_every", c.eval_every},
            {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig train_config_from_json(const json &doc, const std::string &where) {
    require_keys(doc,
                 {"peak_lr", "warmup_fraction", "final_lr_fraction", "beta1", "beta2", "adam_eps", "weight_decay",
                  "clip_norm", "batch_size", "total_steps", "seed", "curriculum", "eval_every", "checkpoint_every"},
                 where);
    TrainConfig c;
    read_field(doc, "peak_lr", c.peak_lr, where);
    read_field(doc, "warmup_fraction", c.warmup_fraction, where);
    read_field(doc, "final_lr_fraction", c.final_lr_fraction, where);
    read_field(doc, "beta1", c.beta1, where);
    read_field(doc, "beta2", c.beta2, where);
    read_field(doc, "adam_eps", c.adam_eps, where);
    read_field(doc, "weight_decay", c.weight_decay, where);
    read_field(doc, "clip_norm", c.clip_norm, where);
    read_field(doc, "batch_size", c.batch_size, where);
    read_field(doc, "total_steps", c.total_steps, where);
    read_field(doc, "seed", c.seed, where);
    std::string mode = curriculum::mode_name(c.curriculum);
    read_field(doc, "curriculum", mode, where);
    try {
        c.curriculum = curriculum::parse_mode(mode);
    } catch (const curriculum::CurriculumError &e) {
        throw ConfigError(where + ".curriculum: " + e.what());
    }
    read_field(doc, "eval_every", c.eval_every, where);
    read_field(doc, "checkpoint_every", c.checkpoint_every, where);
    try {
        c.validate();
    } catch (const TrainError &e) {
        throw ConfigError(where + ": " + e.what());
    }
    return c;
}

}  // namespace mtp::train
