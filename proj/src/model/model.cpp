#include "mtp/model/model.hpp"

#include <cmath>

namespace mtp::model {

namespace {

const char *const kBlockParams[] = {"attn_norm", "wq", "wk", "wv", "wo", "ffn_norm", "w1", "w3", "w2"};

std::string block_prefix(int index) { return "block." + std::to_string(index) + "."; }
std::string head_block_prefix(int head) { return "head." + std::to_string(head) + ".block."; }

void add_block_names(const std::string &prefix, std::vector<std::string> &out) {
    for (const char *p : kBlockParams) out.push_back(prefix + p);
}

template <typename T>
Tensor<T> normal_matrix(std::int64_t rows, std::int64_t cols, double stddev, const std::string &name,
                        std::uint64_t seed) {
    auto rng = numerics::Rng(seed).split(name);
    Tensor<T> t(numerics::Shape{rows, cols});
    for (auto &v : t.mutable_data()) v = static_cast<T>(rng.normal() * stddev);
    return t;
}

template <typename T>
void init_block(ParameterMap<T> &params, const std::string &prefix, const ModelConfig &c, std::uint64_t seed) {
    const std::int64_t d = c.d_model, f = c.ffn_width();
    constexpr double kStd = 0.02;
    const double out_std = kStd / std::sqrt(2.0 * c.n_layers);
    params.emplace(prefix + "attn_norm", Tensor<T>::full({d}, T(1)));
    params.emplace(prefix + "ffn_norm", Tensor<T>::full({d}, T(1)));
    for (const char *m : {"wq", "wk", "wv"}) params.emplace(prefix + m, normal_matrix<T>(d, d, kStd, prefix + m, seed));
    params.emplace(prefix + "wo", normal_matrix<T>(d, d, out_std, prefix + "wo", seed));
    params.emplace(prefix + "w1", normal_matrix<T>(d, f, kStd, prefix + "w1", seed));
    params.emplace(prefix + "w3", normal_matrix<T>(d, f, kStd, prefix + "w3", seed));
    params.emplace(prefix + "w2", normal_matrix<T>(f, d, out_std, prefix + "w2", seed));
}

template <typename T>
class Builder {
   public:
    Builder(Graph<T> &g, const Model<T> &m, ForwardResult &result, const std::map<std::string, NodeId> *bound)
        : g_(g), m_(m), result_(result), bound_(bound) {}

    NodeId param(const std::string &name) {
        if (auto it = result_.parameters.find(name); it != result_.parameters.end()) return it->second;
        if (bound_) {
            if (auto it = bound_->find(name); it != bound_->end()) {
                result_.parameters.emplace(name, it->second);
                return it->second;
            }
        }
        auto it = m_.params.find(name);
        if (it == m_.params.end()) throw ModelError("model is missing parameter '" + name + "'");
        const auto id = g_.parameter(name, it->second);
        result_.parameters.emplace(name, id);
        return id;
    }

    NodeId block(const std::string &prefix, NodeId x, int batch, int seq) {
        const auto &c = m_.config;
        const T eps = static_cast<T>(c.norm_eps), base = static_cast<T>(c.rope_base);
        auto h = g_.rms_norm(x, param(prefix + "attn_norm"), eps);
        auto q = g_.rope(g_.matmul(h, param(prefix + "wq")), seq, c.n_heads, base);
        auto k = g_.rope(g_.matmul(h, param(prefix + "wk")), seq, c.n_heads, base);
        auto v = g_.matmul(h, param(prefix + "wv"));
        auto attn = g_.causal_attention(q, k, v, batch, seq, c.n_heads);
        x = g_.add(x, g_.matmul(attn, param(prefix + "wo")));
        auto h2 = g_.rms_norm(x, param(prefix + "ffn_norm"), eps);
        auto gate = g_.silu(g_.matmul(h2, param(prefix + "w1")));
        auto up = g_.matmul(h2, param(prefix + "w3"));
        return g_.add(x, g_.matmul(g_.mul(gate, up), param(prefix + "w2")));
    }

   private:
    Graph<T> &g_;
    const Model<T> &m_;
    ForwardResult &result_;
    const std::map<std::string, NodeId> *bound_;
};

}  // namespace

const char *head_kind_name(HeadKind kind) { return kind == HeadKind::kLinear ? "linear" : "transformer"; }

HeadKind parse_head_kind(const std::string &name) {
    if (name == "linear" || name == "LL") return HeadKind::kLinear;
    if (name == "transformer" || name == "TL") return HeadKind::kTransformer;
    throw ModelError("unknown head kind '" + name + "' (expected linear or transformer)");
}

void ModelConfig::validate() const {
    auto fail = [](const std::string &msg) { throw ModelError("model config: " + msg); };
    if (vocab < 2) fail("vocab must be at least 2");
    if (d_model < 2 || n_heads < 1) fail("d_model and n_heads must be positive");
    if (d_model % n_heads != 0) fail("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                                     std::to_string(n_heads));
    if ((d_model / n_heads) % 2 != 0) fail("head dimension must be even for rotary embeddings");
    if (n_layers < 1) fail("n_layers must be at least 1");
    if (k_max < 1) fail("k_max must be at least 1");
    if (context < 2) fail("context must be at least 2");
    if (head_kind == HeadKind::kTransformer && n_layers <= k_max) {
        fail("transformer heads need n_layers > k_max (got " + std::to_string(n_layers) + " <= " +
             std::to_string(k_max) + ")");
    }
    if (ffn_hidden < 0) fail("ffn_hidden must be non-negative");
    if (!(rope_base > 0) || !(norm_eps > 0)) fail("rope_base and norm_eps must be positive");
}

int ModelConfig::ffn_width() const {
    if (ffn_hidden > 0) return ffn_hidden;
    const int raw = (8 * d_model + 2) / 3;
    return (raw + 7) / 8 * 8;
}

int ModelConfig::trunk_layers() const { return head_kind == HeadKind::kTransformer ? n_layers - k_max : n_layers; }

std::vector<std::string> head_parameter_names(const ModelConfig &config, int head) {
    std::vector<std::string> names;
    if (config.head_kind == HeadKind::kTransformer) {
        add_block_names(head_block_prefix(head), names);
    } else if (head >= 2) {
        names.push_back("head." + std::to_string(head) + ".out");
    }
    return names;
}

template <typename T>
Model<T> init_model(const ModelConfig &config, std::uint64_t seed) {
    config.validate();
    Model<T> m{config, {}};
    const std::int64_t d = config.d_model, V = config.vocab;
    m.params.emplace("embed", normal_matrix<T>(V, d, 0.02, "embed", seed));
    for (int i = 0; i < config.trunk_layers(); ++i) init_block(m.params, block_prefix(i), config, seed);
    for (int j = 1; j <= config.k_max; ++j) {
        if (config.head_kind == HeadKind::kTransformer) {
            init_block(m.params, head_block_prefix(j), config, seed);
        } else if (j >= 2) {
            const auto name = "head." + std::to_string(j) + ".out";
            m.params.emplace(name, normal_matrix<T>(d, V, 0.02, name, seed));
        }
    }
    m.params.emplace("final_norm", Tensor<T>::full({d}, T(1)));
    m.params.emplace("unembed", normal_matrix<T>(d, V, 0.02, "unembed", seed));
    return m;
}

template <typename To, typename From>
Model<To> cast_model(const Model<From> &model) {
    Model<To> out{model.config, {}};
    for (const auto &[name, t] : model.params) {
        Tensor<To> c(t.shape());
        auto src = t.data();
        auto dst = c.mutable_data();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<To>(src[i]);
        out.params.emplace(name, std::move(c));
    }
    return out;
}

template <typename T>
ForwardResult forward_mtp(Graph<T> &graph, const Model<T> &model, std::span<const std::int32_t> tokens, int batch,
                          int seq, const ForwardOptions &options) {
    const auto &c = model.config;
    if (batch < 1 || seq < 1 || static_cast<std::int64_t>(tokens.size()) != static_cast<std::int64_t>(batch) * seq) {
        throw ModelError("forward: expected " + std::to_string(batch) + "x" + std::to_string(seq) + " tokens, got " +
                         std::to_string(tokens.size()));
    }
    if (seq > c.context) {
        throw ModelError("forward: sequence length " + std::to_string(seq) + " exceeds context " +
                         std::to_string(c.context));
    }
    for (auto id : tokens) {
        if (id < 0 || id >= c.vocab) {
            throw ModelError("forward: token id " + std::to_string(id) + " outside vocab of " + std::to_string(c.vocab));
        }
    }
    const int heads = options.heads == 0 ? c.k_max : options.heads;
    if (heads < 1 || heads > c.k_max) throw ModelError("forward: cannot evaluate " + std::to_string(heads) + " heads");
    for (auto r : options.rows) {
        if (r < 0 || r >= batch * seq) throw ModelError("forward: row " + std::to_string(r) + " out of range");
    }

    ForwardResult result;
    Builder<T> b(graph, model, result, options.bound);
    auto x = graph.embedding(b.param("embed"), tokens);
    for (int i = 0; i < c.trunk_layers(); ++i) x = b.block(block_prefix(i), x, batch, seq);

    const T eps = static_cast<T>(c.norm_eps);
    auto select = [&](NodeId h) { return options.rows.empty() ? h : graph.embedding(h, options.rows); };
    if (c.head_kind == HeadKind::kLinear) {
        auto h = graph.rms_norm(select(x), b.param("final_norm"), eps);
        for (int j = 1; j <= heads; ++j) {
            const auto name = j == 1 ? std::string("unembed") : "head." + std::to_string(j) + ".out";
            result.logits.push_back(graph.matmul(h, b.param(name)));
        }
    } else {
        for (int j = 1; j <= heads; ++j) {
            auto h = b.block(head_block_prefix(j), x, batch, seq);
            h = graph.rms_norm(select(h), b.param("final_norm"), eps);
            result.logits.push_back(graph.matmul(h, b.param("unembed")));
        }
    }
    return result;
}

template <typename T>
Tensor<T> forward_logits(const Model<T> &model, std::span<const std::int32_t> tokens, int batch, int seq) {
    Graph<T> g(numerics::GradMode::kInference);
    auto r = forward_mtp(g, model, tokens, batch, seq);
    const std::int64_t k = static_cast<std::int64_t>(r.logits.size()), V = model.config.vocab;
    Tensor<T> out(numerics::Shape{batch, k, seq, V});
    auto o = out.mutable_data();
    for (std::int64_t j = 0; j < k; ++j) {
        auto src = g.value(r.logits[static_cast<std::size_t>(j)]).data();
        for (std::int64_t b = 0; b < batch; ++b) {
            for (std::int64_t t = 0; t < seq; ++t) {
                const auto from = (b * seq + t) * V;
                const auto to = ((b * k + j) * seq + t) * V;
                std::copy_n(src.begin() + from, V, o.begin() + to);
            }
        }
    }
    return out;
}

std::int64_t block_param_count(const ModelConfig &c) {
    const std::int64_t d = c.d_model, f = c.ffn_width();
    return 2 * d + 4 * d * d + 3 * d * f;
}

ParamCounts param_count(const ModelConfig &config) {
    config.validate();
    ParamCounts p;
    const std::int64_t d = config.d_model, V = config.vocab;
    p.embedding = V * d;
    p.trunk = config.trunk_layers() * block_param_count(config);
    for (int j = 1; j <= config.k_max; ++j) {
        if (config.head_kind == HeadKind::kTransformer) {
            p.heads.push_back(block_param_count(config));
        } else {
            p.heads.push_back(j == 1 ? 0 : d * V);
        }
    }
    p.final_norm = d;
    p.unembedding = d * V;
    p.total = p.embedding + p.trunk + p.final_norm + p.unembedding;
    for (auto h : p.heads) p.total += h;
    return p;
}

template Model<float> init_model<float>(const ModelConfig &, std::uint64_t);
template Model<double> init_model<double>(const ModelConfig &, std::uint64_t);
template Model<float> cast_model<float, double>(const Model<double> &);
template Model<double> cast_model<double, float>(const Model<float> &);
template Model<float> cast_model<float, float>(const Model<float> &);
template Model<double> cast_model<double, double>(const Model<double> &);
template ForwardResult forward_mtp<float>(Graph<float> &, const Model<float> &, std::span<const std::int32_t>, int, int,
                                          const ForwardOptions &);
template ForwardResult forward_mtp<double>(Graph<double> &, const Model<double> &, std::span<const std::int32_t>, int,
                                           int, const ForwardOptions &);
template Tensor<float> forward_logits<float>(const Model<float> &, std::span<const std::int32_t>, int, int);
template Tensor<double> forward_logits<double>(const Model<double> &, std::span<const std::int32_t>, int, int);

}  // namespace mtp::model
