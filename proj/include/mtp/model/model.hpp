#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtp/numerics/graph.hpp"
#include "mtp/numerics/rng.hpp"

namespace mtp::model {

using numerics::Graph;
using numerics::NodeId;
using numerics::ParameterMap;
using numerics::Tensor;

class ModelError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

enum class HeadKind { kLinear, kTransformer };

const char *head_kind_name(HeadKind kind);
HeadKind parse_head_kind(const std::string &name);

struct ModelConfig {
    int vocab = 320;
    int d_model = 128;
    int n_layers = 4;
    int n_heads = 4;  // attention heads
    int context = 256;
    int k_max = 4;
    HeadKind head_kind = HeadKind::kLinear;
    double rope_base = 10000.0;
    double norm_eps = 1e-5;
    int ffn_hidden = 0;  // 0 selects 8d/3 rounded up to a multiple of 8

    /// Throws ModelError naming the first violated constraint.
    void validate() const;
    int ffn_width() const;
    /// Blocks in the shared trunk: all layers for linear heads, l - k_max for
    /// transformer heads.
    int trunk_layers() const;
};

/// Weights keyed by stable names:
///   embed (V,d); block.<i>.{attn_norm,wq,wk,wv,wo,ffn_norm,w1,w3,w2};
///   head.<j>.block.* (transformer heads); final_norm (d); unembed (d,V);
///   head.<j>.out (d,V) for linear heads j >= 2.
/// Matrices are stored (in, out) so a layer computes x * W.
template <typename T>
struct Model {
    ModelConfig config;
    ParameterMap<T> params;
};

/// Normal(0, 0.02^2) weights, attention and FFN output projections scaled by
/// 1/sqrt(2 l), norm gains at one. Each parameter draws from its own named
/// stream, so adding heads leaves the other parameters unchanged.
template <typename T>
Model<T> init_model(const ModelConfig &config, std::uint64_t seed);

template <typename To, typename From>
Model<To> cast_model(const Model<From> &model);

/// Names of the parameters owned by head `j` (1-based). Head 1 of a linear
/// model owns nothing: it is the shared unembedding.
std::vector<std::string> head_parameter_names(const ModelConfig &config, int head);

struct ForwardOptions {
    int heads = 0;  // how many heads to evaluate (prefix 1..heads); 0 means k_max
    /// If non-empty, only these flat rows (b * T + t) are projected to logits.
    std::vector<std::int32_t> rows;
    /// Parameters already registered on the graph (e.g. by a gradient
    /// checker); others are registered from the model as needed.
    const std::map<std::string, NodeId> *bound = nullptr;
};

struct ForwardResult {
    std::vector<NodeId> logits;  // per head, (rows, V)
    std::map<std::string, NodeId> parameters;
};

/// Records the forward pass for `tokens` laid out (batch, seq) on `graph`.
/// Only parameters that the requested heads use are registered.
template <typename T>
ForwardResult forward_mtp(Graph<T> &graph, const Model<T> &model, std::span<const std::int32_t> tokens, int batch,
                          int seq, const ForwardOptions &options = {});

/// Inference helper: logits shaped (B, heads, T, V).
template <typename T>
Tensor<T> forward_logits(const Model<T> &model, std::span<const std::int32_t> tokens, int batch, int seq);

struct ParamCounts {
    std::int64_t embedding = 0;
    std::int64_t trunk = 0;
    std::vector<std::int64_t> heads;  // per head 1..k_max, beyond the shared parts
    std::int64_t final_norm = 0;
    std::int64_t unembedding = 0;
    std::int64_t total = 0;
};

ParamCounts param_count(const ModelConfig &config);
/// Parameters of one Llama block: two norm gains, four attention matrices and
/// the three SwiGLU matrices.
std::int64_t block_param_count(const ModelConfig &config);

}  // namespace mtp::model
