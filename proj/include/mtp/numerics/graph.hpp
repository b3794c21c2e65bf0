#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mtp/numerics/tensor.hpp"

namespace mtp::numerics {

template <typename T>
using ParameterMap = std::map<std::string, Tensor<T>>;

template <typename T>
using Gradients = std::map<std::string, Tensor<T>>;

struct NodeId {
    std::size_t index = 0;
};

enum class OpKind {
    kInput,
    kParameter,
    kMatmul,
    kAdd,
    kMul,
    kScale,
    kTranspose,
    kEmbedding,
    kSoftmax,
    kRmsNorm,
    kRope,
    kSilu,
    kCausalAttention,
    kCrossEntropy,
    kSum,
    kMean,
};

const char *op_name(OpKind kind);

enum class GradMode { kRecord, kInference };

/// Tape of tensor ops in creation order, which is also a topological order.
/// Every op validates shapes and rejects non-finite results. In kRecord mode
/// the tape keeps what backward() needs; kInference skips the bookkeeping.
///
/// Activations are matrices of shape (rows, features). Ops that need a
/// sequence structure (rope, causal_attention) take the batch layout
/// explicitly: row r belongs to sequence r / seq at position r % seq.
template <typename T>
class Graph {
   public:
    explicit Graph(GradMode mode = GradMode::kRecord) : mode_(mode) {}

    NodeId input(Tensor<T> value);
    NodeId parameter(const std::string &name, Tensor<T> value);

    const Tensor<T> &value(NodeId id) const { return nodes_.at(id.index).value; }
    OpKind kind(NodeId id) const { return nodes_.at(id.index).op; }
    std::size_t size() const { return nodes_.size(); }
    GradMode mode() const { return mode_; }

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, T factor);
    NodeId transpose(NodeId a);
    NodeId embedding(NodeId table, std::span<const std::int32_t> ids);
    NodeId softmax(NodeId a);
    NodeId rms_norm(NodeId x, NodeId weight, T eps);
    NodeId rope(NodeId x, int seq, int heads, T base);
    NodeId silu(NodeId a);
    NodeId causal_attention(NodeId q, NodeId k, NodeId v, int batch, int seq, int heads);
    /// Mean token cross-entropy over rows with mask != 0. Throws if every row
    /// is masked.
    NodeId cross_entropy(NodeId logits, std::span<const std::int32_t> targets, std::span<const std::uint8_t> mask);
    NodeId sum(NodeId a);
    NodeId mean(NodeId a);

    /// Reverse sweep from a scalar loss. Returns a gradient for every
    /// parameter leaf; leaves the loss does not depend on get zeros.
    Gradients<T> backward(NodeId loss);

    /// Gradient of an input leaf from the last backward() call.
    Tensor<T> input_gradient(NodeId id) const;

   private:
    struct Node {
        OpKind op;
        std::vector<std::size_t> inputs;
        Tensor<T> value;
        std::vector<T> saved;
        std::vector<std::int32_t> ids;
        std::vector<std::uint8_t> mask;
        T scalar = T(0);
        int batch = 0;
        int seq = 0;
        int heads = 0;
        std::string name;
    };

    NodeId push(Node node);
    const Node &node(NodeId id) const { return nodes_.at(id.index); }
    void backward_node(std::size_t index);
    std::vector<T> &grad_buffer(std::size_t index);

    GradMode mode_;
    std::vector<Node> nodes_;
    std::vector<std::vector<T>> grads_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace mtp::numerics
