#include "mtp/numerics/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels.hpp"

namespace mtp::numerics {

const char *op_name(OpKind kind) {
    switch (kind) {
        case OpKind::kInput: return "input";
        case OpKind::kParameter: return "parameter";
        case OpKind::kMatmul: return "matmul";
        case OpKind::kAdd: return "add";
        case OpKind::kMul: return "mul";
        case OpKind::kScale: return "scale";
        case OpKind::kTranspose: return "transpose";
        case OpKind::kEmbedding: return "embedding";
        case OpKind::kSoftmax: return "softmax";
        case OpKind::kRmsNorm: return "rms_norm";
        case OpKind::kRope: return "rope";
        case OpKind::kSilu: return "silu";
        case OpKind::kCausalAttention: return "causal_attention";
        case OpKind::kCrossEntropy: return "cross_entropy";
        case OpKind::kSum: return "sum";
        case OpKind::kMean: return "mean";
    }
    return "unknown";
}

namespace {

[[noreturn]] void shape_error(OpKind op, const std::string &detail) {
    throw NumericError(std::string(op_name(op)) + ": " + detail);
}

template <typename T>
void require_matrix(OpKind op, const Tensor<T> &t, const char *what) {
    if (t.rank() != 2) shape_error(op, std::string(what) + " must be a matrix, got " + shape_to_string(t.shape()));
}

template <typename T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

// Rotation angles for one position: theta_i = pos * base^(-2i/head_dim).
template <typename T>
void rope_angles(int pos, int head_dim, T base, std::vector<T> &cos_out, std::vector<T> &sin_out) {
    const int half = head_dim / 2;
    cos_out.resize(static_cast<std::size_t>(half));
    sin_out.resize(static_cast<std::size_t>(half));
    for (int i = 0; i < half; ++i) {
        const double freq = std::pow(static_cast<double>(base), -2.0 * i / head_dim);
        const double angle = pos * freq;
        cos_out[static_cast<std::size_t>(i)] = static_cast<T>(std::cos(angle));
        sin_out[static_cast<std::size_t>(i)] = static_cast<T>(std::sin(angle));
    }
}

}  // namespace

template <typename T>
NodeId Graph<T>::push(Node node) {
    if (!node.value.all_finite()) {
        throw NumericError(std::string(op_name(node.op)) + ": non-finite value in output of shape " +
                           shape_to_string(node.value.shape()));
    }
    if (mode_ == GradMode::kInference && node.op != OpKind::kParameter && node.op != OpKind::kInput) {
        node.saved.clear();
        node.saved.shrink_to_fit();
    }
    nodes_.push_back(std::move(node));
    return NodeId{nodes_.size() - 1};
}

template <typename T>
NodeId Graph<T>::input(Tensor<T> value) {
    Node n{.op = OpKind::kInput, .inputs = {}, .value = std::move(value)};
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::parameter(const std::string &name, Tensor<T> value) {
    for (const auto &n : nodes_) {
        if (n.op == OpKind::kParameter && n.name == name) {
            throw NumericError("parameter '" + name + "' registered twice in one graph");
        }
    }
    Node n{.op = OpKind::kParameter, .inputs = {}, .value = std::move(value)};
    n.value.set_requires_grad(true);
    n.name = name;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::matmul(NodeId a, NodeId b) {
    const auto &av = value(a);
    const auto &bv = value(b);
    require_matrix(OpKind::kMatmul, av, "lhs");
    require_matrix(OpKind::kMatmul, bv, "rhs");
    if (av.dim(1) != bv.dim(0)) {
        shape_error(OpKind::kMatmul,
                    "inner extents differ: " + shape_to_string(av.shape()) + " x " + shape_to_string(bv.shape()));
    }
    const auto m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor<T> out(Shape{m, n});
    kernels::gemm_nn(m, k, n, av.data().data(), bv.data().data(), out.mutable_data().data(), false);
    return push(Node{.op = OpKind::kMatmul, .inputs = {a.index, b.index}, .value = std::move(out)});
}

template <typename T>
NodeId Graph<T>::add(NodeId a, NodeId b) {
    const auto &av = value(a);
    const auto &bv = value(b);
    if (av.shape() != bv.shape()) {
        shape_error(OpKind::kAdd, shape_to_string(av.shape()) + " vs " + shape_to_string(bv.shape()));
    }
    Tensor<T> out(av.shape());
    auto o = out.mutable_data();
    auto x = av.data();
    auto y = bv.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
    return push(Node{.op = OpKind::kAdd, .inputs = {a.index, b.index}, .value = std::move(out)});
}

template <typename T>
NodeId Graph<T>::mul(NodeId a, NodeId b) {
    const auto &av = value(a);
    const auto &bv = value(b);
    if (av.shape() != bv.shape()) {
        shape_error(OpKind::kMul, shape_to_string(av.shape()) + " vs " + shape_to_string(bv.shape()));
    }
    Tensor<T> out(av.shape());
    auto o = out.mutable_data();
    auto x = av.data();
    auto y = bv.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
    return push(Node{.op = OpKind::kMul, .inputs = {a.index, b.index}, .value = std::move(out)});
}

template <typename T>
NodeId Graph<T>::scale(NodeId a, T factor) {
    const auto &av = value(a);
    Tensor<T> out(av.shape());
    auto o = out.mutable_data();
    auto x = av.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * factor;
    Node n{.op = OpKind::kScale, .inputs = {a.index}, .value = std::move(out)};
    n.scalar = factor;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::transpose(NodeId a) {
    const auto &av = value(a);
    require_matrix(OpKind::kTranspose, av, "input");
    const auto r = av.dim(0), c = av.dim(1);
    Tensor<T> out(Shape{c, r}, kernels::transposed(av.data().data(), r, c));
    return push(Node{.op = OpKind::kTranspose, .inputs = {a.index}, .value = std::move(out)});
}

template <typename T>
NodeId Graph<T>::embedding(NodeId table, std::span<const std::int32_t> ids) {
    const auto &tv = value(table);
    require_matrix(OpKind::kEmbedding, tv, "table");
    const auto rows = tv.dim(0), d = tv.dim(1);
    const auto count = static_cast<std::int64_t>(ids.size());
    Tensor<T> out(Shape{count, d});
    auto o = out.mutable_data();
    auto src = tv.data();
    for (std::int64_t i = 0; i < count; ++i) {
        const auto id = ids[static_cast<std::size_t>(i)];
        if (id < 0 || id >= rows) {
            shape_error(OpKind::kEmbedding,
                        "id " + std::to_string(id) + " outside table of shape " + shape_to_string(tv.shape()));
        }
        std::copy_n(src.begin() + id * d, d, o.begin() + i * d);
    }
    Node n{.op = OpKind::kEmbedding, .inputs = {table.index}, .value = std::move(out)};
    n.ids.assign(ids.begin(), ids.end());
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::softmax(NodeId a) {
    const auto &av = value(a);
    if (av.rank() < 1) shape_error(OpKind::kSoftmax, "needs at least one axis");
    const auto cols = av.dim(-1);
    const auto rows = cols == 0 ? 0 : av.numel() / cols;
    Tensor<T> out(av.shape());
    auto o = out.mutable_data();
    auto x = av.data();
    for (std::int64_t r = 0; r < rows; ++r) {
        const T *xr = x.data() + r * cols;
        T *orow = o.data() + r * cols;
        const T mx = *std::max_element(xr, xr + cols);
        T z = 0;
        for (std::int64_t c = 0; c < cols; ++c) {
            orow[c] = std::exp(xr[c] - mx);
            z += orow[c];
        }
        for (std::int64_t c = 0; c < cols; ++c) orow[c] /= z;
    }
    return push(Node{.op = OpKind::kSoftmax, .inputs = {a.index}, .value = std::move(out)});
}

template <typename T>
NodeId Graph<T>::rms_norm(NodeId x, NodeId weight, T eps) {
    const auto &xv = value(x);
    const auto &wv = value(weight);
    require_matrix(OpKind::kRmsNorm, xv, "input");
    const auto rows = xv.dim(0), d = xv.dim(1);
    if (wv.rank() != 1 || wv.dim(0) != d) {
        shape_error(OpKind::kRmsNorm,
                    "weight " + shape_to_string(wv.shape()) + " does not match input " + shape_to_string(xv.shape()));
    }
    Tensor<T> out(xv.shape());
    auto o = out.mutable_data();
    auto xs = xv.data();
    auto w = wv.data();
    std::vector<T> inv(static_cast<std::size_t>(rows));
    for (std::int64_t r = 0; r < rows; ++r) {
        const T *xr = xs.data() + r * d;
        const T ms = kernels::dot(xr, xr, d) / static_cast<T>(d);
        const T ir = T(1) / std::sqrt(ms + eps);
        inv[static_cast<std::size_t>(r)] = ir;
        for (std::int64_t c = 0; c < d; ++c) o[r * d + c] = xr[c] * ir * w[c];
    }
    Node n{.op = OpKind::kRmsNorm, .inputs = {x.index, weight.index}, .value = std::move(out)};
    n.saved = std::move(inv);
    n.scalar = eps;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::rope(NodeId x, int seq, int heads, T base) {
    const auto &xv = value(x);
    require_matrix(OpKind::kRope, xv, "input");
    const auto rows = xv.dim(0), d = xv.dim(1);
    if (seq <= 0 || heads <= 0 || rows % seq != 0 || d % heads != 0 || (d / heads) % 2 != 0) {
        shape_error(OpKind::kRope, "input " + shape_to_string(xv.shape()) + " incompatible with seq=" +
                                       std::to_string(seq) + " heads=" + std::to_string(heads));
    }
    const int hd = static_cast<int>(d / heads);
    Tensor<T> out(xv.shape());
    auto o = out.mutable_data();
    auto xs = xv.data();
    std::vector<T> cs, sn;
    for (std::int64_t r = 0; r < rows; ++r) {
        rope_angles(static_cast<int>(r % seq), hd, base, cs, sn);
        for (int h = 0; h < heads; ++h) {
            const std::int64_t off = r * d + static_cast<std::int64_t>(h) * hd;
            for (int i = 0; i < hd / 2; ++i) {
                const T x0 = xs[off + 2 * i], x1 = xs[off + 2 * i + 1];
                o[off + 2 * i] = x0 * cs[i] - x1 * sn[i];
                o[off + 2 * i + 1] = x0 * sn[i] + x1 * cs[i];
            }
        }
    }
    Node n{.op = OpKind::kRope, .inputs = {x.index}, .value = std::move(out)};
    n.seq = seq;
    n.heads = heads;
    n.scalar = base;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::silu(NodeId a) {
    const auto &av = value(a);
    Tensor<T> out(av.shape());
    auto o = out.mutable_data();
    auto x = av.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * sigmoid(x[i]);
    return push(Node{.op = OpKind::kSilu, .inputs = {a.index}, .value = std::move(out)});
}

template <typename T>
NodeId Graph<T>::causal_attention(NodeId q, NodeId k, NodeId v, int batch, int seq, int heads) {
    const auto &qv = value(q);
    const auto &kv = value(k);
    const auto &vv = value(v);
    require_matrix(OpKind::kCausalAttention, qv, "q");
    if (kv.shape() != qv.shape() || vv.shape() != qv.shape()) {
        shape_error(OpKind::kCausalAttention, "q/k/v shapes differ: " + shape_to_string(qv.shape()) + ", " +
                                                  shape_to_string(kv.shape()) + ", " + shape_to_string(vv.shape()));
    }
    const auto d = qv.dim(1);
    if (batch <= 0 || seq <= 0 || heads <= 0 || qv.dim(0) != static_cast<std::int64_t>(batch) * seq ||
        d % heads != 0) {
        shape_error(OpKind::kCausalAttention, "shape " + shape_to_string(qv.shape()) + " incompatible with batch=" +
                                                  std::to_string(batch) + " seq=" + std::to_string(seq) +
                                                  " heads=" + std::to_string(heads));
    }
    const std::int64_t hd = d / heads;
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(hd));
    Tensor<T> out(qv.shape());
    auto o = out.mutable_data();
    auto qs = qv.data(), ks = kv.data(), vs = vv.data();
    // Attention probabilities, laid out (batch, heads, seq, seq); entries above
    // the diagonal stay zero.
    std::vector<T> probs(static_cast<std::size_t>(batch) * heads * seq * seq, T(0));
    std::vector<T> scores(static_cast<std::size_t>(seq));
    for (int b = 0; b < batch; ++b) {
        for (int h = 0; h < heads; ++h) {
            T *pbh = probs.data() + (static_cast<std::size_t>(b) * heads + h) * seq * seq;
            for (int t = 0; t < seq; ++t) {
                const T *qt = qs.data() + (static_cast<std::int64_t>(b) * seq + t) * d + h * hd;
                T mx = -std::numeric_limits<T>::infinity();
                for (int s = 0; s <= t; ++s) {
                    const T *ks_row = ks.data() + (static_cast<std::int64_t>(b) * seq + s) * d + h * hd;
                    scores[s] = kernels::dot(qt, ks_row, hd) * inv_sqrt;
                    mx = std::max(mx, scores[s]);
                }
                T z = 0;
                for (int s = 0; s <= t; ++s) {
                    scores[s] = std::exp(scores[s] - mx);
                    z += scores[s];
                }
                T *prow = pbh + static_cast<std::size_t>(t) * seq;
                T *orow = o.data() + (static_cast<std::int64_t>(b) * seq + t) * d + h * hd;
                for (int s = 0; s <= t; ++s) {
                    prow[s] = scores[s] / z;
                    const T *vrow = vs.data() + (static_cast<std::int64_t>(b) * seq + s) * d + h * hd;
                    kernels::axpy(prow[s], vrow, orow, hd);
                }
            }
        }
    }
    Node n{.op = OpKind::kCausalAttention, .inputs = {q.index, k.index, v.index}, .value = std::move(out)};
    n.saved = std::move(probs);
    n.batch = batch;
    n.seq = seq;
    n.heads = heads;
    n.scalar = inv_sqrt;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::cross_entropy(NodeId logits, std::span<const std::int32_t> targets,
                               std::span<const std::uint8_t> mask) {
    const auto &lv = value(logits);
    require_matrix(OpKind::kCrossEntropy, lv, "logits");
    const auto rows = lv.dim(0), vocab = lv.dim(1);
    if (static_cast<std::int64_t>(targets.size()) != rows || static_cast<std::int64_t>(mask.size()) != rows) {
        shape_error(OpKind::kCrossEntropy, "logits " + shape_to_string(lv.shape()) + " with " +
                                               std::to_string(targets.size()) + " targets and " +
                                               std::to_string(mask.size()) + " mask entries");
    }
    auto x = lv.data();
    std::vector<T> lse(static_cast<std::size_t>(rows), T(0));
    std::int64_t count = 0;
    T total = 0;
    for (std::int64_t r = 0; r < rows; ++r) {
        if (!mask[static_cast<std::size_t>(r)]) continue;
        const auto tgt = targets[static_cast<std::size_t>(r)];
        if (tgt < 0 || tgt >= vocab) {
            shape_error(OpKind::kCrossEntropy, "target " + std::to_string(tgt) + " outside vocab " +
                                                   std::to_string(vocab));
        }
        const T *xr = x.data() + r * vocab;
        const T mx = *std::max_element(xr, xr + vocab);
        T z = 0;
        for (std::int64_t c = 0; c < vocab; ++c) z += std::exp(xr[c] - mx);
        const T l = mx + std::log(z);
        lse[static_cast<std::size_t>(r)] = l;
        total += l - xr[tgt];
        ++count;
    }
    if (count == 0) shape_error(OpKind::kCrossEntropy, "every position is masked");
    Node n{.op = OpKind::kCrossEntropy,
           .inputs = {logits.index},
           .value = Tensor<T>::scalar(total / static_cast<T>(count))};
    n.saved = std::move(lse);
    n.ids.assign(targets.begin(), targets.end());
    n.mask.assign(mask.begin(), mask.end());
    n.scalar = static_cast<T>(count);
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::sum(NodeId a) {
    T s = 0;
    for (T v : value(a).data()) s += v;
    return push(Node{.op = OpKind::kSum, .inputs = {a.index}, .value = Tensor<T>::scalar(s)});
}

template <typename T>
NodeId Graph<T>::mean(NodeId a) {
    const auto &av = value(a);
    if (av.numel() == 0) shape_error(OpKind::kMean, "empty input");
    T s = 0;
    for (T v : av.data()) s += v;
    return push(
        Node{.op = OpKind::kMean, .inputs = {a.index}, .value = Tensor<T>::scalar(s / static_cast<T>(av.numel()))});
}

template <typename T>
std::vector<T> &Graph<T>::grad_buffer(std::size_t index) {
    auto &g = grads_[index];
    if (g.empty()) g.assign(static_cast<std::size_t>(nodes_[index].value.numel()), T(0));
    return g;
}

template <typename T>
Gradients<T> Graph<T>::backward(NodeId loss) {
    if (mode_ != GradMode::kRecord) throw NumericError("backward: graph was built in inference mode");
    const auto &lv = value(loss);
    if (lv.numel() != 1) throw NumericError("backward: loss must be a scalar, got " + shape_to_string(lv.shape()));
    grads_.assign(nodes_.size(), {});
    grad_buffer(loss.index)[0] = T(1);
    for (std::size_t i = loss.index + 1; i-- > 0;) {
        if (grads_[i].empty()) continue;
        backward_node(i);
    }
    Gradients<T> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto &n = nodes_[i];
        if (n.op != OpKind::kParameter) continue;
        if (grads_[i].empty()) {
            out.emplace(n.name, Tensor<T>(n.value.shape()));
        } else {
            out.emplace(n.name, Tensor<T>(n.value.shape(), grads_[i]));
        }
        if (!out.at(n.name).all_finite()) throw NumericError("backward: non-finite gradient for " + n.name);
    }
    return out;
}

template <typename T>
Tensor<T> Graph<T>::input_gradient(NodeId id) const {
    const auto &n = node(id);
    if (id.index >= grads_.size() || grads_[id.index].empty()) return Tensor<T>(n.value.shape());
    return Tensor<T>(n.value.shape(), grads_[id.index]);
}

template <typename T>
void Graph<T>::backward_node(std::size_t index) {
    const Node &n = nodes_[index];
    // grads_ is sized once per sweep, so this reference survives grad_buffer().
    const std::vector<T> &dy = grads_[index];
    switch (n.op) {
        case OpKind::kInput:
        case OpKind::kParameter:
            return;
        case OpKind::kMatmul: {
            const auto &a = nodes_[n.inputs[0]].value;
            const auto &b = nodes_[n.inputs[1]].value;
            const auto m = a.dim(0), k = a.dim(1), nn = b.dim(1);
            // dA += dY * B^T
            auto bt = kernels::transposed(b.data().data(), k, nn);
            kernels::gemm_nn(m, nn, k, dy.data(), bt.data(), grad_buffer(n.inputs[0]).data(), true);
            // dB += A^T * dY
            kernels::gemm_tn_acc(m, k, nn, a.data().data(), dy.data(), grad_buffer(n.inputs[1]).data());
            return;
        }
        case OpKind::kAdd: {
            for (int side = 0; side < 2; ++side) {
                auto &g = grad_buffer(n.inputs[static_cast<std::size_t>(side)]);
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
            }
            return;
        }
        case OpKind::kMul: {
            const auto a = nodes_[n.inputs[0]].value.data();
            const auto b = nodes_[n.inputs[1]].value.data();
            auto &ga = grad_buffer(n.inputs[0]);
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += dy[i] * b[i];
            auto &gb = grad_buffer(n.inputs[1]);
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += dy[i] * a[i];
            return;
        }
        case OpKind::kScale: {
            auto &g = grad_buffer(n.inputs[0]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] * n.scalar;
            return;
        }
        case OpKind::kTranspose: {
            const auto r = n.value.dim(0), c = n.value.dim(1);
            auto back = kernels::transposed(dy.data(), r, c);
            auto &g = grad_buffer(n.inputs[0]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += back[i];
            return;
        }
        case OpKind::kEmbedding: {
            const auto d = n.value.dim(1);
            auto &g = grad_buffer(n.inputs[0]);
            for (std::size_t i = 0; i < n.ids.size(); ++i) {
                T *row = g.data() + static_cast<std::int64_t>(n.ids[i]) * d;
                const T *src = dy.data() + static_cast<std::int64_t>(i) * d;
                for (std::int64_t c = 0; c < d; ++c) row[c] += src[c];
            }
            return;
        }
        case OpKind::kSoftmax: {
            const auto cols = n.value.dim(-1);
            const auto rows = cols == 0 ? 0 : n.value.numel() / cols;
            const auto y = n.value.data();
            auto &g = grad_buffer(n.inputs[0]);
            for (std::int64_t r = 0; r < rows; ++r) {
                const T *yr = y.data() + r * cols;
                const T *dr = dy.data() + r * cols;
                T s = 0;
                for (std::int64_t c = 0; c < cols; ++c) s += yr[c] * dr[c];
                for (std::int64_t c = 0; c < cols; ++c) g[r * cols + c] += yr[c] * (dr[c] - s);
            }
            return;
        }
        case OpKind::kRmsNorm: {
            const auto &x = nodes_[n.inputs[0]].value;
            const auto w = nodes_[n.inputs[1]].value.data();
            const auto rows = x.dim(0), d = x.dim(1);
            const auto xs = x.data();
            auto &gx = grad_buffer(n.inputs[0]);
            auto &gw = grad_buffer(n.inputs[1]);
            std::vector<T> dyw(static_cast<std::size_t>(d));
            for (std::int64_t r = 0; r < rows; ++r) {
                const T ir = n.saved[static_cast<std::size_t>(r)];
                const T *xr = xs.data() + r * d;
                const T *dr = dy.data() + r * d;
                T proj = 0;
                for (std::int64_t c = 0; c < d; ++c) {
                    const T xhat = xr[c] * ir;
                    dyw[c] = dr[c] * w[c];
                    proj += dyw[c] * xhat;
                    gw[c] += dr[c] * xhat;
                }
                proj /= static_cast<T>(d);
                for (std::int64_t c = 0; c < d; ++c) gx[r * d + c] += ir * (dyw[c] - xr[c] * ir * proj);
            }
            return;
        }
        case OpKind::kRope: {
            const auto rows = n.value.dim(0), d = n.value.dim(1);
            const int hd = static_cast<int>(d / n.heads);
            auto &g = grad_buffer(n.inputs[0]);
            std::vector<T> cs, sn;
            for (std::int64_t r = 0; r < rows; ++r) {
                rope_angles(static_cast<int>(r % n.seq), hd, n.scalar, cs, sn);
                for (int h = 0; h < n.heads; ++h) {
                    const std::int64_t off = r * d + static_cast<std::int64_t>(h) * hd;
                    for (int i = 0; i < hd / 2; ++i) {
                        const T d0 = dy[off + 2 * i], d1 = dy[off + 2 * i + 1];
                        g[off + 2 * i] += d0 * cs[i] + d1 * sn[i];
                        g[off + 2 * i + 1] += -d0 * sn[i] + d1 * cs[i];
                    }
                }
            }
            return;
        }
        case OpKind::kSilu: {
            const auto x = nodes_[n.inputs[0]].value.data();
            auto &g = grad_buffer(n.inputs[0]);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const T s = sigmoid(x[i]);
                g[i] += dy[i] * s * (T(1) + x[i] * (T(1) - s));
            }
            return;
        }
        case OpKind::kCausalAttention: {
            const auto &qv = nodes_[n.inputs[0]].value;
            const auto &kv = nodes_[n.inputs[1]].value;
            const auto &vv = nodes_[n.inputs[2]].value;
            const auto d = qv.dim(1);
            const std::int64_t hd = d / n.heads;
            const int seq = n.seq;
            auto qs = qv.data(), ks = kv.data(), vs = vv.data();
            auto &gq = grad_buffer(n.inputs[0]);
            auto &gk = grad_buffer(n.inputs[1]);
            auto &gv = grad_buffer(n.inputs[2]);
            std::vector<T> dp(static_cast<std::size_t>(seq));
            for (int b = 0; b < n.batch; ++b) {
                for (int h = 0; h < n.heads; ++h) {
                    const T *pbh = n.saved.data() + (static_cast<std::size_t>(b) * n.heads + h) * seq * seq;
                    for (int t = 0; t < seq; ++t) {
                        const std::int64_t qoff = (static_cast<std::int64_t>(b) * seq + t) * d + h * hd;
                        const T *prow = pbh + static_cast<std::size_t>(t) * seq;
                        const T *dout = dy.data() + qoff;
                        T weighted = 0;
                        for (int s = 0; s <= t; ++s) {
                            const std::int64_t soff = (static_cast<std::int64_t>(b) * seq + s) * d + h * hd;
                            dp[s] = kernels::dot(dout, vs.data() + soff, hd);
                            weighted += prow[s] * dp[s];
                            kernels::axpy(prow[s], dout, gv.data() + soff, hd);
                        }
                        for (int s = 0; s <= t; ++s) {
                            const std::int64_t soff = (static_cast<std::int64_t>(b) * seq + s) * d + h * hd;
                            const T ds = prow[s] * (dp[s] - weighted) * n.scalar;
                            kernels::axpy(ds, ks.data() + soff, gq.data() + qoff, hd);
                            kernels::axpy(ds, qs.data() + qoff, gk.data() + soff, hd);
                        }
                    }
                }
            }
            return;
        }
        case OpKind::kCrossEntropy: {
            const auto &lv = nodes_[n.inputs[0]].value;
            const auto rows = lv.dim(0), vocab = lv.dim(1);
            const auto x = lv.data();
            const T scale = dy[0] / n.scalar;
            auto &g = grad_buffer(n.inputs[0]);
            for (std::int64_t r = 0; r < rows; ++r) {
                if (!n.mask[static_cast<std::size_t>(r)]) continue;
                const T l = n.saved[static_cast<std::size_t>(r)];
                const T *xr = x.data() + r * vocab;
                T *gr = g.data() + r * vocab;
                for (std::int64_t c = 0; c < vocab; ++c) gr[c] += std::exp(xr[c] - l) * scale;
                gr[n.ids[static_cast<std::size_t>(r)]] -= scale;
            }
            return;
        }
        case OpKind::kSum: {
            auto &g = grad_buffer(n.inputs[0]);
            for (auto &v : g) v += dy[0];
            return;
        }
        case OpKind::kMean: {
            auto &g = grad_buffer(n.inputs[0]);
            const T s = dy[0] / static_cast<T>(g.size());
            for (auto &v : g) v += s;
            return;
        }
    }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace mtp::numerics
