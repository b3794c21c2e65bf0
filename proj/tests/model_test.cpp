#include <doctest.h>

#include <cmath>

#include "mtp/model/model.hpp"

using namespace mtp::model;
using mtp::numerics::Rng;

namespace {

using Matrix = std::vector<std::vector<double>>;

const Tensor<double> &P(const Model<double> &m, const std::string &name) { return m.params.at(name); }

Matrix times(const Matrix &x, const Tensor<double> &w) {
    const auto in = w.dim(0), out = w.dim(1);
    Matrix y(x.size(), std::vector<double>(static_cast<std::size_t>(out), 0.0));
    for (std::size_t r = 0; r < x.size(); ++r) {
        for (std::int64_t j = 0; j < out; ++j) {
            double acc = 0;
            for (std::int64_t i = 0; i < in; ++i) acc += x[r][static_cast<std::size_t>(i)] * w.at(i, j);
            y[r][static_cast<std::size_t>(j)] = acc;
        }
    }
    return y;
}

Matrix rmsnorm(const Matrix &x, const Tensor<double> &w, double eps) {
    Matrix y = x;
    for (auto &row : y) {
        double ms = 0;
        for (double v : row) ms += v * v;
        const double s = 1.0 / std::sqrt(ms / static_cast<double>(row.size()) + eps);
        for (std::size_t i = 0; i < row.size(); ++i) row[i] *= s * w.data()[i];
    }
    return y;
}

void rotate(Matrix &x, int heads, double base) {
    const auto d = x[0].size();
    const auto hd = d / static_cast<std::size_t>(heads);
    for (std::size_t t = 0; t < x.size(); ++t) {
        for (std::size_t h = 0; h < static_cast<std::size_t>(heads); ++h) {
            for (std::size_t i = 0; i < hd / 2; ++i) {
                const double theta = static_cast<double>(t) * std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(hd));
                auto &a = x[t][h * hd + 2 * i];
                auto &b = x[t][h * hd + 2 * i + 1];
                const double a0 = a, b0 = b;
                a = a0 * std::cos(theta) - b0 * std::sin(theta);
                b = a0 * std::sin(theta) + b0 * std::cos(theta);
            }
        }
    }
}

// One sequence through a plain pre-norm Llama block.
Matrix block(const Model<double> &m, const std::string &p, const Matrix &x) {
    const auto &c = m.config;
    auto h = rmsnorm(x, P(m, p + "attn_norm"), c.norm_eps);
    auto q = times(h, P(m, p + "wq")), k = times(h, P(m, p + "wk")), v = times(h, P(m, p + "wv"));
    rotate(q, c.n_heads, c.rope_base);
    rotate(k, c.n_heads, c.rope_base);
    const std::size_t T = x.size(), d = x[0].size(), hd = d / static_cast<std::size_t>(c.n_heads);
    Matrix attn(T, std::vector<double>(d, 0.0));
    for (std::size_t hh = 0; hh < static_cast<std::size_t>(c.n_heads); ++hh) {
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<double> w(t + 1);
            double mx = -1e300, z = 0;
            for (std::size_t s = 0; s <= t; ++s) {
                double dot = 0;
                for (std::size_t i = 0; i < hd; ++i) dot += q[t][hh * hd + i] * k[s][hh * hd + i];
                w[s] = dot / std::sqrt(static_cast<double>(hd));
                mx = std::max(mx, w[s]);
            }
            for (auto &e : w) z += (e = std::exp(e - mx));
            for (std::size_t s = 0; s <= t; ++s) {
                for (std::size_t i = 0; i < hd; ++i) attn[t][hh * hd + i] += w[s] / z * v[s][hh * hd + i];
            }
        }
    }
    auto o = times(attn, P(m, p + "wo"));
    Matrix x1 = x;
    for (std::size_t t = 0; t < T; ++t) for (std::size_t i = 0; i < d; ++i) x1[t][i] += o[t][i];
    auto h2 = rmsnorm(x1, P(m, p + "ffn_norm"), c.norm_eps);
    auto g = times(h2, P(m, p + "w1")), u = times(h2, P(m, p + "w3"));
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < g[t].size(); ++i) g[t][i] = g[t][i] / (1 + std::exp(-g[t][i])) * u[t][i];
    }
    auto f = times(g, P(m, p + "w2"));
    for (std::size_t t = 0; t < T; ++t) for (std::size_t i = 0; i < d; ++i) x1[t][i] += f[t][i];
    return x1;
}

// Per head, (T, V) logits for one sequence.
std::vector<Matrix> reference_forward(const Model<double> &m, const std::vector<std::int32_t> &tokens) {
    const auto &c = m.config;
    Matrix x;
    for (auto id : tokens) {
        std::vector<double> row(static_cast<std::size_t>(c.d_model));
        for (int i = 0; i < c.d_model; ++i) row[static_cast<std::size_t>(i)] = P(m, "embed").at(id, i);
        x.push_back(row);
    }
    for (int i = 0; i < c.trunk_layers(); ++i) x = block(m, "block." + std::to_string(i) + ".", x);
    std::vector<Matrix> out;
    for (int j = 1; j <= c.k_max; ++j) {
        if (c.head_kind == HeadKind::kLinear) {
            auto h = rmsnorm(x, P(m, "final_norm"), c.norm_eps);
            out.push_back(times(h, P(m, j == 1 ? "unembed" : "head." + std::to_string(j) + ".out")));
        } else {
            auto h = block(m, "head." + std::to_string(j) + ".block.", x);
            out.push_back(times(rmsnorm(h, P(m, "final_norm"), c.norm_eps), P(m, "unembed")));
        }
    }
    return out;
}

ModelConfig tiny(HeadKind kind, int k_max) {
    ModelConfig c;
    c.vocab = 11;
    c.d_model = 16;
    c.n_layers = kind == HeadKind::kLinear ? 2 : k_max + 2;
    c.n_heads = 2;
    c.context = 12;
    c.k_max = k_max;
    c.head_kind = kind;
    return c;
}

// Larger weights than the default init so the check is not dominated by
// near-identity attention.
Model<double> random_model(const ModelConfig &c, std::uint64_t seed) {
    auto m = init_model<double>(c, seed);
    Rng rng(seed, 77);
    for (auto &[name, t] : m.params) {
        for (auto &v : t.mutable_data()) v += rng.normal() * 0.3;
    }
    return m;
}

std::vector<std::int32_t> random_tokens(Rng &rng, int n, int vocab) {
    std::vector<std::int32_t> ids(static_cast<std::size_t>(n));
    for (auto &id : ids) id = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(vocab)));
    return ids;
}

}  // namespace

TEST_CASE("config validation") {
    ModelConfig c = tiny(HeadKind::kLinear, 3);
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.n_heads = 3;
    CHECK_THROWS_AS(bad.validate(), ModelError);
    bad = tiny(HeadKind::kTransformer, 3);
    bad.n_layers = 3;
    CHECK_THROWS_AS(bad.validate(), ModelError);
    bad = c;
    bad.k_max = 0;
    CHECK_THROWS_AS(bad.validate(), ModelError);
    bad = c;
    bad.context = 1;
    CHECK_THROWS_AS(bad.validate(), ModelError);
    CHECK(ModelConfig{.d_model = 128}.ffn_width() == 344);
    CHECK(ModelConfig{.d_model = 16}.ffn_width() == 48);
}

TEST_CASE("init is deterministic per seed") {
    const auto c = tiny(HeadKind::kTransformer, 2);
    auto a = init_model<float>(c, 3), b = init_model<float>(c, 3), other = init_model<float>(c, 4);
    REQUIRE(a.params.size() == b.params.size());
    bool differs = false;
    for (const auto &[name, t] : a.params) {
        CHECK(t.bitwise_equal(b.params.at(name)));
        if (name != "final_norm" && name.find("norm") == std::string::npos) differs |= !t.bitwise_equal(other.params.at(name));
    }
    CHECK(differs);
}

TEST_CASE("init statistics and output scaling") {
    ModelConfig c;
    c.d_model = 64;
    c.n_layers = 8;
    c.n_heads = 4;
    c.vocab = 320;
    auto m = init_model<double>(c, 1);
    auto stddev = [](const Tensor<double> &t) {
        double s = 0;
        for (double v : t.data()) s += v * v;
        return std::sqrt(s / static_cast<double>(t.numel()));
    };
    CHECK(stddev(m.params.at("embed")) == doctest::Approx(0.02).epsilon(0.05));
    CHECK(stddev(m.params.at("block.0.wq")) == doctest::Approx(0.02).epsilon(0.05));
    CHECK(stddev(m.params.at("block.0.w2")) == doctest::Approx(0.02 / 4.0).epsilon(0.05));
    CHECK(stddev(m.params.at("block.3.wo")) == doctest::Approx(0.02 / 4.0).epsilon(0.05));
}

TEST_CASE("parameter counts") {
    ModelConfig ll;
    ll.d_model = 64;
    ll.vocab = 320;
    ll.n_layers = 4;
    ll.k_max = 4;
    auto ntp = ll;
    ntp.k_max = 1;
    const auto p = param_count(ll), q = param_count(ntp);
    std::int64_t extra = 0;
    for (auto h : p.heads) extra += h;
    CHECK(extra == 61440);
    CHECK(p.total == q.total + 3 * 64 * 320);

    // Hand count for d=64, f=176: norms 128, attention 4*4096, SwiGLU 3*64*176.
    CHECK(block_param_count(ntp) == 128 + 16384 + 33792);
    CHECK(q.total == 320 * 64 + 4 * (128 + 16384 + 33792) + 64 + 64 * 320);
    auto m = init_model<float>(ll, 0);
    std::int64_t actual = 0;
    for (const auto &[name, t] : m.params) actual += t.numel();
    CHECK(actual == p.total);

    ModelConfig tl = ll;
    tl.head_kind = HeadKind::kTransformer;
    tl.n_layers = 8;
    auto mt = init_model<float>(tl, 0);
    int trunk = 0, head_blocks = 0;
    for (const auto &[name, t] : mt.params) {
        if (name.ends_with(".wq")) (name.starts_with("block.") ? trunk : head_blocks)++;
    }
    CHECK(trunk == 4);
    CHECK(head_blocks == 4);
    std::int64_t actual_tl = 0;
    for (const auto &[name, t] : mt.params) actual_tl += t.numel();
    CHECK(actual_tl == param_count(tl).total);
}

TEST_CASE("forward matches a naive reference for both head kinds") {
    for (auto kind : {HeadKind::kLinear, HeadKind::kTransformer}) {
        const auto c = tiny(kind, 3);
        const auto m = random_model(c, 5);
        Rng rng(6);
        const int B = 2, T = 7;
        const auto tokens = random_tokens(rng, B * T, c.vocab);
        const auto logits = forward_logits(m, tokens, B, T);
        CHECK(logits.shape() == mtp::numerics::Shape{B, 3, T, c.vocab});
        double worst = 0;
        for (int b = 0; b < B; ++b) {
            std::vector<std::int32_t> seq(tokens.begin() + b * T, tokens.begin() + (b + 1) * T);
            const auto ref = reference_forward(m, seq);
            for (int j = 0; j < 3; ++j) {
                for (int t = 0; t < T; ++t) {
                    for (int v = 0; v < c.vocab; ++v) {
                        const double got = logits.data()[static_cast<std::size_t>(((b * 3 + j) * T + t) * c.vocab + v)];
                        worst = std::max(worst, std::abs(got - ref[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)][static_cast<std::size_t>(v)]));
                    }
                }
            }
        }
        CAPTURE(head_kind_name(kind));
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("single-head linear model is next-token prediction on the shared weights") {
    auto c = tiny(HeadKind::kLinear, 4);
    auto mtp = init_model<float>(c, 9);
    c.k_max = 1;
    auto ntp = init_model<float>(c, 9);
    for (const auto &[name, t] : ntp.params) CHECK(t.bitwise_equal(mtp.params.at(name)));
    Rng rng(1);
    const auto tokens = random_tokens(rng, 10, c.vocab);
    const auto a = forward_logits(mtp, tokens, 1, 10);
    const auto b = forward_logits(ntp, tokens, 1, 10);
    const auto V = static_cast<std::size_t>(c.vocab);
    for (std::size_t i = 0; i < 10 * V; ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("forward rejects bad inputs") {
    const auto c = tiny(HeadKind::kLinear, 2);
    auto m = init_model<float>(c, 1);
    std::vector<std::int32_t> ok(4, 1), bad_id{1, 2, 11, 0};
    CHECK_THROWS_AS(forward_logits(m, bad_id, 1, 4), ModelError);
    std::vector<std::int32_t> too_long(13, 1);
    CHECK_THROWS_AS(forward_logits(m, too_long, 1, 13), ModelError);
    CHECK_THROWS_AS(forward_logits(m, ok, 2, 4), ModelError);
}

TEST_CASE("every head is causal") {
    for (auto kind : {HeadKind::kLinear, HeadKind::kTransformer}) {
        const auto c = tiny(kind, 3);
        const auto m = init_model<float>(c, 2);
        Rng rng(3);
        for (int trial = 0; trial < 10; ++trial) {
            const int T = 10;
            auto tokens = random_tokens(rng, T, c.vocab);
            const auto base = forward_logits(m, tokens, 1, T);
            const int pos = static_cast<int>(rng.below(T));
            tokens[static_cast<std::size_t>(pos)] = (tokens[static_cast<std::size_t>(pos)] + 1) % c.vocab;
            const auto changed = forward_logits(m, tokens, 1, T);
            const auto V = static_cast<std::size_t>(c.vocab);
            for (std::size_t j = 0; j < 3; ++j) {
                for (std::size_t t = 0; t < static_cast<std::size_t>(pos); ++t) {
                    for (std::size_t v = 0; v < V; ++v) {
                        const auto i = (j * T + t) * V + v;
                        REQUIRE(base.data()[i] == changed.data()[i]);
                    }
                }
            }
        }
    }
}

TEST_CASE("heads are independent of each other's parameters") {
    for (auto kind : {HeadKind::kLinear, HeadKind::kTransformer}) {
        const auto c = tiny(kind, 3);
        const auto m = init_model<float>(c, 2);
        Rng rng(4);
        const auto tokens = random_tokens(rng, 8, c.vocab);
        const auto base = forward_logits(m, tokens, 1, 8);
        const auto V = static_cast<std::size_t>(c.vocab);
        for (int j = 2; j <= 3; ++j) {
            auto edited = m;
            for (const auto &name : head_parameter_names(c, j)) {
                auto t = edited.params.at(name);
                for (auto &v : t.mutable_data()) v = kind == HeadKind::kLinear ? 0.0f : v * 1.5f + 0.01f;
                edited.params.at(name) = t;
            }
            const auto out = forward_logits(edited, tokens, 1, 8);
            for (int i = 1; i <= 3; ++i) {
                bool same = true;
                for (std::size_t x = 0; x < 8 * V; ++x) {
                    same &= base.data()[static_cast<std::size_t>(i - 1) * 8 * V + x] ==
                            out.data()[static_cast<std::size_t>(i - 1) * 8 * V + x];
                }
                CAPTURE(i);
                CAPTURE(j);
                CHECK(same == (i != j));
            }
        }
    }
}

TEST_CASE("row selection gives bitwise-identical logits") {
    for (auto kind : {HeadKind::kLinear, HeadKind::kTransformer}) {
        const auto c = tiny(kind, 2);
        const auto m = init_model<float>(c, 8);
        Rng rng(9);
        const auto tokens = random_tokens(rng, 9, c.vocab);
        Graph<float> full(mtp::numerics::GradMode::kInference), part(mtp::numerics::GradMode::kInference);
        auto a = forward_mtp(full, m, tokens, 1, 9);
        ForwardOptions opt;
        opt.rows = {2, 8};
        auto b = forward_mtp(part, m, tokens, 1, 9, opt);
        const auto V = static_cast<std::size_t>(c.vocab);
        for (std::size_t j = 0; j < 2; ++j) {
            for (std::size_t r = 0; r < 2; ++r) {
                for (std::size_t v = 0; v < V; ++v) {
                    CHECK(part.value(b.logits[j]).data()[r * V + v] ==
                          full.value(a.logits[j]).data()[static_cast<std::size_t>(opt.rows[r]) * V + v]);
                }
            }
        }
    }
}

TEST_CASE("logits at a position do not depend on how many positions follow") {
    const auto c = tiny(HeadKind::kLinear, 3);
    const auto m = init_model<float>(c, 10);
    Rng rng(11);
    const auto tokens = random_tokens(rng, 12, c.vocab);
    const auto V = static_cast<std::size_t>(c.vocab);
    const auto full = forward_logits(m, tokens, 1, 12);
    for (int T = 1; T < 12; ++T) {
        const auto part = forward_logits(m, std::span(tokens).first(static_cast<std::size_t>(T)), 1, T);
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t t = 0; t < static_cast<std::size_t>(T); ++t) {
                for (std::size_t v = 0; v < V; ++v) {
                    REQUIRE(part.data()[(j * static_cast<std::size_t>(T) + t) * V + v] == full.data()[(j * 12 + t) * V + v]);
                }
            }
        }
    }
}
