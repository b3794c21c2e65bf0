#include "mtp/train/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../binary_io.hpp"
#include "mtp/train/config_io.hpp"

namespace mtp::train {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_string(std::ostream &out, const std::string &s) {
    io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream &in, const std::string &what) {
    const auto n = io::read_pod<std::uint32_t>(in, what);
    if (n > (1u << 26)) throw TrainError(what + ": corrupt string length");
    std::string s(n, '\0');
    io::read_array(in, s.data(), n, what);
    return s;
}

void write_tensor(std::ostream &out, const Tensor<float> &t) {
    io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) io::write_pod<std::int64_t>(out, d);
    io::write_array(out, t.data().data(), t.data().size());
}

Tensor<float> read_tensor(std::istream &in, const std::string &what) {
    const auto rank = io::read_pod<std::uint32_t>(in, what);
    if (rank > 8) throw TrainError(what + ": corrupt tensor rank");
    numerics::Shape shape;
    std::int64_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        shape.push_back(io::read_pod<std::int64_t>(in, what));
        if (shape.back() < 0 || shape.back() > (1LL << 31)) throw TrainError(what + ": corrupt tensor shape");
        n *= shape.back();
        if (n > (1LL << 31)) throw TrainError(what + ": corrupt tensor shape");
    }
    Tensor<float> t(shape);
    auto data = t.mutable_data();
    io::read_array(in, data.data(), data.size(), what);
    return t;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::vector<std::string> read_lines(const fs::path &path) {
    std::vector<std::string> lines;
    std::ifstream in(path);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TrainError("cannot write " + path.string());
    out << text;
}

}  // namespace

void TrainConfig::validate() const {
    auto fail = [](const std::string &msg) { throw TrainError("train config: " + msg); };
    if (!(peak_lr > 0)) fail("peak_lr must be positive");
    if (!(warmup_fraction > 0 && warmup_fraction < 1)) fail("warmup_fraction must lie in (0, 1)");
    if (!(final_lr_fraction > 0 && final_lr_fraction <= 1)) fail("final_lr_fraction must lie in (0, 1]");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) fail("betas must lie in [0, 1)");
    if (!(adam_eps > 0)) fail("adam_eps must be positive");
    if (!(weight_decay >= 0)) fail("weight_decay must be non-negative");
    if (!(clip_norm > 0)) fail("clip_norm must be positive");
    if (batch_size < 1) fail("batch_size must be at least 1");
    if (total_steps < 1) fail("total_steps must be at least 1");
    if (eval_every < 0 || checkpoint_every < 0) fail("eval_every and checkpoint_every must be non-negative");
}

std::int64_t TrainConfig::warmup_steps() const {
    return static_cast<std::int64_t>(std::llround(warmup_fraction * static_cast<double>(total_steps)));
}

double lr_at(const TrainConfig &c, std::int64_t step) {
    if (step < 0 || step > c.total_steps) {
        throw TrainError("lr_at: step " + std::to_string(step) + " outside [0, " + std::to_string(c.total_steps) + "]");
    }
    const auto w = c.warmup_steps();
    if (step < w) return c.peak_lr * static_cast<double>(step) / static_cast<double>(w);
    if (c.total_steps == w) return c.peak_lr * c.final_lr_fraction;
    const double progress = static_cast<double>(step - w) / static_cast<double>(c.total_steps - w);
    const double cosine = 0.5 * (1.0 + std::cos(M_PI * progress));
    return c.peak_lr * (c.final_lr_fraction + (1.0 - c.final_lr_fraction) * cosine);
}

template <typename T>
MtpLoss<T> mtp_loss(Graph<T> &graph, std::span<const NodeId> head_logits,
                    std::span<const datapack::HeadTargets> targets, int active_k) {
    if (active_k < 1 || active_k > static_cast<int>(head_logits.size()) ||
        active_k > static_cast<int>(targets.size())) {
        throw TrainError("mtp_loss: active_k " + std::to_string(active_k) + " needs that many heads and targets");
    }
    MtpLoss<T> out;
    for (int j = 0; j < active_k; ++j) {
        const auto &t = targets[static_cast<std::size_t>(j)];
        if (t.active == 0) throw TrainError("mtp_loss: head " + std::to_string(j + 1) + " has no unmasked positions");
        out.per_head.push_back(graph.cross_entropy(head_logits[static_cast<std::size_t>(j)], t.targets, t.mask));
    }
    out.total = out.per_head[0];
    for (int j = 1; j < active_k; ++j) out.total = graph.add(out.total, out.per_head[static_cast<std::size_t>(j)]);
    return out;
}

double clip_grad_norm(Gradients<float> &grads, double max_norm) {
    double sq = 0;
    for (const auto &[name, g] : grads) {
        for (float v : g.data()) {
            if (!std::isfinite(v)) throw TrainError("clip_grad_norm: non-finite gradient in '" + name + "'");
            sq += static_cast<double>(v) * v;
        }
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double factor = max_norm / norm;
        for (auto &[name, g] : grads) {
            for (auto &v : g.mutable_data()) v = static_cast<float>(v * factor);
        }
    }
    return norm;
}

void adamw_step(ParameterMap<float> &params, const Gradients<float> &grads, AdamState &state, double lr,
                const TrainConfig &c) {
    for (const auto &[name, g] : grads) {
        auto it = params.find(name);
        if (it == params.end()) throw TrainError("adamw_step: gradient for unknown parameter '" + name + "'");
        if (it->second.shape() != g.shape()) {
            throw TrainError("adamw_step: shape mismatch for '" + name + "': parameter " +
                             numerics::shape_to_string(it->second.shape()) + ", gradient " +
                             numerics::shape_to_string(g.shape()));
        }
    }
    ++state.step;
    for (const auto &[name, g] : grads) {
        auto &p = params.at(name);
        auto [mit, fresh] = state.moments.try_emplace(name);
        auto &mo = mit->second;
        if (fresh) {
            mo.m = Tensor<float>(p.shape());
            mo.v = Tensor<float>(p.shape());
        }
        ++mo.updates;
        const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(mo.updates));
        const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(mo.updates));
        auto pd = p.mutable_data();
        auto md = mo.m.mutable_data();
        auto vd = mo.v.mutable_data();
        auto gd = g.data();
        for (std::size_t i = 0; i < pd.size(); ++i) {
            const double gi = gd[i];
            const double m = c.beta1 * md[i] + (1.0 - c.beta1) * gi;
            const double v = c.beta2 * vd[i] + (1.0 - c.beta2) * gi * gi;
            md[i] = static_cast<float>(m);
            vd[i] = static_cast<float>(v);
            double x = pd[i];
            x -= lr * c.weight_decay * x;
            x -= lr * (m / bc1) / (std::sqrt(v / bc2) + c.adam_eps);
            pd[i] = static_cast<float>(x);
        }
    }
}

void save_checkpoint(const std::string &path, const Checkpoint &ck) {
    std::ostringstream out(std::ios::binary);
    out.write("MTPCKPT1", 8);
    io::write_pod<std::uint32_t>(out, kCheckpointVersion);
    nlohmann::json configs = {{"model", model_config_to_json(ck.model_config)},
                              {"train", train_config_to_json(ck.train_config)}};
    write_string(out, configs.dump());
    io::write_pod<std::int64_t>(out, ck.step);
    io::write_pod<std::uint64_t>(out, ck.params.size());
    for (const auto &[name, t] : ck.params) {
        write_string(out, name);
        write_tensor(out, t);
    }
    io::write_pod<std::int64_t>(out, ck.optimizer.step);
    io::write_pod<std::uint64_t>(out, ck.optimizer.moments.size());
    for (const auto &[name, mo] : ck.optimizer.moments) {
        write_string(out, name);
        io::write_pod<std::int64_t>(out, mo.updates);
        write_tensor(out, mo.m);
        write_tensor(out, mo.v);
    }
    const auto payload = out.str();
    const auto tmp = path + ".tmp";
    {
        std::ofstream file(tmp, std::ios::binary);
        if (!file) throw TrainError("cannot write checkpoint " + path);
        file.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        io::write_pod<std::uint64_t>(file, fnv1a(payload));
        if (!file) throw TrainError("write failed: " + path);
    }
    fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string &path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw TrainError("cannot read checkpoint " + path);
    std::ostringstream ss;
    ss << file.rdbuf();
    const auto bytes = ss.str();
    if (bytes.size() < 8 + 4 + 8 || bytes.compare(0, 8, "MTPCKPT1") != 0) {
        throw TrainError(path + ": not a checkpoint (bad magic)");
    }
    const auto payload = std::string_view(bytes).substr(0, bytes.size() - 8);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + payload.size(), 8);
    if (stored != fnv1a(payload)) throw TrainError(path + ": checksum mismatch (corrupt or truncated file)");

    std::istringstream in(std::string(payload.substr(8)), std::ios::binary);
    try {
        const auto version = io::read_pod<std::uint32_t>(in, path);
        if (version != kCheckpointVersion) throw TrainError(path + ": unsupported version " + std::to_string(version));
        Checkpoint ck;
        const auto configs = nlohmann::json::parse(read_string(in, path));
        ck.model_config = model_config_from_json(configs.at("model"));
        ck.train_config = train_config_from_json(configs.at("train"));
        ck.step = io::read_pod<std::int64_t>(in, path);
        const auto count = io::read_pod<std::uint64_t>(in, path);
        for (std::uint64_t i = 0; i < count; ++i) {
            auto name = read_string(in, path);
            ck.params.emplace(std::move(name), read_tensor(in, path));
        }
        ck.optimizer.step = io::read_pod<std::int64_t>(in, path);
        const auto moments = io::read_pod<std::uint64_t>(in, path);
        for (std::uint64_t i = 0; i < moments; ++i) {
            auto name = read_string(in, path);
            Moments mo;
            mo.updates = io::read_pod<std::int64_t>(in, path);
            mo.m = read_tensor(in, path);
            mo.v = read_tensor(in, path);
            ck.optimizer.moments.emplace(std::move(name), std::move(mo));
        }
        return ck;
    } catch (const nlohmann::json::exception &e) {
        throw TrainError(path + ": corrupt config block (" + e.what() + ")");
    } catch (const ConfigError &e) {
        throw TrainError(path + ": " + e.what());
    }
}

std::string metrics_csv_header(int k_max) {
    std::string h = "step,lr,active_k,loss";
    for (int j = 1; j <= k_max; ++j) h += ",loss_head_" + std::to_string(j);
    return h + "\n";
}

std::string metrics_csv_row(const StepMetrics &m, int k_max) {
    std::string row = std::to_string(m.step) + "," + format_double(m.lr) + "," + std::to_string(m.active_k) + "," +
                      format_double(m.loss);
    for (int j = 0; j < k_max; ++j) {
        row += ",";
        if (j < static_cast<int>(m.head_losses.size())) row += format_double(m.head_losses[static_cast<std::size_t>(j)]);
    }
    return row + "\n";
}

std::vector<double> evaluate_head_losses(const Model<float> &model, const std::vector<datapack::PackedRow> &rows,
                                         int batch_size) {
    const int k = model.config.k_max;
    std::vector<double> nll(static_cast<std::size_t>(k), 0.0);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < rows.size(); i += static_cast<std::size_t>(batch_size)) {
        datapack::PackedBatch batch;
        for (std::size_t j = i; j < std::min(rows.size(), i + static_cast<std::size_t>(batch_size)); ++j) {
            batch.rows.push_back(rows[j]);
        }
        const auto inputs = datapack::batch_inputs(batch);
        Graph<float> g(numerics::GradMode::kInference);
        const auto fwd = model::forward_mtp(g, model, inputs, batch.batch_size(), batch.seq_len());
        for (int j = 0; j < k; ++j) {
            const auto t = datapack::head_targets(batch, j + 1);
            if (t.active == 0) continue;
            const auto loss = g.cross_entropy(fwd.logits[static_cast<std::size_t>(j)], t.targets, t.mask);
            nll[static_cast<std::size_t>(j)] += static_cast<double>(g.value(loss).item()) * static_cast<double>(t.active);
            counts[static_cast<std::size_t>(j)] += t.active;
        }
    }
    for (std::size_t j = 0; j < nll.size(); ++j) {
        nll[j] = counts[j] == 0 ? std::nan("") : nll[j] / static_cast<double>(counts[j]);
    }
    return nll;
}

TrainResult train_run(const ModelConfig &model_config, const TrainConfig &train_config,
                      const std::vector<datapack::PackedRow> &rows, const TrainOptions &options) {
    model_config.validate();
    train_config.validate();
    if (rows.empty()) throw TrainError("train: no training rows");
    for (const auto &r : rows) {
        if (static_cast<int>(r.tokens.size()) > model_config.context) {
            throw TrainError("train: packed rows of length " + std::to_string(r.tokens.size()) +
                             " exceed the model context " + std::to_string(model_config.context));
        }
    }
    const curriculum::CurriculumSpec spec{train_config.curriculum, model_config.k_max, train_config.total_steps};
    spec.validate();

    TrainResult result{model::init_model<float>(model_config, train_config.seed), {}, {}, 0};
    if (!options.resume_from.empty()) {
        auto ck = load_checkpoint(options.resume_from);
        if (model_config_to_json(ck.model_config) != model_config_to_json(model_config) ||
            train_config_to_json(ck.train_config) != train_config_to_json(train_config)) {
            throw TrainError("resume: checkpoint " + options.resume_from + " was written with a different config");
        }
        result.model.params = std::move(ck.params);
        result.optimizer = std::move(ck.optimizer);
        result.steps_done = ck.step;
    }

    fs::path metrics_path, eval_path, ckpt_dir;
    if (!options.run_dir.empty()) {
        const fs::path dir(options.run_dir);
        fs::create_directories(dir / "logs");
        fs::create_directories(dir / "checkpoints");
        metrics_path = dir / "logs" / "metrics.csv";
        eval_path = dir / "logs" / "eval.csv";
        ckpt_dir = dir / "checkpoints";
        // Keep the log consistent with the state being resumed from.
        auto trim = [&](const fs::path &path, const std::string &header) {
            std::string kept = header;
            if (result.steps_done > 0 && fs::exists(path)) {
                const auto lines = read_lines(path);
                for (std::size_t i = 1; i < lines.size(); ++i) {
                    if (std::stoll(lines[i].substr(0, lines[i].find(','))) < result.steps_done) kept += lines[i] + "\n";
                }
            }
            write_text(path, kept);
        };
        trim(metrics_path, metrics_csv_header(model_config.k_max));
        if (train_config.eval_every > 0 && !options.eval_rows.empty()) {
            std::string header = "step";
            for (int j = 1; j <= model_config.k_max; ++j) header += ",eval_loss_head_" + std::to_string(j);
            trim(eval_path, header + "\n");
        }
    }

    auto checkpoint = [&](const fs::path &path) {
        save_checkpoint(path.string(),
                        Checkpoint{model_config, train_config, result.model.params, result.optimizer, result.steps_done});
    };

    const auto end = options.stop_after >= 0 ? std::min(options.stop_after, train_config.total_steps)
                                             : train_config.total_steps;
    std::ofstream metrics_out, eval_out;
    if (!metrics_path.empty()) metrics_out.open(metrics_path, std::ios::app | std::ios::binary);
    if (!eval_path.empty() && fs::exists(eval_path)) eval_out.open(eval_path, std::ios::app | std::ios::binary);

    for (std::int64_t step = result.steps_done; step < end; ++step) {
        const auto batch = datapack::batch_for_step(rows, train_config.batch_size, train_config.seed, step);
        const int k = curriculum::active_heads(spec, step);
        StepMetrics m;
        m.step = step;
        m.active_k = k;
        m.lr = lr_at(train_config, step);
        Gradients<float> grads;
        try {
            Graph<float> g;
            model::ForwardOptions opt;
            opt.heads = k;
            const auto inputs = datapack::batch_inputs(batch);
            const auto fwd = model::forward_mtp(g, result.model, inputs, batch.batch_size(), batch.seq_len(), opt);
            std::vector<datapack::HeadTargets> targets;
            for (int j = 1; j <= k; ++j) targets.push_back(datapack::head_targets(batch, j));
            const auto loss = mtp_loss(g, fwd.logits, targets, k);
            m.loss = g.value(loss.total).item();
            for (auto id : loss.per_head) m.head_losses.push_back(g.value(id).item());
            grads = g.backward(loss.total);
        } catch (const numerics::NumericError &e) {
            if (!ckpt_dir.empty()) checkpoint(ckpt_dir / "last_good.ckpt");
            throw TrainError("train: non-finite values at step " + std::to_string(step) + " (" + e.what() +
                             "); last good state saved");
        }
        m.grad_norm = clip_grad_norm(grads, train_config.clip_norm);
        adamw_step(result.model.params, grads, result.optimizer, m.lr, train_config);
        result.steps_done = step + 1;

        if (metrics_out.is_open()) {
            metrics_out << metrics_csv_row(m, model_config.k_max);
            metrics_out.flush();
        }
        if (options.on_step) options.on_step(m);
        result.history.push_back(std::move(m));

        if (eval_out.is_open() && result.steps_done % train_config.eval_every == 0) {
            const auto losses = evaluate_head_losses(result.model, options.eval_rows, train_config.batch_size);
            eval_out << result.steps_done;
            for (double l : losses) eval_out << "," << format_double(l);
            eval_out << "\n";
            eval_out.flush();
        }
        if (!ckpt_dir.empty() && train_config.checkpoint_every > 0 &&
            result.steps_done % train_config.checkpoint_every == 0) {
            checkpoint(ckpt_dir / ("step_" + std::to_string(result.steps_done) + ".ckpt"));
        }
    }
    if (!ckpt_dir.empty()) {
        checkpoint(ckpt_dir / (result.steps_done == train_config.total_steps
                                   ? std::string("final.ckpt")
                                   : "step_" + std::to_string(result.steps_done) + ".ckpt"));
    }
    return result;
}

template MtpLoss<float> mtp_loss<float>(Graph<float> &, std::span<const NodeId>,
                                        std::span<const datapack::HeadTargets>, int);
template MtpLoss<double> mtp_loss<double>(Graph<double> &, std::span<const NodeId>,
                                          std::span<const datapack::HeadTargets>, int);

}  // namespace mtp::train
