#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtp/curriculum/curriculum.hpp"
#include "mtp/datapack/datapack.hpp"
#include "mtp/model/model.hpp"

namespace mtp::train {

using model::Model;
using model::ModelConfig;
using numerics::Gradients;
using numerics::Graph;
using numerics::NodeId;
using numerics::ParameterMap;
using numerics::Tensor;

class TrainError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double peak_lr = 2e-4;
    double warmup_fraction = 0.1;
    double final_lr_fraction = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double adam_eps = 1e-8;
    double weight_decay = 0.1;
    double clip_norm = 1.0;
    int batch_size = 4;
    std::int64_t total_steps = 500;
    std::uint64_t seed = 0;
    curriculum::Mode curriculum = curriculum::Mode::kNone;
    std::int64_t eval_every = 0;        // 0 disables held-out evaluation
    std::int64_t checkpoint_every = 0;  // 0 writes only the final checkpoint

    void validate() const;
    /// round(warmup_fraction * total_steps)
    std::int64_t warmup_steps() const;
};

/// Linear warmup from 0 to the peak over warmup_steps(), then cosine decay to
/// final_lr_fraction * peak at total_steps.
double lr_at(const TrainConfig &config, std::int64_t step);

template <typename T>
struct MtpLoss {
    NodeId total;
    std::vector<NodeId> per_head;
};

/// Sum over heads 1..active_k of each head's mean cross-entropy on its
/// unmasked positions. `targets[j]` belongs to head j + 1.
template <typename T>
MtpLoss<T> mtp_loss(Graph<T> &graph, std::span<const NodeId> head_logits,
                    std::span<const datapack::HeadTargets> targets, int active_k);

/// Scales all gradients by max_norm / norm when the global L2 norm exceeds
/// max_norm. Returns the norm before clipping.
double clip_grad_norm(Gradients<float> &grads, double max_norm);

struct Moments {
    Tensor<float> m;
    Tensor<float> v;
    std::int64_t updates = 0;  // drives bias correction
};

struct AdamState {
    std::map<std::string, Moments> moments;
    std::int64_t step = 0;
};

/// AdamW with decoupled decay (p -= lr wd p, then the Adam step). Only
/// parameters present in `grads` are touched; bias correction counts each
/// parameter's own updates, so a head that becomes active late starts fresh.
void adamw_step(ParameterMap<float> &params, const Gradients<float> &grads, AdamState &state, double lr,
                const TrainConfig &config);

struct Checkpoint {
    ModelConfig model_config;
    TrainConfig train_config;
    ParameterMap<float> params;
    AdamState optimizer;
    std::int64_t step = 0;  // completed steps
};

/// Little-endian binary: "MTPCKPT1", u32 version, JSON-encoded configs, step,
/// named float32 tensors, optimizer moments, and a trailing FNV-1a checksum
/// of everything before it.
void save_checkpoint(const std::string &path, const Checkpoint &checkpoint);
Checkpoint load_checkpoint(const std::string &path);

struct StepMetrics {
    std::int64_t step = 0;
    double lr = 0;
    int active_k = 0;
    double loss = 0;
    std::vector<double> head_losses;  // active heads only
    double grad_norm = 0;
};

std::string metrics_csv_header(int k_max);
std::string metrics_csv_row(const StepMetrics &m, int k_max);

struct TrainOptions {
    /// If set: logs/metrics.csv, logs/eval.csv and checkpoints/ live here.
    std::string run_dir;
    std::string resume_from;
    /// Stop once this many steps are complete (writing a checkpoint), as if
    /// the run had been interrupted. Negative runs to total_steps.
    std::int64_t stop_after = -1;
    std::vector<datapack::PackedRow> eval_rows;
    std::function<void(const StepMetrics &)> on_step;
};

struct TrainResult {
    Model<float> model;
    AdamState optimizer;
    std::vector<StepMetrics> history;  // steps run by this call
    std::int64_t steps_done = 0;
};

TrainResult train_run(const ModelConfig &model_config, const TrainConfig &train_config,
                      const std::vector<datapack::PackedRow> &rows, const TrainOptions &options = {});

/// Per-head mean cross-entropy of `model` over `rows`, evaluated in batches.
std::vector<double> evaluate_head_losses(const Model<float> &model, const std::vector<datapack::PackedRow> &rows,
                                         int batch_size);

}  // namespace mtp::train
