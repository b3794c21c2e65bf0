#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtp/evaluate/judge.hpp"
#include "mtp/model/model.hpp"
#include "mtp/train/train.hpp"

namespace mtp::cli {

struct DataConfig {
    /// Files or directories; see datapack::ingest. Ignored when toy_corpus_bytes > 0.
    std::vector<std::string> paths;
    std::uint64_t toy_corpus_seed = 0;
    std::size_t toy_corpus_bytes = 0;
    std::string tokenizer = "byte";  // "byte" or "bpe"
    std::string vocab_file;          // bpe only; default <run_dir>/tokenizer.vocab
    int bpe_vocab_size = 1024;
    double eval_fraction = 0.05;
};

struct EvalConfig {
    bool bpb = true;
    bool bleu = true;
    bool rouge_l = true;
    bool ttr = true;
    bool g_eval = false;
    evaluate::JudgeConfig judge;
    int num_prompts = 20;
    int prompt_tokens = 64;
    int new_tokens = 64;
    std::vector<int> k_used;  // empty: 2..k_max
};

struct RunConfig {
    DataConfig data;
    model::ModelConfig model;
    train::TrainConfig train;
    EvalConfig eval;
    std::filesystem::path run_dir;

    /// Canonical form with every default filled in; archived as
    /// <run_dir>/config.json. Paths are stored as resolved.
    nlohmann::json to_json() const;
    /// FNV-1a of the canonical dump, as 16 hex digits.
    std::string fingerprint() const;
    std::vector<int> bench_k_values() const;
};

/// Reads and validates a config document. Relative paths resolve against
/// base_dir. Throws train::ConfigError naming the offending key.
RunConfig parse_run_config(const nlohmann::json &doc, const std::filesystem::path &base_dir);
RunConfig load_run_config(const std::filesystem::path &path);

}  // namespace mtp::cli
