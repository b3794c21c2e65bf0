#include "mtp/cli/run_config.hpp"

#include <cstdio>
#include <fstream>

#include "mtp/curriculum/curriculum.hpp"
#include "mtp/train/config_io.hpp"

namespace mtp::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using train::ConfigError;
using train::read_field;
using train::require_keys;

namespace {

std::string resolve(const fs::path &base, const std::string &p) {
    if (p.empty()) return p;
    const fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

evaluate::JudgeConfig judge_from_json(const json &doc, const std::string &where) {
    require_keys(doc, {"base_url", "model", "api_key_env", "prompt_template", "timeout_seconds", "top_logprobs"}, where);
    evaluate::JudgeConfig j;
    read_field(doc, "base_url", j.base_url, where);
    read_field(doc, "model", j.model, where);
    read_field(doc, "api_key_env", j.api_key_env, where);
    read_field(doc, "prompt_template", j.prompt_template, where);
    read_field(doc, "timeout_seconds", j.timeout_seconds, where);
    read_field(doc, "top_logprobs", j.top_logprobs, where);
    return j;
}

}  // namespace

json RunConfig::to_json() const {
    json d = {{"paths", data.paths},
              {"tokenizer", data.tokenizer},
              {"vocab_file", data.vocab_file},
              {"bpe_vocab_size", data.bpe_vocab_size},
              {"eval_fraction", data.eval_fraction},
              {"context", model.context}};
    if (data.toy_corpus_bytes > 0) d["toy_corpus"] = {{"seed", data.toy_corpus_seed}, {"bytes", data.toy_corpus_bytes}};
    json judge = {{"base_url", eval.judge.base_url},
                  {"model", eval.judge.model},
                  {"api_key_env", eval.judge.api_key_env},
                  {"prompt_template", eval.judge.prompt_template},
                  {"timeout_seconds", eval.judge.timeout_seconds},
                  {"top_logprobs", eval.judge.top_logprobs}};
    json e = {{"bpb", eval.bpb},
              {"bleu", eval.bleu},
              {"rouge_l", eval.rouge_l},
              {"ttr", eval.ttr},
              {"g_eval", eval.g_eval},
              {"judge", judge},
              {"num_prompts", eval.num_prompts},
              {"prompt_tokens", eval.prompt_tokens},
              {"new_tokens", eval.new_tokens},
              {"k_used", eval.k_used}};
    return {{"data", d},
            {"model", train::model_config_to_json(model)},
            {"train", train::train_config_to_json(train)},
            {"eval", e},
            {"output", {{"run_dir", run_dir.string()}}}};
}

std::string RunConfig::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : to_json().dump()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<int> RunConfig::bench_k_values() const {
    if (!eval.k_used.empty()) return eval.k_used;
    std::vector<int> ks;
    for (int k = 2; k <= model.k_max; ++k) ks.push_back(k);
    if (ks.empty()) ks.push_back(1);
    return ks;
}

RunConfig parse_run_config(const json &doc, const fs::path &base_dir) {
    require_keys(doc, {"data", "model", "train", "eval", "output"}, "config");
    RunConfig c;
    const json empty = json::object();
    const auto &data = doc.contains("data") ? doc["data"] : empty;
    require_keys(data, {"paths", "toy_corpus", "tokenizer", "vocab_file", "bpe_vocab_size", "eval_fraction", "context"},
                 "data");
    if (auto it = data.find("paths"); it != data.end()) {
        if (!it->is_array()) throw ConfigError("data.paths: expected a list of strings");
        for (const auto &p : *it) {
            if (!p.is_string()) throw ConfigError("data.paths: expected a list of strings");
            c.data.paths.push_back(resolve(base_dir, p.get<std::string>()));
        }
    }
    if (auto it = data.find("toy_corpus"); it != data.end()) {
        require_keys(*it, {"seed", "bytes"}, "data.toy_corpus");
        read_field(*it, "seed", c.data.toy_corpus_seed, "data.toy_corpus");
        read_field(*it, "bytes", c.data.toy_corpus_bytes, "data.toy_corpus");
        if (c.data.toy_corpus_bytes == 0) throw ConfigError("data.toy_corpus.bytes: must be positive");
    }
    read_field(data, "tokenizer", c.data.tokenizer, "data");
    read_field(data, "vocab_file", c.data.vocab_file, "data");
    read_field(data, "bpe_vocab_size", c.data.bpe_vocab_size, "data");
    read_field(data, "eval_fraction", c.data.eval_fraction, "data");
    if (c.data.tokenizer != "byte" && c.data.tokenizer != "bpe") {
        throw ConfigError("data.tokenizer: expected \"byte\" or \"bpe\", got \"" + c.data.tokenizer + "\"");
    }
    if (c.data.paths.empty() && c.data.toy_corpus_bytes == 0) {
        throw ConfigError("data: give either paths or toy_corpus");
    }
    if (c.data.bpe_vocab_size <= 259) throw ConfigError("data.bpe_vocab_size: must exceed 259");
    if (!(c.data.eval_fraction >= 0.0 && c.data.eval_fraction <= 0.5)) {
        throw ConfigError("data.eval_fraction: must be in [0, 0.5]");
    }
    c.data.vocab_file = resolve(base_dir, c.data.vocab_file);

    // The model section may leave vocab and context to the data section.
    json model_doc = doc.contains("model") ? doc["model"] : empty;
    if (!model_doc.is_object()) throw ConfigError("model: expected an object");
    const int tokenizer_vocab = c.data.tokenizer == "byte" ? 320 : c.data.bpe_vocab_size;
    if (!model_doc.contains("vocab")) model_doc["vocab"] = tokenizer_vocab;
    if (auto it = data.find("context"); it != data.end()) {
        if (!it->is_number_integer()) throw ConfigError("data.context: expected an integer");
        if (model_doc.contains("context") && model_doc["context"] != *it) {
            throw ConfigError("data.context and model.context disagree");
        }
        model_doc["context"] = *it;
    }
    c.model = train::model_config_from_json(model_doc, "model");
    if (c.model.vocab < tokenizer_vocab) {
        throw ConfigError("model.vocab: " + std::to_string(c.model.vocab) + " is smaller than the " + c.data.tokenizer +
                          " tokenizer's " + std::to_string(tokenizer_vocab));
    }

    c.train = train::train_config_from_json(doc.contains("train") ? doc["train"] : empty, "train");
    try {
        curriculum::CurriculumSpec{c.train.curriculum, c.model.k_max, c.train.total_steps}.validate();
    } catch (const curriculum::CurriculumError &e) {
        throw ConfigError(std::string("train.curriculum: ") + e.what());
    }

    const auto &ev = doc.contains("eval") ? doc["eval"] : empty;
    require_keys(ev, {"bpb", "bleu", "rouge_l", "ttr", "g_eval", "judge", "num_prompts", "prompt_tokens", "new_tokens", "k_used"},
                 "eval");
    read_field(ev, "bpb", c.eval.bpb, "eval");
    read_field(ev, "bleu", c.eval.bleu, "eval");
    read_field(ev, "rouge_l", c.eval.rouge_l, "eval");
    read_field(ev, "ttr", c.eval.ttr, "eval");
    read_field(ev, "g_eval", c.eval.g_eval, "eval");
    read_field(ev, "num_prompts", c.eval.num_prompts, "eval");
    read_field(ev, "prompt_tokens", c.eval.prompt_tokens, "eval");
    read_field(ev, "new_tokens", c.eval.new_tokens, "eval");
    if (auto it = ev.find("judge"); it != ev.end()) c.eval.judge = judge_from_json(*it, "eval.judge");
    if (auto it = ev.find("k_used"); it != ev.end()) {
        if (!it->is_array()) throw ConfigError("eval.k_used: expected a list of integers");
        for (const auto &k : *it) {
            if (!k.is_number_integer()) throw ConfigError("eval.k_used: expected a list of integers");
            c.eval.k_used.push_back(k.get<int>());
        }
    }
    if (c.eval.num_prompts < 1 || c.eval.prompt_tokens < 1 || c.eval.new_tokens < 1) {
        throw ConfigError("eval: num_prompts, prompt_tokens and new_tokens must be positive");
    }
    int max_k = 1;
    for (int k : c.bench_k_values()) {
        if (k < 1 || k > c.model.k_max) {
            throw ConfigError("eval.k_used: " + std::to_string(k) + " outside [1, " + std::to_string(c.model.k_max) + "]");
        }
        max_k = std::max(max_k, k);
    }
    if (c.eval.prompt_tokens + c.eval.new_tokens + max_k > c.model.context) {
        throw ConfigError("eval: prompt_tokens + new_tokens + k_used must fit in the context (" +
                          std::to_string(c.model.context) + ")");
    }
    if (c.eval.g_eval) {
        try {
            c.eval.judge.validate();
        } catch (const evaluate::JudgeError &e) {
            throw ConfigError(std::string("eval.") + e.what());
        }
    }

    const auto &out = doc.contains("output") ? doc["output"] : empty;
    require_keys(out, {"run_dir"}, "output");
    std::string run_dir;
    read_field(out, "run_dir", run_dir, "output");
    if (run_dir.empty()) throw ConfigError("output.run_dir: required");
    c.run_dir = resolve(base_dir, run_dir);
    if (c.data.tokenizer == "bpe" && c.data.vocab_file.empty()) c.data.vocab_file = (c.run_dir / "tokenizer.vocab").string();
    return c;
}

RunConfig load_run_config(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(doc, fs::absolute(path).parent_path());
}

}  // namespace mtp::cli
