#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "mtp/cli/cli.hpp"
#include "mtp/cli/run_config.hpp"
#include "mtp/datapack/datapack.hpp"
#include "mtp/decode/decode.hpp"
#include "mtp/evaluate/judge.hpp"
#include "mtp/evaluate/likelihood.hpp"
#include "mtp/evaluate/text_metrics.hpp"
#include "mtp/fixtures/corpus.hpp"
#include "mtp/fixtures/mocks.hpp"
#include "mtp/train/config_io.hpp"
#include "mtp/tokenize/bpe.hpp"

namespace mtp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for problems the operator fixes in the config or on the command
// line; maps to exit code 2.
class UsageError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct Prompt {
    std::string id;
    std::vector<std::int32_t> ids;
    std::string text;
    std::string target;
};

std::string csv_field(std::string s) {
    for (auto &c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = '_';
    }
    return s;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_file(const fs::path &path, const std::string &content) {
    fs::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + path.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path &path) {
    std::istringstream in(read_file(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        rows.push_back(fields);
    }
    return rows;
}

/// Creates the run directory layout and archives the config. A directory
/// that already holds a different config is refused.
void prepare_run_dir(const RunConfig &config, const std::string &command, const std::vector<std::string> &args) {
    const auto archived = config.run_dir / "config.json";
    const auto canonical = config.to_json().dump(2) + "\n";
    if (fs::exists(archived)) {
        if (read_file(archived) != canonical) {
            throw UsageError("run directory " + config.run_dir.string() +
                             " holds a different config.json; use a fresh output.run_dir");
        }
    } else {
        write_file(archived, canonical);
    }
    for (const char *sub : {"checkpoints", "logs", "reports", "data"}) fs::create_directories(config.run_dir / sub);
    // Timestamps live only in this sidecar so every other output is a pure
    // function of config and seed.
    std::ofstream log(config.run_dir / "logs" / "commands.log", std::ios::app);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    log << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << command;
    for (const auto &a : args) log << ' ' << a;
    log << '\n';
}

std::vector<datapack::Document> load_documents(const RunConfig &config) {
    if (config.data.toy_corpus_bytes > 0) {
        std::vector<datapack::Document> docs;
        const auto texts = fixtures::toy_corpus(config.data.toy_corpus_seed, config.data.toy_corpus_bytes);
        for (std::size_t i = 0; i < texts.size(); ++i) docs.push_back({"toy:" + std::to_string(i), texts[i]});
        return docs;
    }
    return datapack::ingest(config.data.paths);
}

/// Deterministic document-level split: a seeded shuffle picks the held-out
/// documents; both halves keep corpus order.
std::pair<std::vector<datapack::Document>, std::vector<datapack::Document>> split_documents(
    const std::vector<datapack::Document> &docs, const RunConfig &config) {
    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = numerics::Rng(config.train.seed).split("eval-split");
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    auto n_eval = static_cast<std::size_t>(config.data.eval_fraction * static_cast<double>(docs.size()));
    if (config.data.eval_fraction > 0 && n_eval == 0 && docs.size() >= 2) n_eval = 1;
    std::vector<bool> held(docs.size(), false);
    for (std::size_t i = 0; i < n_eval; ++i) held[order[i]] = true;
    std::pair<std::vector<datapack::Document>, std::vector<datapack::Document>> out;
    for (std::size_t i = 0; i < docs.size(); ++i) (held[i] ? out.second : out.first).push_back(docs[i]);
    return out;
}

std::unique_ptr<tokenize::Tokenizer> load_tokenizer(const RunConfig &config) {
    if (config.data.tokenizer == "byte") return std::make_unique<tokenize::ByteTokenizer>();
    if (!fs::exists(config.data.vocab_file)) {
        throw std::runtime_error("vocab file " + config.data.vocab_file + " not found; run tokenizer-train first");
    }
    auto tok = std::make_unique<tokenize::BpeTokenizer>(tokenize::BpeVocab::load(config.data.vocab_file));
    if (tok->vocab_size() > config.model.vocab) {
        throw std::runtime_error("vocab file has " + std::to_string(tok->vocab_size()) + " tokens, model.vocab is " +
                                 std::to_string(config.model.vocab));
    }
    return tok;
}

fs::path data_path(const RunConfig &config, const char *name) { return config.run_dir / "data" / name; }

void do_pack(const RunConfig &config, std::ostream &out) {
    const auto tok = load_tokenizer(config);
    const auto [train_docs, eval_docs] = split_documents(load_documents(config), config);
    if (train_docs.empty()) throw std::runtime_error("pack: no training documents");
    const auto pad = tok->pad();
    const auto train_rows = datapack::pack_best_fit(datapack::tokenize_documents(train_docs, *tok), config.model.context, pad);
    datapack::save_packed(data_path(config, "train.pack").string(), train_rows);
    std::vector<datapack::PackedRow> eval_rows;
    if (!eval_docs.empty()) {
        eval_rows = datapack::pack_best_fit(datapack::tokenize_documents(eval_docs, *tok), config.model.context, pad);
    }
    datapack::save_packed(data_path(config, "eval.pack").string(), eval_rows);
    std::string jsonl;
    for (const auto &d : eval_docs) jsonl += json{{"id", d.id}, {"text", d.text}}.dump() + "\n";
    write_file(data_path(config, "eval_docs.jsonl"), jsonl);
    out << "packed " << train_docs.size() << " documents into " << train_rows.size() << " rows (padding "
        << format_double(datapack::padding_fraction(train_rows)) << "), held out " << eval_docs.size() << " documents\n";
}

std::vector<datapack::PackedRow> load_rows(const RunConfig &config, const char *name, std::ostream &out) {
    const auto path = data_path(config, name);
    if (!fs::exists(path)) do_pack(config, out);
    return datapack::load_packed(path.string());
}

std::vector<datapack::Document> eval_documents(const RunConfig &config, std::ostream &out) {
    const auto path = data_path(config, "eval_docs.jsonl");
    if (!fs::exists(path)) do_pack(config, out);
    std::vector<datapack::Document> docs;
    std::istringstream in(read_file(path));
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        const auto doc = json::parse(line);
        docs.push_back({doc.at("id").get<std::string>(), doc.at("text").get<std::string>()});
    }
    return docs;
}

std::shared_ptr<const model::Model<float>> load_model(const RunConfig &config, const std::string &checkpoint) {
    const auto path = checkpoint.empty() ? (config.run_dir / "checkpoints" / "final.ckpt").string() : checkpoint;
    if (!fs::exists(path)) throw std::runtime_error("checkpoint " + path + " not found; run train first");
    auto ckpt = train::load_checkpoint(path);
    return std::make_shared<const model::Model<float>>(model::Model<float>{ckpt.model_config, std::move(ckpt.params)});
}

/// Held-out prompts: the first prompt_tokens tokens (BOS included) of each
/// held-out document long enough to have a continuation; the next
/// new_tokens tokens are the reference continuation.
std::vector<Prompt> eval_prompts(const RunConfig &config, const tokenize::Tokenizer &tok, const std::string &prompts_file,
                                 std::ostream &out) {
    std::vector<Prompt> prompts;
    const auto P = static_cast<std::size_t>(config.eval.prompt_tokens);
    if (!prompts_file.empty()) {
        std::istringstream in(read_file(prompts_file));
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            json doc;
            try {
                doc = json::parse(line);
            } catch (const json::parse_error &e) {
                throw std::runtime_error(prompts_file + ":" + std::to_string(lineno) + ": " + e.what());
            }
            if (!doc.is_object() || !doc.contains("prompt") || !doc["prompt"].is_string()) {
                throw std::runtime_error(prompts_file + ":" + std::to_string(lineno) + ": missing \"prompt\"");
            }
            Prompt p;
            p.id = doc.value("id", "line" + std::to_string(lineno));
            p.text = doc["prompt"].get<std::string>();
            p.target = doc.value("target", "");
            p.ids = tok.encode(p.text, true, false);
            if (p.ids.size() > P) throw std::runtime_error(prompts_file + ":" + std::to_string(lineno) + ": prompt exceeds eval.prompt_tokens");
            prompts.push_back(std::move(p));
        }
        return prompts;
    }
    for (const auto &doc : eval_documents(config, out)) {
        if (static_cast<int>(prompts.size()) == config.eval.num_prompts) break;
        const auto ids = tok.encode(doc.text, true, false);
        if (ids.size() <= P) continue;
        Prompt p;
        p.id = doc.id;
        p.ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(P));
        const auto end = std::min(ids.size(), P + static_cast<std::size_t>(config.eval.new_tokens));
        p.text = tok.decode_lossy(p.ids);
        p.target = tok.decode_lossy(std::span(ids).subspan(P, end - P));
        prompts.push_back(std::move(p));
    }
    if (prompts.empty()) throw std::runtime_error("no held-out document is longer than eval.prompt_tokens");
    return prompts;
}

int cmd_tokenizer_train(const RunConfig &config, std::ostream &out) {
    if (config.data.tokenizer != "bpe") throw UsageError("tokenizer-train: data.tokenizer is \"byte\", which needs no training");
    const auto train_docs = split_documents(load_documents(config), config).first;
    std::vector<std::string> texts;
    for (const auto &d : train_docs) texts.push_back(d.text);
    const auto vocab = tokenize::bpe_train(texts, config.data.bpe_vocab_size);
    write_file(config.data.vocab_file, vocab.serialize());
    out << "trained " << vocab.size() << "-token vocab -> " << config.data.vocab_file << "\n";
    return kExitOk;
}

int cmd_train(const RunConfig &config, const std::string &resume, std::int64_t stop_after, std::ostream &out,
              std::ostream &err) {
    const auto rows = load_rows(config, "train.pack", out);
    train::TrainOptions options;
    options.run_dir = config.run_dir.string();
    options.resume_from = resume;
    options.stop_after = stop_after;
    if (config.train.eval_every > 0) options.eval_rows = load_rows(config, "eval.pack", out);
    options.on_step = [&](const train::StepMetrics &m) {
        if (m.step % 10 == 0 || m.step + 1 == config.train.total_steps) {
            err << "step " << m.step << " loss " << format_double(m.loss) << " lr " << format_double(m.lr)
                << " heads " << m.active_k << "\n";
        }
    };
    const auto result = train::train_run(config.model, config.train, rows, options);
    out << "trained to step " << result.steps_done << "; logs in " << (config.run_dir / "logs").string() << "\n";
    return kExitOk;
}

int cmd_generate(const RunConfig &config, const std::string &checkpoint, const std::string &prompts_file, int k_used,
                 std::ostream &out) {
    const auto tok = load_tokenizer(config);
    model::TransformerLM lm(load_model(config, checkpoint));
    std::string jsonl;
    for (const auto &p : eval_prompts(config, *tok, prompts_file, out)) {
        const auto trace = k_used > 0 ? decode::speculative_generate(lm, p.ids, config.eval.new_tokens, k_used)
                                      : decode::greedy_generate(lm, p.ids, config.eval.new_tokens);
        jsonl += json{{"id", p.id},
                      {"prompt", p.text},
                      {"continuation", tok->decode_lossy(trace.generated)},
                      {"target", p.target},
                      {"forward_passes", trace.forward_passes}}
                     .dump() +
                 "\n";
    }
    const auto path = config.run_dir / "reports" / "completions.jsonl";
    write_file(path, jsonl);
    out << "wrote " << path.string() << "\n";
    return kExitOk;
}

int cmd_spec_bench(const RunConfig &config, const std::string &checkpoint, const std::string &mock,
                   const std::string &table, const std::string &prompts_file, std::ostream &out) {
    const auto tok = load_tokenizer(config);
    std::unique_ptr<model::LanguageModel> lm;
    if (!mock.empty()) {
        fixtures::MockKind kind;
        try {
            kind = fixtures::parse_mock_kind(mock);
        } catch (const fixtures::FixtureError &e) {
            throw UsageError(e.what());
        }
        lm = fixtures::make_mock(kind, config.model.k_max, config.model.vocab, table);
    } else {
        lm = std::make_unique<model::TransformerLM>(load_model(config, checkpoint));
    }
    const int K = lm->k_max();
    const auto prompts = eval_prompts(config, *tok, prompts_file, out);
    std::string traces = decode::trace_csv_header(K);
    std::string summary = "k_used,prompts,tokens,ntp_passes,mtp_passes,speedup";
    for (int j = 1; j <= K; ++j) summary += ",accept_share_head_" + std::to_string(j);
    summary += "\n";

    std::vector<decode::GenerationTrace> greedy;
    for (const auto &p : prompts) {
        greedy.push_back(decode::greedy_generate(*lm, p.ids, config.eval.new_tokens));
        traces += decode::trace_csv_row(csv_field(p.id), "greedy", greedy.back(), K);
    }
    out << "k_used  speedup\n";
    for (int k : config.bench_k_values()) {
        if (k > K) throw UsageError("eval.k_used " + std::to_string(k) + " exceeds the model's " + std::to_string(K) + " heads");
        std::vector<decode::GenerationTrace> spec;
        for (std::size_t i = 0; i < prompts.size(); ++i) {
            spec.push_back(decode::speculative_generate(*lm, prompts[i].ids, config.eval.new_tokens, k));
            if (spec.back().generated != greedy[i].generated) {
                throw std::runtime_error("speculative output diverged from greedy on prompt " + prompts[i].id);
            }
            traces += decode::trace_csv_row(csv_field(prompts[i].id), "speculative", spec.back(), K);
        }
        const auto r = decode::speedup_report(greedy, spec);
        summary += std::to_string(k) + "," + std::to_string(prompts.size()) + "," + std::to_string(r.tokens) + "," +
                   std::to_string(r.baseline_passes) + "," + std::to_string(r.speculative_passes) + "," +
                   format_double(r.speedup);
        for (int j = 0; j < K; ++j) {
            summary += "," + format_double(j < static_cast<int>(r.accept_shares.size()) ? r.accept_shares[static_cast<std::size_t>(j)] : 0.0);
        }
        summary += "\n";
        out << std::setw(6) << k << "  " << format_double(r.speedup) << "\n";
    }
    write_file(config.run_dir / "reports" / "spec_bench_traces.csv", traces);
    write_file(config.run_dir / "reports" / "spec_bench.csv", summary);
    return kExitOk;
}

int cmd_eval_bpb(const RunConfig &config, const std::string &checkpoint, const std::vector<std::string> &texts,
                 std::ostream &out) {
    const auto tok = load_tokenizer(config);
    model::TransformerLM lm(load_model(config, checkpoint));
    const auto docs = texts.empty() ? eval_documents(config, out) : datapack::ingest(texts);
    std::string csv = evaluate::metric_csv_header();
    double nats = 0.0;
    std::int64_t bytes = 0;
    for (const auto &d : docs) {
        const auto r = evaluate::bits_per_byte(lm, {d.text}, *tok);
        nats += r.nats;
        bytes += r.bytes;
        csv += evaluate::metric_csv_row(csv_field(d.id), "bpb", r.bpb);
    }
    if (bytes == 0) throw std::runtime_error("eval-bpb: no text to score");
    const double bpb = nats / (std::log(2.0) * static_cast<double>(bytes));
    csv += evaluate::metric_csv_row("ALL", "bpb", bpb);
    write_file(config.run_dir / "reports" / "bpb.csv", csv);
    out << "bpb " << format_double(bpb) << " over " << docs.size() << " documents\n";
    return kExitOk;
}

int cmd_eval_text(const RunConfig &config, const std::string &completions, std::ostream &out, std::ostream &err) {
    const auto path = completions.empty() ? config.run_dir / "reports" / "completions.jsonl" : fs::path(completions);
    std::istringstream in(read_file(path));
    std::string line, csv = evaluate::metric_csv_header();
    std::map<std::string, std::pair<double, int>> totals;
    auto record = [&](const std::string &id, const std::string &metric, double v) {
        csv += evaluate::metric_csv_row(csv_field(id), metric, v);
        totals[metric].first += v;
        ++totals[metric].second;
    };
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error &e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        const auto id = doc.value("id", "line" + std::to_string(lineno));
        const auto cand = doc.value("continuation", "");
        const auto target = doc.value("target", "");
        if (config.eval.bleu) {
            const auto b = evaluate::bleu(cand, target);
            if (b.empty_candidate) err << "warning: " << id << ": empty continuation, BLEU set to 0\n";
            record(id, "bleu", b.score);
        }
        if (config.eval.rouge_l) {
            const auto r = evaluate::rouge_l(cand, target);
            if (r.both_empty) err << "warning: " << id << ": continuation and target are both empty\n";
            record(id, "rouge_l_precision", r.precision);
            record(id, "rouge_l_recall", r.recall);
            record(id, "rouge_l_f1", r.f1);
        }
        if (config.eval.ttr) {
            try {
                record(id, "ttr", evaluate::ttr(cand));
            } catch (const evaluate::EvalError &) {
                err << "warning: " << id << ": continuation has no words, TTR skipped\n";
            }
        }
        if (config.eval.g_eval) {
            const auto s = evaluate::g_eval(config.eval.judge, doc.value("prompt", ""), cand, target);
            record(id, s.weighted ? "g_eval" : "g_eval_unweighted", s.score);
        }
    }
    if (totals.empty()) throw std::runtime_error("eval-text: nothing scored from " + path.string());
    for (const auto &[metric, t] : totals) {
        csv += evaluate::metric_csv_row("ALL", metric, t.first / t.second);
        out << metric << " " << format_double(t.first / t.second) << "\n";
    }
    write_file(config.run_dir / "reports" / "text_metrics.csv", csv);
    return kExitOk;
}

struct RunSummary {
    std::string name;
    std::string tokens, head_kind, curriculum;
    int k_max = 1;
    std::string fingerprint;
    std::map<std::string, double> values;
};

std::map<std::string, double> all_rows(const fs::path &path) {
    std::map<std::string, double> out;
    if (!fs::exists(path)) return out;
    for (const auto &row : read_csv(path)) {
        if (row.size() == 3 && row[0] == "ALL") out[row[1]] = std::stod(row[2]);
    }
    return out;
}

int cmd_report(const std::vector<std::string> &runs, const std::string &out_dir, std::ostream &out) {
    std::vector<RunSummary> rows;
    for (const auto &run : runs) {
        const fs::path dir(run);
        if (!fs::exists(dir / "config.json")) throw UsageError(run + ": not a run directory (no config.json)");
        const auto config = load_run_config(dir / "config.json");
        RunSummary s;
        s.name = dir.filename().string();
        s.tokens = config.data.tokenizer;
        s.k_max = config.model.k_max;
        s.head_kind = model::head_kind_name(config.model.head_kind);
        s.curriculum = curriculum::mode_name(config.train.curriculum);
        s.fingerprint = config.fingerprint();
        if (fs::exists(dir / "logs" / "metrics.csv")) {
            const auto csv = read_csv(dir / "logs" / "metrics.csv");
            if (csv.size() > 1) s.values["final_loss"] = std::stod(csv.back().at(3));
        }
        if (auto bpb = all_rows(dir / "reports" / "bpb.csv"); bpb.count("bpb")) s.values["bpb"] = bpb["bpb"];
        for (const auto &[metric, v] : all_rows(dir / "reports" / "text_metrics.csv")) {
            if (metric == "bleu" || metric == "rouge_l_f1" || metric == "ttr" || metric.rfind("g_eval", 0) == 0) s.values[metric] = v;
        }
        if (fs::exists(dir / "reports" / "spec_bench.csv")) {
            const auto csv = read_csv(dir / "reports" / "spec_bench.csv");
            // Largest k_used is the headline speedup.
            for (std::size_t i = 1; i < csv.size(); ++i) s.values["speedup"] = std::stod(csv[i].at(5));
        }
        rows.push_back(std::move(s));
    }
    if (rows.empty()) throw UsageError("report: no runs given");
    std::size_t base = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].k_max == 1) {
            base = i;
            break;
        }
    }
    const std::vector<std::string> metrics{"final_loss", "bpb", "speedup", "bleu", "rouge_l_f1", "ttr", "g_eval"};
    std::string csv = "run,tokens,heads,head_kind,curriculum,fingerprint";
    std::string md = "| Run | Tokens | Heads | Head kind | Curriculum |";
    std::string rule = "|---|---|---|---|---|";
    for (const auto &m : metrics) {
        csv += "," + m + "," + m + "_rel_pct";
        md += " " + m + " |";
        rule += "---|";
    }
    csv += "\n";
    md += "\n" + rule + "\n";
    for (const auto &s : rows) {
        csv += csv_field(s.name) + "," + s.tokens + "," + std::to_string(s.k_max) + "," + s.head_kind + "," + s.curriculum +
               "," + s.fingerprint;
        md += "| " + s.name + " | " + s.tokens + " | " + std::to_string(s.k_max) + " | " + s.head_kind + " | " +
              s.curriculum + " |";
        for (const auto &m : metrics) {
            auto it = s.values.find(m);
            auto bt = rows[base].values.find(m);
            if (it == s.values.end()) {
                csv += ",,";
                md += " n/a |";
                continue;
            }
            std::string rel;
            if (bt != rows[base].values.end() && bt->second != 0.0) {
                rel = format_double(100.0 * (it->second - bt->second) / std::abs(bt->second));
            }
            csv += "," + format_double(it->second) + "," + rel;
            md += " " + format_double(it->second) + (rel.empty() ? "" : " (" + rel + "%)") + " |";
        }
        csv += "\n";
        md += "\n";
    }
    md = "# Run comparison\n\nRelative change in parentheses is against " + rows[base].name + ".\n\n" + md;
    write_file(fs::path(out_dir) / "report.csv", csv);
    write_file(fs::path(out_dir) / "report.md", md);
    out << md;
    return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Multi-token prediction: data, training, speculative decoding and evaluation", "mtp"};
    app.require_subcommand(1);
    std::string config_path, checkpoint, resume, prompts_file, mock, table, completions, out_dir;
    std::int64_t stop_after = -1;
    int k_used = 0;
    std::vector<std::string> texts, runs;

    auto with_config = [&](CLI::App *sub) {
        sub->add_option("-c,--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
        return sub;
    };
    with_config(app.add_subcommand("tokenizer-train", "Train a BPE vocabulary on the training split"));
    with_config(app.add_subcommand("pack", "Tokenize, split and pack the corpus into the run directory"));
    auto *train_cmd = with_config(app.add_subcommand("train", "Train, writing checkpoints and logs/metrics.csv"));
    train_cmd->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
    train_cmd->add_option("--stop-after", stop_after, "Stop after this many completed steps");
    auto *gen = with_config(app.add_subcommand("generate", "Write completions for held-out prompts"));
    gen->add_option("--checkpoint", checkpoint, "Default: <run_dir>/checkpoints/final.ckpt");
    gen->add_option("--prompts", prompts_file, "JSONL with id, prompt and optional target")->check(CLI::ExistingFile);
    gen->add_option("--k-used", k_used, "Decode speculatively with this many heads (0: greedy)");
    auto *bench = with_config(app.add_subcommand("spec-bench", "Greedy vs speculative forward-pass counts"));
    bench->add_option("--checkpoint", checkpoint, "Default: <run_dir>/checkpoints/final.ckpt");
    bench->add_option("--mock", mock, "Use a scripted model: all-accept, never-accept or table-driven");
    bench->add_option("--table", table, "Transcript for the table-driven mock")->check(CLI::ExistingFile);
    bench->add_option("--prompts", prompts_file, "JSONL with id, prompt and optional target")->check(CLI::ExistingFile);
    auto *bpb = with_config(app.add_subcommand("eval-bpb", "Bits per byte on held-out text"));
    bpb->add_option("--checkpoint", checkpoint, "Default: <run_dir>/checkpoints/final.ckpt");
    bpb->add_option("--texts", texts, "Files or directories to score instead of the held-out split");
    auto *text = with_config(app.add_subcommand("eval-text", "BLEU, ROUGE-L, TTR and optional G-Eval of completions"));
    text->add_option("--completions", completions, "Default: <run_dir>/reports/completions.jsonl");
    auto *report = app.add_subcommand("report", "Compare runs in one markdown table and CSV");
    report->add_option("--runs", runs, "Run directories")->required();
    report->add_option("--out", out_dir, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    const auto *sub = app.get_subcommands().front();
    const auto name = sub->get_name();

    try {
        if (name == "report") return cmd_report(runs, out_dir, out);
        if (!mock.empty() && !checkpoint.empty()) throw UsageError("give either --mock or --checkpoint");
        if (mock == "table-driven" && table.empty()) throw UsageError("--mock table-driven needs --table");
        const auto config = load_run_config(config_path);
        prepare_run_dir(config, name, args);
        if (name == "tokenizer-train") return cmd_tokenizer_train(config, out);
        if (name == "pack") {
            do_pack(config, out);
            return kExitOk;
        }
        if (name == "train") return cmd_train(config, resume, stop_after, out, err);
        if (name == "generate" && (k_used < 0 || k_used > config.model.k_max)) {
            throw UsageError("--k-used must be in [0, " + std::to_string(config.model.k_max) + "]");
        }
        if (name == "generate") return cmd_generate(config, checkpoint, prompts_file, k_used, out);
        if (name == "spec-bench") return cmd_spec_bench(config, checkpoint, mock, table, prompts_file, out);
        if (name == "eval-bpb") return cmd_eval_bpb(config, checkpoint, texts, out);
        if (name == "eval-text") return cmd_eval_text(config, completions, out, err);
    } catch (const train::ConfigError &e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const UsageError &e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace mtp::cli
