// Acceptance runner: one criterion per invocation, one PASS/FAIL line.
//
//   acceptance --criterion N [--work-dir DIR]
//
// Criteria 6, 7 and 9 drive the `mtp` command pipeline in-process and keep
// their run directories under DIR; 7 benchmarks the static and reverse
// models trained by 6.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mtp/cli/cli.hpp"
#include "mtp/curriculum/curriculum.hpp"
#include "mtp/decode/decode.hpp"
#include "mtp/evaluate/likelihood.hpp"
#include "mtp/evaluate/text_metrics.hpp"
#include "mtp/fixtures/corpus.hpp"
#include "mtp/fixtures/exactness.hpp"
#include "mtp/fixtures/mocks.hpp"
#include "mtp/tokenize/tokenizer.hpp"
#include "oracles/cross_entropy.hpp"
#include "oracles/metric_cases.hpp"
#include "support.hpp"

using namespace mtp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char *pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path &p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
        rows.push_back(f);
    }
    return rows;
}

// ---------------------------------------------------------------- pipeline

/// Runs one `mtp` subcommand; a nonzero exit aborts the criterion.
void mtp_cmd(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run_command(args, out, err);
    if (code != cli::kExitOk) {
        std::string joined;
        for (const auto &a : args) joined += " " + a;
        throw std::runtime_error("mtp" + joined + " exited " + std::to_string(code) + ": " + err.str());
    }
}

/// The toy setup: byte-level, d=128, l=4, k_max=4, C=256, 500 steps on a
/// ~1 MB templated corpus.
json toy_config(const fs::path &run_dir, const std::string &curriculum, int k_max, std::int64_t steps) {
    return {
        {"data", {{"toy_corpus", {{"seed", 0}, {"bytes", 1000000}}}, {"eval_fraction", 0.02}, {"context", 256}}},
        {"model", {{"d_model", 128}, {"n_layers", 4}, {"n_heads", 4}, {"k_max", k_max}, {"head_kind", "linear"}}},
        {"train", {{"total_steps", steps}, {"batch_size", 4}, {"seed", 0}, {"curriculum", curriculum}}},
        {"eval", {{"num_prompts", 20}, {"prompt_tokens", 64}, {"new_tokens", 128}}},
        {"output", {{"run_dir", run_dir.string()}}},
    };
}

std::string write_config(const fs::path &work, const std::string &name, const json &doc) {
    fs::create_directories(work);
    const auto path = work / (name + ".json");
    std::ofstream(path) << doc.dump(2) << "\n";
    return path.string();
}

double all_row(const fs::path &csv, const std::string &metric) {
    for (const auto &row : read_csv(csv)) {
        if (row.size() == 3 && row[0] == "ALL" && row[1] == metric) return std::stod(row[2]);
    }
    throw std::runtime_error("no ALL," + metric + " row in " + csv.string());
}

/// k_used -> speedup from reports/spec_bench.csv.
std::map<int, double> bench_speedups(const fs::path &run_dir) {
    std::map<int, double> out;
    const auto rows = read_csv(run_dir / "reports" / "spec_bench.csv");
    for (std::size_t i = 1; i < rows.size(); ++i) out[std::stoi(rows[i][0])] = std::stod(rows[i][5]);
    return out;
}

// ---------------------------------------------------------------- criteria

Outcome curriculum_exactness(const fs::path &) {
    using curriculum::CurriculumSpec;
    using curriculum::Mode;
    std::int64_t checks = 0, mismatches = 0, boundary_errors = 0, start_errors = 0, monotone_errors = 0;
    for (int k = 1; k <= 8; ++k) {
        for (std::int64_t S = k; S <= 10000; ++S) {
            const CurriculumSpec none{Mode::kNone, k, S}, fwd{Mode::kForward, k, S}, rev{Mode::kReverse, k, S};
            // Progress p = s / S selects phase q = floor(p k); forward runs
            // q + 1 heads, reverse k - q. Phase q ends at the first step with
            // s k >= (q + 1) S.
            std::int64_t s = 0;
            for (int q = 0; q < k; ++q) {
                const std::int64_t end = ((q + 1) * S + k - 1) / k;
                if (end * k < (q + 1) * S || (end > 0 && (end - 1) * k >= (q + 1) * S)) ++boundary_errors;
                const int want_fwd = q + 1, want_rev = k - q;
                for (; s < end; ++s) {
                    mismatches += (curriculum::active_heads(none, s) != k) +
                                  (curriculum::active_heads(fwd, s) != want_fwd) +
                                  (curriculum::active_heads(rev, s) != want_rev);
                }
                if (end < S) {
                    monotone_errors += curriculum::active_heads(fwd, end) < curriculum::active_heads(fwd, end - 1);
                    monotone_errors += curriculum::active_heads(rev, end) > curriculum::active_heads(rev, end - 1);
                }
            }
            checks += 3 * S;
            start_errors += (curriculum::active_heads(fwd, 0) != 1) + (curriculum::active_heads(rev, 0) != k);
        }
    }
    Outcome o;
    o.pass = mismatches == 0 && boundary_errors == 0 && start_errors == 0 && monotone_errors == 0;
    o.detail = std::to_string(checks) + " (mode, k_max, S, step) checks, " + std::to_string(mismatches) +
               " mismatches, " + std::to_string(start_errors) + " bad start values, " +
               std::to_string(monotone_errors) + " monotonicity violations";
    return o;
}

Outcome loss_reduction(const fs::path &) {
    numerics::Rng rng(2024);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int rows = 1 + static_cast<int>(rng.below(8)), V = 2 + static_cast<int>(rng.below(300));
        std::vector<double> logits(static_cast<std::size_t>(rows * V));
        for (auto &x : logits) x = rng.normal() * 4;
        datapack::HeadTargets t;
        for (int r = 0; r < rows; ++r) {
            t.targets.push_back(static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(V))));
            t.mask.push_back(r == 0 || rng.below(4) != 0);
            t.active += t.mask.back();
        }
        numerics::Graph<double> g;
        const std::vector<numerics::NodeId> heads{g.input(numerics::Tensor<double>({rows, V}, logits))};
        const std::vector<datapack::HeadTargets> targets{t};
        const double got = g.value(train::mtp_loss(g, heads, targets, 1).total).item();
        const double want = oracles::reference_ce(logits, V, t.targets, t.mask);
        worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
    }

    double uniform_err = 0;
    for (int V : {2, 13, 256, 320, 4096}) {
        for (int k = 1; k <= 8; ++k) {
            numerics::Graph<double> g;
            std::vector<numerics::NodeId> heads;
            std::vector<datapack::HeadTargets> targets;
            for (int j = 0; j < k; ++j) {
                const int rows = 3;
                // Any constant row is uniform; vary the constant per head.
                heads.push_back(g.input(numerics::Tensor<double>({rows, V}, std::vector<double>(static_cast<std::size_t>(rows * V), 1.5 * j - 2))));
                datapack::HeadTargets t;
                for (int r = 0; r < rows; ++r) t.targets.push_back((r * 7 + j) % V);
                t.mask.assign(rows, 1);
                t.active = rows;
                targets.push_back(t);
            }
            const double got = g.value(train::mtp_loss(g, heads, targets, k).total).item();
            uniform_err = std::max(uniform_err, std::abs(got - k * std::log(static_cast<double>(V))));
        }
    }
    Outcome o;
    o.pass = worst <= 1e-12 && uniform_err < 1e-6;
    o.detail = "max rel. error vs cross-entropy oracle " + fmt("%.3g", worst) + " over 1000 cases (bound 1e-12); uniform max |loss - k ln V| " +
               fmt("%.3g", uniform_err) + " (bound 1e-6)";
    return o;
}

Outcome gradient_correctness(const fs::path &) {
    Outcome o;
    for (auto kind : {model::HeadKind::kLinear, model::HeadKind::kTransformer}) {
        const auto config = testing::tiny_config(kind, 3);
        const auto report = testing::check_model_gradients(config, 21, 6, 1e-5);
        o.pass = o.pass && report.passed;
        o.detail += std::string(o.detail.empty() ? "" : "; ") + model::head_kind_name(kind) + " heads (l=" +
                    std::to_string(config.n_layers) + "): max rel. error " + fmt("%.3g", report.max_rel_error()) +
                    " over " + std::to_string(report.entries.size()) + " tensors";
    }
    o.detail += " (tolerance 1e-5, 64-bit)";
    return o;
}

Outcome speculative_exactness(const fs::path &) {
    const auto table = fixtures::exhaustive_table_exactness(4, 8, 4);

    // A small byte-level model, once at init and once after a short run on
    // the toy corpus, so drafts are sometimes accepted.
    model::ModelConfig config;
    config.vocab = 320;
    config.d_model = 32;
    config.n_layers = 2;
    config.n_heads = 2;
    config.context = 64;
    config.k_max = 4;
    const auto docs = fixtures::toy_corpus(5, 60000);
    std::vector<std::vector<std::int32_t>> seqs;
    for (const auto &d : docs) seqs.push_back(tokenize::byte_encode(d, true, true));
    const auto rows = datapack::pack_best_fit(seqs, config.context, tokenize::ByteVocab::kPad);
    train::TrainConfig tc;
    tc.total_steps = 150;
    tc.peak_lr = 3e-3;
    tc.batch_size = 8;
    tc.seed = 5;
    const model::TransformerLM trained(std::make_shared<const model::Model<float>>(train::train_run(config, tc, rows).model));
    const model::TransformerLM fresh(std::make_shared<const model::Model<float>>(model::init_model<float>(config, 6)));

    // Random prompts: BOS plus a random slice of held-out-style text.
    const auto prompt_docs = fixtures::toy_corpus(77, 20000);
    numerics::Rng rng(77);
    std::vector<std::vector<std::int32_t>> prompts;
    while (prompts.size() < 100) {
        const auto &d = prompt_docs[rng.below(prompt_docs.size())];
        const auto start = rng.below(d.size());
        const auto len = 1 + rng.below(std::min<std::uint64_t>(24, d.size() - start));
        prompts.push_back(tokenize::byte_encode(d.substr(start, len), true, false));
    }
    const int n_tokens = 24;
    const auto a = fixtures::check_exactness(fresh, prompts, n_tokens, {2, 3, 4});
    const auto b = fixtures::check_exactness(trained, prompts, n_tokens, {2, 3, 4});

    Outcome o;
    o.pass = table.mismatches == 0 && a.mismatches == 0 && b.mismatches == 0;
    o.detail = "table mocks: " + std::to_string(table.mismatches) + "/" + std::to_string(table.runs) +
               " mismatches; random-init model: " + std::to_string(a.mismatches) + "/" + std::to_string(a.runs) +
               "; trained model: " + std::to_string(b.mismatches) + "/" + std::to_string(b.runs);
    for (const auto *r : {&table, &a, &b}) {
        if (!r->first_mismatch.empty()) o.detail += "; first: " + r->first_mismatch;
    }
    return o;
}

Outcome pass_count_mechanics(const fs::path &) {
    const int k = 4, vocab = 16;
    const auto all = fixtures::MockModel::rule(fixtures::MockKind::kAllAccept, k, vocab);
    const auto never = fixtures::MockModel::rule(fixtures::MockKind::kNeverAccept, k, vocab);
    const std::vector<std::int32_t> prompt{3, 1, 4};

    int exact = 0, total = 0;
    std::string first_off;
    double max_share_err = 0, never_speedup_err = 0, speedup_at_64 = 0;
    for (int n = 1; n <= 64; ++n) {
        const auto greedy = decode::greedy_generate(all, prompt, n);
        const auto spec = decode::speculative_generate(all, prompt, n, k);
        const std::int64_t want = (n + k - 1) / k;
        ++total;
        if (spec.forward_passes == want) {
            ++exact;
        } else if (first_off.empty()) {
            first_off = "n=" + std::to_string(n) + " took " + std::to_string(spec.forward_passes) + " passes, ceil(n/4)=" +
                        std::to_string(want);
        }
        const std::vector<decode::GenerationTrace> base{greedy}, fast{spec};
        const auto rep = decode::speedup_report(base, fast);
        if (n == 64) speedup_at_64 = rep.speedup;
        double sum = 0;
        for (double s : rep.accept_shares) sum += s;
        max_share_err = std::max(max_share_err, std::abs(sum - 1.0));

        const std::vector<decode::GenerationTrace> nb{decode::greedy_generate(never, prompt, n)},
            ns{decode::speculative_generate(never, prompt, n, k)};
        const auto nrep = decode::speedup_report(nb, ns);
        never_speedup_err = std::max(never_speedup_err, std::abs(nrep.speedup - 1.0));
        sum = 0;
        for (double s : nrep.accept_shares) sum += s;
        max_share_err = std::max(max_share_err, std::abs(sum - 1.0));
    }
    Outcome o;
    o.pass = exact == total && never_speedup_err == 0 && max_share_err < 1e-9;
    o.detail = "all-accept k=4: passes == ceil(n/4) for " + std::to_string(exact) + "/" + std::to_string(total) +
               " lengths n=1..64";
    if (!first_off.empty()) o.detail += " (" + first_off + "; the first pass has no drafts to verify)";
    o.detail += ", speedup at n=64 " + fmt("%.4g", speedup_at_64) + "; never-accept speedup max |s - 1| " +
                fmt("%.3g", never_speedup_err) + "; shares sum max error " + fmt("%.3g", max_share_err) + " (bound 1e-9)";
    return o;
}

Outcome toy_training(const fs::path &work) {
    // (a) held-out BPB at init and after 500 steps.
    const auto static_dir = work / "static";
    fs::remove_all(static_dir);
    const auto static_cfg = write_config(work, "static", toy_config(static_dir, "none", 4, 500));
    mtp_cmd({"pack", "--config", static_cfg});
    mtp_cmd({"train", "--config", static_cfg, "--stop-after", "0"});
    mtp_cmd({"eval-bpb", "--config", static_cfg, "--checkpoint", (static_dir / "checkpoints" / "step_0.ckpt").string()});
    const double bpb0 = all_row(static_dir / "reports" / "bpb.csv", "bpb");
    mtp_cmd({"train", "--config", static_cfg});
    mtp_cmd({"eval-bpb", "--config", static_cfg});
    const double bpb1 = all_row(static_dir / "reports" / "bpb.csv", "bpb");

    // (b) a second run with the same seed.
    const auto repeat_dir = work / "static_repeat";
    fs::remove_all(repeat_dir);
    mtp_cmd({"train", "--config", write_config(work, "static_repeat", toy_config(repeat_dir, "none", 4, 500))});
    const bool identical = slurp(static_dir / "logs" / "metrics.csv") == slurp(repeat_dir / "logs" / "metrics.csv");

    // (c) forward curriculum vs NTP over the first phase (S / k_max steps).
    const auto fwd_dir = work / "forward", ntp_dir = work / "ntp";
    fs::remove_all(fwd_dir);
    fs::remove_all(ntp_dir);
    mtp_cmd({"train", "--config", write_config(work, "forward", toy_config(fwd_dir, "forward", 4, 500)), "--stop-after", "125"});
    mtp_cmd({"train", "--config", write_config(work, "ntp", toy_config(ntp_dir, "none", 1, 500)), "--stop-after", "125"});
    const auto fwd = read_csv(fwd_dir / "logs" / "metrics.csv"), ntp = read_csv(ntp_dir / "logs" / "metrics.csv");

    // The reverse-curriculum model for criterion 7.
    const auto rev_dir = work / "reverse";
    fs::remove_all(rev_dir);
    mtp_cmd({"train", "--config", write_config(work, "reverse", toy_config(rev_dir, "reverse", 4, 500))});
    // Columns: step, lr, active_k, loss, ...
    int phase1_rows = 0, phase1_equal = 0;
    for (std::size_t i = 1; i < fwd.size() && i < ntp.size(); ++i) {
        if (fwd[i][2] != "1") break;
        ++phase1_rows;
        phase1_equal += fwd[i][0] == ntp[i][0] && fwd[i][3] == ntp[i][3];
    }

    Outcome o;
    o.pass = bpb1 < 0.8 * bpb0 && identical && phase1_rows == 125 && phase1_equal == phase1_rows;
    o.detail = "(a) held-out BPB " + fmt("%.4f", bpb0) + " -> " + fmt("%.4f", bpb1) + " (ratio " + fmt("%.3f", bpb1 / bpb0) +
               ", bound 0.8); (b) same-seed metrics.csv " + (identical ? "identical" : "DIFFERENT") + "; (c) forward phase 1: " +
               std::to_string(phase1_equal) + "/" + std::to_string(phase1_rows) + " loss values equal to NTP (125 expected)";
    return o;
}

Outcome directional_speedup(const fs::path &work) {
    const auto static_dir = work / "static", rev_dir = work / "reverse";
    for (const auto &dir : {static_dir, rev_dir}) {
        if (!fs::exists(dir / "checkpoints" / "final.ckpt")) {
            throw std::runtime_error("no toy model in " + dir.string() + "; run criterion 6 first");
        }
    }
    const auto static_cfg = write_config(work, "static", toy_config(static_dir, "none", 4, 500));
    const auto rev_cfg = write_config(work, "reverse", toy_config(rev_dir, "reverse", 4, 500));
    mtp_cmd({"spec-bench", "--config", static_cfg});
    mtp_cmd({"spec-bench", "--config", rev_cfg});
    const auto st = bench_speedups(static_dir), rv = bench_speedups(rev_dir);

    Outcome o;
    o.pass = st.at(4) > 1.2 && rv.at(4) < st.at(4);
    o.detail = "speedup at k_used=4 on 20 held-out prompts: static " + fmt("%.3f", st.at(4)) + " (bound 1.2), reverse " +
               fmt("%.3f", rv.at(4)) + "; k_used=2,3: static " + fmt("%.3f", st.at(2)) + "," + fmt("%.3f", st.at(3)) +
               " reverse " + fmt("%.3f", rv.at(2)) + "," + fmt("%.3f", rv.at(3));
    return o;
}

Outcome metric_oracles(const fs::path &) {
    double bleu_err = 0;
    for (const auto &c : oracles::bleu_golden_cases()) {
        bleu_err = std::max(bleu_err, std::abs(evaluate::bleu(c.candidate, c.reference).score - c.score));
    }
    int rouge_exact = 0;
    for (const auto &c : oracles::rouge_hand_cases()) {
        const auto r = evaluate::rouge_l(c.candidate, c.reference);
        const double p = static_cast<double>(c.lcs) / static_cast<double>(c.candidate_words);
        const double rc = static_cast<double>(c.lcs) / static_cast<double>(c.reference_words);
        rouge_exact += r.precision == p && r.recall == rc && r.f1 == (c.lcs ? 2 * p * rc / (p + rc) : 0.0);
    }
    struct TtrCase {
        const char *text;
        double want;
    };
    int ttr_exact = 0;
    const std::vector<TtrCase> ttr_cases = {
        {"the cat the dog", 0.75}, {"one two three", 1.0}, {"go go go go go", 0.2}, {"a, a, a.", 0.5}, {"x = x + 1", 0.8},
    };
    for (const auto &c : ttr_cases) ttr_exact += evaluate::ttr(c.text) == c.want;

    const fixtures::UniformModel byte_uniform(tokenize::ByteVocab::kSize, 256, 1, 256);
    const std::vector<std::string> texts{"The quick brown fox jumps over the lazy dog.", "hello\nworld",
                                         "A longer line of plain ASCII text, with punctuation; and digits 0123456789!"};
    const double bpb_err = std::abs(evaluate::bits_per_byte(byte_uniform, texts, tokenize::ByteTokenizer{}).bpb - 8.0);

    Outcome o;
    o.pass = bleu_err < 1e-6 && rouge_exact == 10 && ttr_exact == static_cast<int>(ttr_cases.size()) && bpb_err < 1e-9;
    o.detail = "BLEU max |diff| vs NLTK " + fmt("%.3g", bleu_err) + " on 20 pairs (bound 1e-6); ROUGE-L exact " +
               std::to_string(rouge_exact) + "/10; TTR exact " + std::to_string(ttr_exact) + "/" +
               std::to_string(ttr_cases.size()) + "; uniform byte BPB |x - 8| " + fmt("%.3g", bpb_err) + " (bound 1e-9)";
    return o;
}

Outcome persistence(const fs::path &work) {
    // Forward curriculum over 40 steps; the interruption at step 15 falls
    // inside the second phase, after head 2's optimizer state exists.
    const auto full_dir = work / "persist_full", resumed_dir = work / "persist_resumed";
    fs::remove_all(full_dir);
    fs::remove_all(resumed_dir);
    const auto full_cfg = write_config(work, "persist_full", toy_config(full_dir, "forward", 4, 40));
    const auto resumed_cfg = write_config(work, "persist_resumed", toy_config(resumed_dir, "forward", 4, 40));
    mtp_cmd({"train", "--config", full_cfg});
    mtp_cmd({"train", "--config", resumed_cfg, "--stop-after", "15"});
    mtp_cmd({"train", "--config", resumed_cfg, "--resume", (resumed_dir / "checkpoints" / "step_15.ckpt").string()});

    const auto a = slurp(full_dir / "logs" / "metrics.csv"), b = slurp(resumed_dir / "logs" / "metrics.csv");
    const bool csv_same = !a.empty() && a == b;
    const bool ckpt_same =
        slurp(full_dir / "checkpoints" / "final.ckpt") == slurp(resumed_dir / "checkpoints" / "final.ckpt");
    Outcome o;
    o.pass = csv_same && ckpt_same;
    o.detail = std::string("40-step run vs stop at 15 + resume: metrics.csv ") + (csv_same ? "byte-identical" : "DIFFERENT") +
               " (" + std::to_string(std::count(a.begin(), a.end(), '\n') - 1) + " rows), final checkpoint " +
               (ckpt_same ? "byte-identical" : "DIFFERENT");
    return o;
}

struct Criterion {
    const char *title;
    double budget_seconds;
    std::function<Outcome(const fs::path &)> run;
};

const std::map<int, Criterion> &criteria() {
    static const std::map<int, Criterion> all = {
        {1, {"curriculum exactness", 1, curriculum_exactness}},
        {2, {"loss reduction", 5, loss_reduction}},
        {3, {"gradient correctness", 120, gradient_correctness}},
        {4, {"speculative exactness", 120, speculative_exactness}},
        {5, {"pass-count bounds and acceptance mechanics", 10, pass_count_mechanics}},
        {6, {"toy training", 1800, toy_training}},
        {7, {"directional speedup", 300, directional_speedup}},
        {8, {"metric oracles", 10, metric_oracles}},
        {9, {"persistence", 300, persistence}},
    };
    return all;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Acceptance criteria runner"};
    int which = 0;
    std::string work_dir = "acceptance_work";
    app.add_option("-n,--criterion", which, "Criterion number")->required()->check(CLI::Range(1, 9));
    app.add_option("--work-dir", work_dir, "Scratch space for run directories");
    CLI11_PARSE(app, argc, argv);

    const auto &c = criteria().at(which);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = c.run(fs::absolute(work_dir));
    } catch (const std::exception &e) {
        o = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = seconds < c.budget_seconds;
    const bool pass = o.pass && in_time;
    std::ostringstream line;
    line << "CRITERION " << which << " " << (pass ? "PASS" : "FAIL") << " " << c.title << ": " << o.detail << "; runtime "
         << fmt("%.2f", seconds) << " s (budget " << fmt("%g", c.budget_seconds) << " s" << (in_time ? "" : ", EXCEEDED")
         << ")\n";
    std::cout << line.str() << std::flush;
    // ctest hides the output of passing tests; keep each verdict on disk.
    std::error_code ec;
    fs::create_directories(work_dir, ec);
    std::ofstream(fs::path(work_dir) / ("criterion_" + std::to_string(which) + ".txt")) << line.str();
    return pass ? 0 : 1;
}
