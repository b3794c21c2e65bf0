#include "mtp/decode/decode.hpp"

#include <cstdio>

namespace mtp::decode {

namespace {

void check_prompt(const model::LanguageModel &model, std::span<const TokenId> prompt, int n_tokens, int reserve,
                  const char *who) {
    if (prompt.empty()) throw DecodeError(std::string(who) + ": prompt must not be empty");
    if (n_tokens < 0) throw DecodeError(std::string(who) + ": negative token count");
    for (auto id : prompt) {
        if (id < 0 || id >= model.vocab_size()) {
            throw DecodeError(std::string(who) + ": prompt token " + std::to_string(id) + " outside vocab");
        }
    }
    const auto need = static_cast<std::int64_t>(prompt.size()) + n_tokens + reserve;
    if (need > model.context()) {
        throw DecodeError(std::string(who) + ": prompt " + std::to_string(prompt.size()) + " + " +
                          std::to_string(n_tokens) + " tokens" +
                          (reserve ? " + " + std::to_string(reserve) + " draft slots" : std::string()) +
                          " exceeds context " + std::to_string(model.context()));
    }
}

std::string format_share(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

TokenId argmax(std::span<const float> logits) {
    TokenId best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[static_cast<std::size_t>(best)]) best = static_cast<TokenId>(i);
    }
    return best;
}

GenerationTrace greedy_generate(const model::LanguageModel &model, std::span<const TokenId> prompt, int n_tokens) {
    check_prompt(model, prompt, n_tokens, 0, "greedy_generate");
    GenerationTrace trace;
    trace.prompt.assign(prompt.begin(), prompt.end());
    trace.head_tallies.assign(1, 0);
    std::vector<TokenId> seq = trace.prompt;
    const auto V = static_cast<std::size_t>(model.vocab_size());
    for (int i = 0; i < n_tokens; ++i) {
        const std::int32_t last = static_cast<std::int32_t>(seq.size()) - 1;
        const auto logits = model.logits(seq, std::span(&last, 1), 1);
        const auto next = argmax(std::span(logits).first(V));
        seq.push_back(next);
        trace.generated.push_back(next);
        ++trace.forward_passes;
        ++trace.head_tallies[0];
        trace.tokens_per_pass.push_back(1);
    }
    return trace;
}

GenerationTrace speculative_generate(const model::LanguageModel &model, std::span<const TokenId> prompt, int n_tokens,
                                     int k_used) {
    if (k_used < 1 || k_used > model.k_max()) {
        throw DecodeError("speculative_generate: k_used " + std::to_string(k_used) + " outside [1, " +
                          std::to_string(model.k_max()) + "]");
    }
    check_prompt(model, prompt, n_tokens, k_used, "speculative_generate");
    GenerationTrace trace;
    trace.prompt.assign(prompt.begin(), prompt.end());
    trace.k_used = k_used;
    trace.head_tallies.assign(static_cast<std::size_t>(k_used), 0);
    const auto V = static_cast<std::size_t>(model.vocab_size());
    const auto k = static_cast<std::size_t>(k_used);

    std::vector<TokenId> seq = trace.prompt;
    std::vector<TokenId> drafts;
    std::vector<TokenId> tokens;
    std::vector<std::int32_t> positions;
    while (static_cast<int>(trace.generated.size()) < n_tokens) {
        tokens = seq;
        tokens.insert(tokens.end(), drafts.begin(), drafts.end());
        // Head 1 at the last confirmed position and at every draft verifies
        // the next token; whichever becomes the frontier also supplies drafts.
        const auto frontier0 = static_cast<std::int32_t>(seq.size()) - 1;
        positions.clear();
        for (std::size_t i = 0; i <= drafts.size(); ++i) positions.push_back(frontier0 + static_cast<std::int32_t>(i));
        const auto logits = model.logits(tokens, positions, k_used);
        auto head = [&](std::size_t pos_index, std::size_t h) {
            return argmax(std::span(logits).subspan((pos_index * k + h) * V, V));
        };
        ++trace.forward_passes;

        std::size_t m = 0;
        while (m < drafts.size() && drafts[m] == head(m, 0)) ++m;
        int appended = 0;
        auto emit = [&](TokenId t, std::size_t credit) {
            if (static_cast<int>(trace.generated.size()) >= n_tokens) return;
            seq.push_back(t);
            trace.generated.push_back(t);
            ++trace.head_tallies[credit];
            ++appended;
        };
        for (std::size_t j = 0; j < m; ++j) emit(drafts[j], j + 1);
        emit(head(m, 0), 0);
        trace.tokens_per_pass.push_back(appended);

        drafts.clear();
        for (std::size_t h = 1; h < k; ++h) drafts.push_back(head(m, h));
    }
    return trace;
}

SpeedupReport speedup_report(std::span<const GenerationTrace> baseline, std::span<const GenerationTrace> speculative) {
    if (baseline.size() != speculative.size() || baseline.empty()) {
        throw DecodeError("speedup_report: need the same non-zero number of baseline and speculative traces");
    }
    SpeedupReport r;
    std::size_t heads = 1;
    for (const auto &t : speculative) heads = std::max(heads, t.head_tallies.size());
    std::vector<std::int64_t> tallies(heads, 0);
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        const auto &a = baseline[i], &b = speculative[i];
        if (a.prompt != b.prompt || a.generated.size() != b.generated.size()) {
            throw DecodeError("speedup_report: trace " + std::to_string(i) + " has a different prompt or length");
        }
        r.tokens += static_cast<std::int64_t>(b.generated.size());
        r.baseline_passes += a.forward_passes;
        r.speculative_passes += b.forward_passes;
        for (std::size_t h = 0; h < b.head_tallies.size(); ++h) tallies[h] += b.head_tallies[h];
    }
    r.speedup = r.speculative_passes == 0 ? 1.0
                                          : static_cast<double>(r.baseline_passes) /
                                                static_cast<double>(r.speculative_passes);
    for (auto t : tallies) {
        r.accept_shares.push_back(r.tokens == 0 ? 0.0 : static_cast<double>(t) / static_cast<double>(r.tokens));
    }
    return r;
}

std::string trace_csv_header(int k) {
    std::string h = "prompt_id,method,k_used,tokens,forward_passes";
    for (int j = 1; j <= k; ++j) h += ",accept_share_head_" + std::to_string(j);
    return h + "\n";
}

std::string trace_csv_row(const std::string &prompt_id, const std::string &method, const GenerationTrace &trace,
                          int k) {
    std::string row = prompt_id + "," + method + "," + std::to_string(trace.k_used) + "," +
                      std::to_string(trace.generated.size()) + "," + std::to_string(trace.forward_passes);
    const double n = static_cast<double>(trace.generated.size());
    for (int j = 0; j < k; ++j) {
        const auto tally = j < static_cast<int>(trace.head_tallies.size()) ? trace.head_tallies[static_cast<std::size_t>(j)] : 0;
        row += "," + format_share(n == 0 ? 0.0 : static_cast<double>(tally) / n);
    }
    return row + "\n";
}

}  // namespace mtp::decode
