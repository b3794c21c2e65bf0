#include "mtp/evaluate/judge.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <json.hpp>

namespace mtp::evaluate {

namespace {

using nlohmann::json;

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path_prefix;
};

Endpoint split_url(const std::string &url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw JudgeError("judge: base_url '" + url + "' has no scheme");
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw JudgeError("judge: unsupported scheme '" + scheme + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint e;
    e.origin = url.substr(0, path_start);
    e.path_prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!e.path_prefix.empty() && e.path_prefix.back() == '/') e.path_prefix.pop_back();
    return e;
}

int score_digit(std::string token) {
    const auto first = token.find_first_not_of(" \t\n");
    if (first == std::string::npos) return 0;
    token = token.substr(first, token.find_last_not_of(" \t\n") - first + 1);
    if (token.size() == 1 && token[0] >= '1' && token[0] <= '5') return token[0] - '0';
    return 0;
}

}  // namespace

const std::string &default_judge_template() {
    static const std::string kTemplate =
        "You will be given a sequence triplet consisting of:\n"
        "1. An input sequence (text or code) that serves as the starting point.\n"
        "2. An output sequence written as a continuation of the input.\n"
        "3. A target sequence that represents the expected continuation of the input sequence.\n"
        "\n"
        "Your task is to rate the written output sequence on one metric.\n"
        "\n"
        "Please make sure you read and understand these instructions carefully. Keep this document open while "
        "reviewing, and refer to it as needed.\n"
        "\n"
        "Evaluation Criteria:\n"
        "\n"
        "Overall Quality (1-5) - how well does the output sequence continue the input sequence and align with the "
        "target sequence?\n"
        "- A score of 5 means that the output sequence is excellent. It provides a seamless continuation of the "
        "input sequence, closely aligns with the target sequence, and avoids any repetitions, irrelevant passages, "
        "or major errors.\n"
        "- A score of 4 means that the output sequence is good. It continues the input sequence well and mostly "
        "aligns with the target sequence, but may include minor errors or imperfections, such as slight "
        "incoherence or small structural issues.\n"
        "- A score of 3 means that the output sequence is acceptable. It maintains some relevance to the input "
        "sequence and partial alignment with the target sequence, but contains noticeable flaws, such as "
        "incoherence, repetitions, or deviations that reduce its quality.\n"
        "- A score of 2 means that the output sequence is poor. It struggles to continue the input sequence "
        "coherently or deviates significantly from the target sequence, with major errors, irrelevant sections, or "
        "repeated patterns.\n"
        "- A score of 1 means that the output sequence is invalid. It fails to continue the input sequence "
        "meaningfully, shows no alignment with the target sequence, or is completely incoherent.\n"
        "\n"
        "Evaluation Steps:\n"
        "1. Carefully read the input, output, and target sequences.\n"
        "2. Compare the output sequence to both the input sequence (continuity) and the target sequence "
        "(alignment).\n"
        "3. Rate the output on a scale of 1-5 for Quality, according to the criteria above.\n"
        "\n"
        "### Input Sequence:\n"
        "\n"
        "{Input Sequence}\n"
        "\n"
        "### Output Sequence:\n"
        "\n"
        "{Output Sequence}\n"
        "\n"
        "### Target Sequence:\n"
        "\n"
        "{Target Sequence}\n";
    return kTemplate;
}

void JudgeConfig::validate() const {
    for (const char *slot : {kInputSlot, kOutputSlot, kTargetSlot}) {
        if (prompt_template.find(slot) == std::string::npos) {
            throw JudgeError(std::string("judge: prompt template lacks the ") + slot + " slot");
        }
    }
    if (base_url.empty()) throw JudgeError("judge: base_url is empty");
    split_url(base_url);
    if (model.empty()) throw JudgeError("judge: model is empty");
    if (!(timeout_seconds > 0)) throw JudgeError("judge: timeout must be positive");
    if (top_logprobs < 5 || top_logprobs > 20) throw JudgeError("judge: top_logprobs must be in [5, 20]");
}

std::string fill_judge_template(const std::string &tmpl, const std::string &input, const std::string &output,
                                const std::string &target) {
    // Fill in one pass per slot over the template only, so slot markers that
    // happen to appear inside the sequences stay untouched.
    std::string out;
    for (std::size_t i = 0; i < tmpl.size();) {
        bool matched = false;
        for (const auto &[slot, value] : {std::pair<const char *, const std::string *>{kInputSlot, &input},
                                          {kOutputSlot, &output},
                                          {kTargetSlot, &target}}) {
            const std::string_view s(slot);
            if (tmpl.compare(i, s.size(), s) == 0) {
                out += *value;
                i += s.size();
                matched = true;
                break;
            }
        }
        if (!matched) out += tmpl[i++];
    }
    return out;
}

JudgeScore parse_judge_response(const std::string &body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error &e) {
        throw JudgeError(std::string("judge: response is not JSON: ") + e.what(), body);
    }
    JudgeScore result;
    result.raw = body;
    try {
        const auto &choice = doc.at("choices").at(0);
        const auto *logprobs = choice.contains("logprobs") && choice["logprobs"].is_object() ? &choice["logprobs"] : nullptr;
        if (logprobs && logprobs->contains("content") && (*logprobs)["content"].is_array() &&
            !(*logprobs)["content"].empty()) {
            const auto &first = (*logprobs)["content"].at(0);
            double mass[6] = {0, 0, 0, 0, 0, 0};
            auto add = [&](const json &entry) {
                const int d = score_digit(entry.at("token").get<std::string>());
                if (d > 0 && mass[d] == 0.0) mass[d] = std::exp(entry.at("logprob").get<double>());
            };
            if (first.contains("top_logprobs") && first["top_logprobs"].is_array()) {
                for (const auto &entry : first["top_logprobs"]) add(entry);
            }
            add(first);
            double total = 0.0, weighted = 0.0;
            for (int s = 1; s <= 5; ++s) {
                total += mass[s];
                weighted += s * mass[s];
            }
            if (total > 0.0) {
                result.score = weighted / total;
                return result;
            }
        }
        const auto content = choice.at("message").at("content").get<std::string>();
        const auto pos = content.find_first_of("12345");
        if (pos == std::string::npos) throw JudgeError("judge: reply has no score digit", body);
        result.score = content[pos] - '0';
        result.weighted = false;
        return result;
    } catch (const json::exception &e) {
        throw JudgeError(std::string("judge: unexpected response shape: ") + e.what(), body);
    }
}

JudgeScore g_eval(const JudgeConfig &config, const std::string &input, const std::string &output,
                  const std::string &target) {
    config.validate();
    const auto endpoint = split_url(config.base_url);
    httplib::Headers headers;
    if (!config.api_key_env.empty()) {
        const char *key = std::getenv(config.api_key_env.c_str());
        if (!key || !*key) throw JudgeError("judge: environment variable " + config.api_key_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const json request = {
        {"model", config.model},
        {"messages", json::array({{{"role", "system"}, {"content", "Reply with a single digit from 1 to 5."}},
                                  {{"role", "user"},
                                   {"content", fill_judge_template(config.prompt_template, input, output, target)}}})},
        {"max_tokens", 1},
        {"temperature", 0},
        {"logprobs", true},
        {"top_logprobs", config.top_logprobs},
    };

    httplib::Client client(endpoint.origin);
    const auto seconds = static_cast<time_t>(config.timeout_seconds);
    const auto micros = static_cast<time_t>((config.timeout_seconds - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    const auto res = client.Post(endpoint.path_prefix + "/chat/completions", headers, request.dump(), "application/json");
    if (!res) throw JudgeError("judge: request to " + config.base_url + " failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403) {
        throw JudgeError("judge: authorization rejected (HTTP " + std::to_string(res->status) + ")", res->body);
    }
    if (res->status != 200) throw JudgeError("judge: HTTP " + std::to_string(res->status), res->body);
    return parse_judge_response(res->body);
}

}  // namespace mtp::evaluate
