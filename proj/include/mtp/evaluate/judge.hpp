#pragma once

#include <stdexcept>
#include <string>

namespace mtp::evaluate {

/// Raised for transport, auth and parse failures. Keeps the raw response
/// body when there was one.
class JudgeError : public std::runtime_error {
   public:
    JudgeError(const std::string &what, std::string raw = {}) : std::runtime_error(what), raw_(std::move(raw)) {}
    const std::string &raw() const { return raw_; }

   private:
    std::string raw_;
};

inline constexpr const char *kInputSlot = "{Input Sequence}";
inline constexpr const char *kOutputSlot = "{Output Sequence}";
inline constexpr const char *kTargetSlot = "{Target Sequence}";

/// The 1-5 overall-quality rating prompt with the three slots above.
const std::string &default_judge_template();

struct JudgeConfig {
    /// Scheme, host and optional port plus path prefix, e.g.
    /// "https://api.openai.com/v1". The request goes to <base>/chat/completions.
    std::string base_url;
    std::string model = "gpt-3.5-turbo-0125";
    /// Name of the environment variable holding the bearer token; empty
    /// sends no Authorization header.
    std::string api_key_env = "OPENAI_API_KEY";
    std::string prompt_template = default_judge_template();
    double timeout_seconds = 30.0;
    int top_logprobs = 20;

    void validate() const;
};

struct JudgeScore {
    double score = 0.0;
    bool weighted = true;  // false: the endpoint gave no probabilities
    std::string raw;
};

std::string fill_judge_template(const std::string &tmpl, const std::string &input, const std::string &output,
                                const std::string &target);

/// Parses a chat-completion response: the probability-weighted mean over the
/// digit tokens 1-5 at the first position, or the parsed digit when no
/// probabilities came back.
JudgeScore parse_judge_response(const std::string &body);

JudgeScore g_eval(const JudgeConfig &config, const std::string &input, const std::string &output,
                  const std::string &target);

}  // namespace mtp::evaluate
