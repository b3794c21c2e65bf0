#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtp::curriculum {

class CurriculumError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

enum class Mode { kNone, kForward, kReverse };

const char *mode_name(Mode mode);
Mode parse_mode(const std::string &name);

struct CurriculumSpec {
    Mode mode = Mode::kNone;
    int k_max = 1;
    std::int64_t total_steps = 1;

    void validate() const;
};

/// Active heads at step s, with training progress p = s / S split into k_max
/// equal virtual epochs:
///   forward  min(k_max, floor(p k_max) + 1)
///   reverse  max(1, k_max - floor(p k_max))
///   none     k_max
inline int active_heads(const CurriculumSpec &spec, std::int64_t step);

struct Phase {
    std::int64_t begin = 0;  // inclusive
    std::int64_t end = 0;    // exclusive
    int active_k = 0;
};

/// Maximal runs of constant active_heads over [0, S).
std::vector<Phase> phase_plan(const CurriculumSpec &spec);

// Takes a copy so the hot path never lets the spec escape.
[[noreturn]] void throw_bad_step(CurriculumSpec spec, std::int64_t step);

// Inline because the trainer and the exhaustive checks call it per step.
inline int active_heads(const CurriculumSpec &spec, std::int64_t step) {
    if (spec.k_max < 1 || spec.total_steps < spec.k_max || step < 0 || step >= spec.total_steps) {
        throw_bad_step(spec, step);
    }
    // floor(p k_max) with p = s / S, in exact integer arithmetic.
    const auto scaled = step * spec.k_max;
    // 32-bit division is markedly cheaper and covers every realistic run.
    const int phase = scaled <= 0xffffffffLL && spec.total_steps <= 0xffffffffLL
        ? static_cast<int>(static_cast<std::uint32_t>(scaled) / static_cast<std::uint32_t>(spec.total_steps))
        : static_cast<int>(scaled / spec.total_steps);
    switch (spec.mode) {
        case Mode::kNone: return spec.k_max;
        case Mode::kForward: return std::min(spec.k_max, phase + 1);
        case Mode::kReverse: return std::max(1, spec.k_max - phase);
    }
    return spec.k_max;
}

}  // namespace mtp::curriculum
