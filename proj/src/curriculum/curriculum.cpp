#include "mtp/curriculum/curriculum.hpp"

#include <algorithm>

namespace mtp::curriculum {

const char *mode_name(Mode mode) {
    switch (mode) {
        case Mode::kNone: return "none";
        case Mode::kForward: return "forward";
        case Mode::kReverse: return "reverse";
    }
    return "?";
}

Mode parse_mode(const std::string &name) {
    if (name == "none") return Mode::kNone;
    if (name == "forward") return Mode::kForward;
    if (name == "reverse") return Mode::kReverse;
    throw CurriculumError("unknown curriculum '" + name + "' (expected none, forward or reverse)");
}

void CurriculumSpec::validate() const {
    if (k_max < 1) throw CurriculumError("curriculum: k_max must be at least 1");
    if (total_steps < k_max) {
        throw CurriculumError("curriculum: total steps " + std::to_string(total_steps) + " < k_max " +
                              std::to_string(k_max) + " leaves a phase empty");
    }
}

void throw_bad_step(CurriculumSpec spec, std::int64_t step) {
    spec.validate();
    throw CurriculumError("curriculum: step " + std::to_string(step) + " outside [0, " +
                          std::to_string(spec.total_steps) + ")");
}

std::vector<Phase> phase_plan(const CurriculumSpec &spec) {
    spec.validate();
    std::vector<Phase> plan;
    if (spec.mode == Mode::kNone) return {{0, spec.total_steps, spec.k_max}};
    for (int q = 0; q < spec.k_max; ++q) {
        // Phase q holds the steps with floor(s k / S) == q: s in [ceil(q S / k), ceil((q+1) S / k)).
        const auto begin = (q * spec.total_steps + spec.k_max - 1) / spec.k_max;
        const auto end = ((q + 1) * spec.total_steps + spec.k_max - 1) / spec.k_max;
        const int k = spec.mode == Mode::kForward ? q + 1 : spec.k_max - q;
        plan.push_back({begin, end, k});
    }
    return plan;
}

}  // namespace mtp::curriculum
