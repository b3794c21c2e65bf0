#include "mtp/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mtp::numerics {

double GradientCheckReport::max_rel_error() const {
    double worst = 0.0;
    for (const auto &e : entries) worst = std::max(worst, e.max_rel_error);
    return worst;
}

namespace {

double evaluate_loss(const LossBuilder &build, const ParameterMap<double> &params, GradMode mode) {
    Graph<double> graph(mode);
    ParameterNodes nodes;
    for (const auto &[name, tensor] : params) nodes.emplace(name, graph.parameter(name, tensor));
    return graph.value(build(graph, nodes)).item();
}

}  // namespace

GradientCheckReport check_gradients(const LossBuilder &build, const ParameterMap<double> &params, double epsilon,
                                    double tolerance, Stencil stencil) {
    GradientCheckReport report;
    report.tolerance = tolerance;
    if (params.empty()) return report;

    Graph<double> graph;
    ParameterNodes nodes;
    for (const auto &[name, tensor] : params) nodes.emplace(name, graph.parameter(name, tensor));
    const auto analytic = graph.backward(build(graph, nodes));

    ParameterMap<double> probe = params;
    for (const auto &[name, tensor] : params) {
        GradientCheckEntry entry{.name = name};
        const auto grad = analytic.at(name).data();
        for (std::int64_t i = 0; i < tensor.numel(); ++i) {
            const double orig = probe.at(name).data()[static_cast<std::size_t>(i)];
            auto at = [&](double offset) {
                probe.at(name).mutable_data()[static_cast<std::size_t>(i)] = orig + offset;
                return evaluate_loss(build, probe, GradMode::kInference);
            };
            double numeric = 0.0;
            if (stencil == Stencil::kTwoPoint) {
                numeric = (at(epsilon) - at(-epsilon)) / (2.0 * epsilon);
            } else {
                // Paired differences keep a constant function at exactly zero.
                const double near = at(epsilon) - at(-epsilon);
                const double far = at(2.0 * epsilon) - at(-2.0 * epsilon);
                numeric = (8.0 * near - far) / (12.0 * epsilon);
            }
            probe.at(name).mutable_data()[static_cast<std::size_t>(i)] = orig;

            const double ga = grad[static_cast<std::size_t>(i)];
            const double denom = std::max({std::abs(ga), std::abs(numeric), 1e-8});
            entry.max_rel_error = std::max(entry.max_rel_error, std::abs(ga - numeric) / denom);
        }
        if (!(entry.max_rel_error < tolerance)) report.passed = false;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace mtp::numerics
