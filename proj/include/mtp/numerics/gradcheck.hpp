#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mtp/numerics/graph.hpp"

namespace mtp::numerics {

struct GradientCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
};

struct GradientCheckReport {
    std::vector<GradientCheckEntry> entries;
    double tolerance = 0.0;
    bool passed = true;

    double max_rel_error() const;
};

/// kTwoPoint: (f(x+h) - f(x-h)) / 2h.
/// kFourPoint: (f(x-2h) - 8f(x-h) + 8f(x+h) - f(x+2h)) / 12h; with h ~ 1e-3 it
/// resolves gradients near 1e-6 that two-point differences lose to roundoff.
enum class Stencil { kTwoPoint, kFourPoint };

using ParameterNodes = std::map<std::string, NodeId>;

/// Builds a scalar loss on `graph` from parameters already registered in it.
using LossBuilder = std::function<NodeId(Graph<double> &graph, const ParameterNodes &params)>;

/// Compares backward() against central finite differences for every element
/// of every parameter. Relative error per element is
/// |ga - gn| / max(|ga|, |gn|, 1e-8); an entry reports the worst element.
GradientCheckReport check_gradients(const LossBuilder &build, const ParameterMap<double> &params,
                                    double epsilon = 1e-5, double tolerance = 1e-6,
                                    Stencil stencil = Stencil::kTwoPoint);

}  // namespace mtp::numerics
