#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "phasetunnel/model.hpp"

namespace phasetunnel {

/// A point on a Hamiltonian trajectory together with the action
/// integral of xi . dx accumulated since the start of its segment.
struct FlowState {
    PhasePoint point;
    cd action{0.0, 0.0};
    cd time{0.0, 0.0};
};

enum class Generator { Hp1, Hp2, GradientFlowSigmaPlus, GradientFlowSigmaMinus };

std::string to_string(Generator g);

struct PathSegment {
    std::vector<FlowState> samples;
    Generator generator = Generator::Hp1;

    const FlowState& front() const { return samples.front(); }
    const FlowState& back() const { return samples.back(); }
};

/// exp(t_end H_p)(z0), with the complex time traversed along the straight
/// ray s * t_end, s in [0, 1]. The action is integrated as an extra state.
FlowState integrate(Symbol which, const Model& model, const PhasePoint& z0, cd t_end, double tol);

/// Same flow, keeping every accepted step as a sample.
PathSegment integrate_path(Symbol which, const Model& model, const PhasePoint& z0, cd t_end,
                           double tol);

/// Exact flow of H_{p1} = (2 xi, -e_n): polynomial in t.
FlowState p1_flow_closed_form(const PhasePoint& z0, cd t);

/// Exact action of the H_{p1} flow over [0, t]: 2 (xi0.xi0 t - xi0_n t^2 + t^3 / 3).
cd p1_action_closed_form(const PhasePoint& z0, cd t);

/// max_k |p(z_k) - p(z_0)| over the samples of a segment.
double max_energy_drift(Symbol which, const Model& model, const PathSegment& seg);

/// CSV with columns re_t, im_t, re_x1, im_x1, ..., re_xi1, im_xi1, ..., re_action, im_action.
void write_csv(std::ostream& os, const PathSegment& seg);

}  // namespace phasetunnel
