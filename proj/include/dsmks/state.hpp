#pragma once

#include "dsmks/grid.hpp"

namespace dsmks {

/// Solver state at one time level.
struct SimState {
    double t = 0.0;
    Field u;
    Field v;
    /// A⁻¹[u]; only guaranteed current when `w_current` is set.
    Field w;
    /// Second auxiliary function, τ h_t - Δh + h = A⁻¹[u f(u) + b0], h(0) = 0.
    Field h;
    /// Constant of the one-sided bound v ≤ w + τh + C, frozen at t = 0.
    double C_cmp = 0.0;
    long step_count = 0;
    double dt_last = 0.0;
    /// Positivity retries spent by the step that produced this state.
    int last_retries = 0;
    bool w_current = false;
};

}  // namespace dsmks
