#pragma once

// Time integration of the density-suppressed system and of the minimal
// Keller-Segel contrast system, together with the run configuration.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dsmks/diagnostics.hpp"
#include "dsmks/helmholtz.hpp"
#include "dsmks/model.hpp"
#include "dsmks/state.hpp"

namespace dsmks {

struct GridSpec {
    int dim = 1;
    std::array<int, 2> n{64, 64};
    std::array<double, 2> length{1.0, 1.0};

    Grid build() const;
};

enum class ProfileKind {
    Constant,  ///< value
    Cosine,    ///< value + amplitude·Π cos(m_a π x_a / L_a), m_a = 0 leaves axis a flat
    Gaussian,  ///< value + amplitude·exp(-|x - center|² / (2 width²))
    Table,     ///< explicit cell values, x fastest
    Elliptic,  ///< A⁻¹[u⁰]; only meaningful for v
};

struct InitialProfile {
    ProfileKind kind = ProfileKind::Constant;
    double value = 0.0;
    double amplitude = 0.0;
    std::array<int, 2> modes{1, 0};
    std::array<double, 2> center{0.0, 0.0};
    double width = 0.1;
    std::vector<double> table;
    /// Rescales the whole profile to this integral.
    std::optional<double> mass;
    /// Same, in units of the critical mass 4π/χ.
    std::optional<double> mass_ratio;
    /// Relative multiplicative noise 1 + noise·U(-1,1), applied before rescaling.
    double noise = 0.0;

    bool operator==(const InitialProfile&) const = default;
};

inline InitialProfile constant_profile(double value) {
    InitialProfile p;
    p.value = value;
    return p;
}

/// Evaluates a non-elliptic profile. `seed` drives the noise.
Field make_profile(const Grid& grid, const InitialProfile& p, double chi, std::uint64_t seed);

enum class DtMode { Adaptive, Fixed };

/// Treatment of Δ(u γ(v)) in the density update.
enum class TransportScheme {
    Explicit,  ///< u* = u + dt Δ(u γ(v)), step bounded by h²/(2 dim max γ)
    Implicit,  ///< (I - dt Δ Γ) u* = u with Γ = γ(vⁿ); any dt, density-suppressed mode only
};

struct DtPolicy {
    DtMode mode = DtMode::Adaptive;
    TransportScheme scheme = TransportScheme::Explicit;
    double safety = 0.4;
    /// Step used by the fixed policy.
    double dt = 0.0;
    /// Upper cap of the adaptive policy; h_min when absent. The implicit
    /// scheme steps with exactly this value.
    std::optional<double> dt_max;
};

struct DiagnosticParams {
    /// Constant M of λ = 2Mτb0.
    double M = 1.0;
    /// Additive constant of G(t).
    double C0 = 0.0;
    /// a1 used for b0 = b1(a1).
    double a1_for_b0 = 1.0;
    /// Abort with BlowupSuspected once a single cell carries more than this
    /// fraction of the mass; 0 disables the check.
    double blowup_fraction = 0.0;
    double window_frac = 0.5;
    double growth_factor = 1.05;
};

struct OutputSpec {
    /// Write a snapshot every this many samples (0: only the final state).
    int snapshot_stride = 0;
};

struct RunConfig {
    std::string name = "custom";
    GridSpec grid{};
    ModelParams model{};
    InitialProfile u0 = constant_profile(1.0);
    InitialProfile v0 = constant_profile(0.0);
    double T_end = 1.0;
    DtPolicy dt{};
    double sample_every = 0.1;
    SolverOptions solver{};
    DiagnosticParams diagnostics{};
    OutputSpec output{};
    std::uint64_t seed = 0;

    /// Throws InvalidArgument naming the violated invariant.
    void validate() const;
};

enum class ExitStatus { Completed, BlowupSuspected, StiffnessFailure, NumericalFailure };
std::string to_string(ExitStatus s);
/// 0, 2, 3, 4 respectively.
int exit_code(ExitStatus s);

struct RunCallbacks {
    std::function<void(const SimState&, const DiagnosticsRecord&)> on_sample;
    std::function<void(const SimState&)> on_snapshot;
    std::function<void(const std::string&)> on_warning;
};

struct RunResult {
    ExitStatus status = ExitStatus::Completed;
    std::string message;
    std::vector<DiagnosticsRecord> series;
    SimState final_state;
    long steps = 0;
    long retries = 0;
    std::size_t undershoots = 0;
};

class Simulator {
public:
    /// Validates the configuration and derives b0.
    explicit Simulator(RunConfig config);

    const RunConfig& config() const { return config_; }
    const Grid& grid() const { return grid_; }
    const ScreenedSolver& solver() const { return solver_; }
    const DiagnosticContext& context() const { return ctx_; }
    double b0() const { return ctx_.b0; }
    /// 1e-10·‖u⁰‖∞.
    double pos_tol() const { return pos_tol_; }

    /// Initial state with w = A⁻¹u⁰, h = 0 and the comparison constant.
    /// For τ = 0 the signal is v = w regardless of v0.
    SimState init_state() const;

    /// Explicit stability bound of the transport part (∞ for the implicit scheme).
    double stable_dt(const SimState& s) const;
    /// Adaptive: min(stable_dt, dt_max), halved after a retried step.
    /// Fixed: the configured step; `above_bound` reports a violation of
    /// stable_dt. Throws StiffnessFailure below 1e-12·T_end.
    double select_dt(const SimState& s, bool* above_bound = nullptr) const;

    /// One step with positivity retries (dt halved up to 8 times). Throws
    /// NumericalFailure after the last retry or on a non-finite field.
    /// `undershoots` accumulates clamped motility arguments.
    SimState step(const SimState& s, double dt, std::size_t* undershoots = nullptr) const;

    /// Recomputes w = A⁻¹u.
    void refresh(SimState& s) const;

    /// |∫u_new - ∫u + dt ∫(u_new f₊ - u f₋)| for the step s → next.
    double step_mass_residual(const SimState& s, const SimState& next) const;

    RunResult run(const RunCallbacks& callbacks = {}) const;

private:
    Field implicit_transport(const Field& u, const Field& gamma, double dt) const;
    std::optional<SimState> try_step(const SimState& s, double dt, std::size_t* undershoots) const;

    RunConfig config_;
    Grid grid_;
    ScreenedSolver solver_;
    DiagnosticContext ctx_;
    double pos_tol_ = 0.0;
    bool h_active_ = false;
};

}  // namespace dsmks
