#pragma once

// Functionals, identity residuals and one-sided bounds evaluated on solver
// states, plus series-level checks (Gronwall-type ODI, boundedness trend).

#include <span>
#include <string>
#include <vector>

#include "dsmks/helmholtz.hpp"
#include "dsmks/model.hpp"
#include "dsmks/state.hpp"

namespace dsmks {

/// Everything sampled at one diagnostic time.
struct DiagnosticsRecord {
    double t = 0.0;
    long step = 0;
    double dt = 0.0;
    double mass = 0.0;
    double linf_u = 0.0;
    double linf_v = 0.0;
    double min_u = 0.0;
    double min_v = 0.0;
    double min_w = 0.0;
    double min_h = 0.0;
    double llogl = 0.0;
    double entropy_E = 0.0;
    double dissipation_D = 0.0;
    /// ‖v_t‖² from the signal equation at the sampled state (0 when τ = 0).
    double vt_l2sq = 0.0;
    /// ∫ u f(u) (log u + 1 - χ v), the source contribution to dE/dt.
    double entropy_source = 0.0;
    /// ∫ u f(u).
    double source_integral = 0.0;
    double lyap_G = 0.0;
    double lyap_Lambda = 0.0;
    double cmp_margin = 0.0;
    double key_residual_linf = 0.0;
    /// |m^{n+1} - m^n + dt ∫(split source)| of the step ending here.
    double mass_residual = 0.0;
    double dual_estimate = 0.0;
    /// ‖w‖²_{H¹} and ∫ u² e^{-χ v}, the two parts of the dual estimate.
    double w_h1sq = 0.0;
    double u2_weighted = 0.0;
    /// max(A⁻¹[u γ(v)] - w); nonpositive up to solver error.
    double monotone_gap = 0.0;
    double h_l1 = 0.0;
    double v_l2 = 0.0;
    double gradv_l2 = 0.0;
    double steady_residual = 0.0;
};

/// Model data the diagnostics need besides the fields themselves.
struct DiagnosticContext {
    const ScreenedSolver* solver = nullptr;
    ModelParams model{};
    double b0 = 0.0;
    /// Constant M of the h-energy estimate; λ = 2 M τ b0 in Λ(t).
    double M = 1.0;
    /// Additive constant C0 making G(t) nonnegative.
    double C0 = 0.0;
    double eps_log_abs = 1e-30;
    double eps_log_rel = 1e-12;
};

/// ∫ (u log u + 1/e); u log u is taken as 0 for u ≤ 0.
double llogl(const Field& u);

/// ∫ (u log u + (χ/2)|∇v|² + (χ/2) v² - χ u v) with the face-based |∇v|².
double entropy_E(const Field& u, const Field& v, double chi);

/// Face-based ∫ u e^{-χv} |∇ log u - χ∇v|² with log(u + eps) inside the
/// logarithm only. Always ≥ 0. `weighted = false` drops the e^{-χv} weight
/// (minimal Keller-Segel dissipation).
double dissipation_D(const Field& u, const Field& v, double chi, double eps_log, bool weighted = true);
/// Default regularization 1e-30 + 1e-12·‖u‖∞.
double default_eps_log(const Field& u);

/// r_k = (E_{k+1} - E_{k-1})/(t_{k+1} - t_{k-1}) + D_k + τχ‖v_t‖²_k + S_k at
/// interior samples k, where S_k is the source term. Returns |r_k|.
/// Throws InvalidArgument for fewer than 3 samples.
std::vector<double> entropy_identity_residual(std::span<const DiagnosticsRecord> series, double tau, double chi);

/// L∞ of (w⁺ - w⁻)/dt + ½[T(prev) + T(next)] with
/// T = u γ(v) + A⁻¹[u f(u)] - A⁻¹[u γ(v)] (density-suppressed mode) and
/// T = A⁻¹[u f(u) - Δu + χ∇·(u∇v)] (minimal mode).
double key_identity_residual(const SimState& prev, const SimState& next, const DiagnosticContext& ctx);

/// Smallest C ≥ τ/χ with (τ/χ)e^{-χ v_in} + v_in ≤ w_in + C. For χ = 1 this is
/// max(τ, max(τ e^{-v_in} + v_in - w_in)).
double comparison_constant(const Field& u_in, const Field& v_in, const Field& w_in, double tau, double chi);

/// min over cells of (w + τ h + C - v). Needs a current w.
double comparison_margin(const SimState& state, double tau);

/// max over cells of (A⁻¹[u γ(v)] - w).
double monotone_gap(const SimState& state, const DiagnosticContext& ctx);

/// max(‖u - Λ e^{χv}/∫e^{χv}‖∞, ‖v - Δv - u‖∞) with Λ = mass.
double steady_state_residual(const Field& u, const Field& v, double chi, double mass);

/// Lyapunov-type functional G(t) and Λ(t) of the L log L estimate.
struct LyapunovValues {
    double G = 0.0;
    double Lambda = 0.0;
};
LyapunovValues lyapunov(const SimState& state, const DiagnosticContext& ctx);

/// Evaluate a full record at a sampled state. `prev` (may be null) is the
/// state before the last step, used for the key identity.
DiagnosticsRecord sample_record(const SimState& state, const SimState* prev, const DiagnosticContext& ctx);

struct OdiCheckReport {
    bool holds = true;
    double worst_margin = 0.0;
    double K_beta = 0.0;
    double m = 0.0;
    /// Index of the sample that attains worst_margin.
    std::size_t worst_index = 0;
};

/// Verifies Λ(t) ≤ Λ(0) e^{m - λt} + e^m K_β on a uniformly sampled series,
/// where m = max_{s≤t}(∫ₛᵗ α - λ(t-s)) and K_β = max_t ∫₀ᵗ β e^{λ(s-t)} ds
/// (trapezoid rule). Throws InvalidArgument for non-uniform sampling,
/// negative α or β, or λ ≤ 0.
OdiCheckReport gronwall_check(std::span<const double> t, std::span<const double> Lambda,
                              std::span<const double> alpha, std::span<const double> beta, double lambda,
                              double tolerance);

/// ‖w‖²_{H¹}(t) + ∫₀ᵗ e^{2(s-t)} q(s) ds for every sample (trapezoid).
std::vector<double> dual_estimate_value(std::span<const double> t, std::span<const double> w_h1sq,
                                        std::span<const double> q);

/// Running form of dual_estimate_value used during a run.
class DualAccumulator {
public:
    double push(double t, double w_h1sq, double q);

private:
    bool started_ = false;
    double t_ = 0.0;
    double q_ = 0.0;
    double integral_ = 0.0;
};

/// |Δmass/Δt + ½(∫uf(u)_k + ∫uf(u)_{k+1})| for consecutive samples.
/// Throws InvalidArgument on misaligned inputs.
std::vector<double> mass_identity_residual(std::span<const double> t, std::span<const double> mass,
                                           std::span<const double> source_integral);

enum class Trend { Bounded, Growing, Inconclusive };
std::string to_string(Trend trend);

/// Kendall rank correlation (τ-a) of `values` against their index.
double kendall_tau(std::span<const double> values);

/// Classifies the last `window_frac` of a series. Needs ≥ 20 samples.
Trend blowup_classify(std::span<const double> t, std::span<const double> values, double window_frac = 0.5,
                      double growth_factor = 1.05);

}  // namespace dsmks
