#include "dsmks/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "dsmks/error.hpp"

namespace dsmks {

namespace {

constexpr double kInvE = 1.0 / std::numbers::e;

template <class F>
Field pointwise(const Grid& grid, std::size_t n, F&& fn) {
    Field out(grid);
    auto o = out.values();
    const auto len = static_cast<long>(n);
#pragma omp parallel for schedule(static)
    for (long k = 0; k < len; ++k) o[k] = fn(static_cast<std::size_t>(k));
    return out;
}

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

const ScreenedSolver& require_solver(const DiagnosticContext& ctx) {
    if (!ctx.solver) throw InvalidArgument("diagnostic context has no solver");
    return *ctx.solver;
}

Field current_w(const SimState& s, const ScreenedSolver& solver) {
    return s.w_current ? s.w : solver.helmholtz(s.u);
}

}  // namespace

double llogl(const Field& u) {
    return integrate(pointwise(u.grid(), u.size(), [&](std::size_t k) { return xlogx(u[k]) + kInvE; }));
}

double entropy_E(const Field& u, const Field& v, double chi) {
    require_same_grid(u, v);
    const Field density = pointwise(u.grid(), u.size(), [&](std::size_t k) {
        return xlogx(u[k]) + 0.5 * chi * v[k] * v[k] - chi * u[k] * v[k];
    });
    return integrate(density) + 0.5 * chi * dirichlet_energy(v);
}

double default_eps_log(const Field& u) { return 1e-30 + 1e-12 * norm(u, Norm::Linf); }

double dissipation_D(const Field& u, const Field& v, double chi, double eps_log, bool weighted) {
    require_same_grid(u, v);
    const auto shape = u.grid().shape();
    const Field potential = pointwise(u.grid(), u.size(), [&](std::size_t k) {
        return std::log(std::max(u[k], 0.0) + eps_log) - chi * v[k];
    });
    if (!weighted) return kernels::omp::face_weighted_energy(shape, u.values(), potential.values());
    const Field flux_density =
        pointwise(u.grid(), u.size(), [&](std::size_t k) { return std::exp(potential[k]); });
    return kernels::omp::face_cross_energy(shape, flux_density.values(), potential.values());
}

std::vector<double> entropy_identity_residual(std::span<const DiagnosticsRecord> series, double tau, double chi) {
    if (series.size() < 3) throw InvalidArgument("entropy identity residual needs at least three samples");
    std::vector<double> out;
    out.reserve(series.size() - 2);
    for (std::size_t k = 1; k + 1 < series.size(); ++k) {
        const auto& a = series[k - 1];
        const auto& b = series[k];
        const auto& c = series[k + 1];
        const double dEdt = (c.entropy_E - a.entropy_E) / (c.t - a.t);
        out.push_back(std::abs(dEdt + b.dissipation_D + tau * chi * b.vt_l2sq + b.entropy_source));
    }
    return out;
}

namespace {

// Right-hand side T of w_t = -T for the active model.
Field identity_terms(const SimState& s, const DiagnosticContext& ctx) {
    const auto& solver = require_solver(ctx);
    const Field f = source_eval(ctx.model.source, s.u);
    if (ctx.model.mode == ModelMode::DensitySuppressed) {
        const Field ug = hadamard(s.u, motility_eval(ctx.model.motility, s.v));
        const Field rhs = pointwise(s.u.grid(), s.u.size(), [&](std::size_t k) { return s.u[k] * f[k] - ug[k]; });
        return ug + solver.helmholtz(rhs);
    }
    Field transport(s.u.grid());
    kernels::omp::keller_segel_rhs(s.u.grid().shape(), ctx.model.chi(), s.u.values(), s.v.values(),
                                   transport.values());
    const Field rhs =
        pointwise(s.u.grid(), s.u.size(), [&](std::size_t k) { return s.u[k] * f[k] - transport[k]; });
    return solver.helmholtz(rhs);
}

}  // namespace

double key_identity_residual(const SimState& prev, const SimState& next, const DiagnosticContext& ctx) {
    const auto& solver = require_solver(ctx);
    const double dt = next.t - prev.t;
    if (!(dt > 0.0)) throw InvalidArgument("key identity residual needs two states with increasing time");
    const Field w0 = current_w(prev, solver);
    const Field w1 = current_w(next, solver);
    const Field t0 = identity_terms(prev, ctx);
    const Field t1 = identity_terms(next, ctx);
    double worst = 0.0;
    for (std::size_t k = 0; k < w0.size(); ++k) {
        const double r = (w1[k] - w0[k]) / dt + 0.5 * (t0[k] + t1[k]);
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

double comparison_constant(const Field& u_in, const Field& v_in, const Field& w_in, double tau, double chi) {
    require_same_grid(u_in, v_in);
    require_same_grid(u_in, w_in);
    double c = tau / chi;
    for (std::size_t k = 0; k < v_in.size(); ++k) {
        c = std::max(c, v_in[k] + (tau / chi) * std::exp(-chi * v_in[k]) - w_in[k]);
    }
    return c;
}

double comparison_margin(const SimState& state, double tau) {
    if (!state.w_current) throw InvalidArgument("comparison margin needs a current w");
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < state.v.size(); ++k) {
        m = std::min(m, state.w[k] + tau * state.h[k] + state.C_cmp - state.v[k]);
    }
    return m;
}

double monotone_gap(const SimState& state, const DiagnosticContext& ctx) {
    const auto& solver = require_solver(ctx);
    const Field w = current_w(state, solver);
    const Field phi = solver.helmholtz(hadamard(state.u, motility_eval(ctx.model.motility, state.v)));
    double gap = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < w.size(); ++k) gap = std::max(gap, phi[k] - w[k]);
    return gap;
}

double steady_state_residual(const Field& u, const Field& v, double chi, double mass) {
    require_same_grid(u, v);
    if (!(mass > 0.0)) throw InvalidArgument("steady-state residual needs a positive mass");
    const double vmax = v.max();
    const Field boltz = pointwise(u.grid(), u.size(), [&](std::size_t k) { return std::exp(chi * (v[k] - vmax)); });
    const double z = integrate(boltz);
    const Field lap = laplacian_neumann(v);
    double r_u = 0.0;
    double r_v = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        r_u = std::max(r_u, std::abs(u[k] - mass * boltz[k] / z));
        r_v = std::max(r_v, std::abs(v[k] - lap[k] - u[k]));
    }
    return std::max(r_u, r_v);
}

LyapunovValues lyapunov(const SimState& state, const DiagnosticContext& ctx) {
    const double tau = ctx.model.tau;
    const double chi = ctx.model.chi();
    const double vol = state.u.grid().volume;
    LyapunovValues out;
    out.G = entropy_E(state.u, state.v, chi) + (kInvE + 1.0) * vol + ctx.C0;
    const double lambda = 2.0 * ctx.M * tau * ctx.b0;
    const double v_l2sq = inner(state.v, state.v);
    const double h_h1sq = dirichlet_energy(state.h) + inner(state.h, state.h);
    out.Lambda = out.G + lambda * tau * v_l2sq + 0.5 * tau * tau * h_h1sq;
    return out;
}

DiagnosticsRecord sample_record(const SimState& state, const SimState* prev, const DiagnosticContext& ctx) {
    const auto& solver = require_solver(ctx);
    const double tau = ctx.model.tau;
    const double chi = ctx.model.chi();
    const bool dsm = ctx.model.mode == ModelMode::DensitySuppressed;

    SimState s = state;
    if (!s.w_current) {
        s.w = solver.helmholtz(s.u);
        s.w_current = true;
    }

    DiagnosticsRecord r;
    r.t = s.t;
    r.step = s.step_count;
    r.dt = s.dt_last;
    r.mass = integrate(s.u);
    r.linf_u = norm(s.u, Norm::Linf);
    r.linf_v = norm(s.v, Norm::Linf);
    r.min_u = s.u.min();
    r.min_v = s.v.min();
    r.min_w = s.w.min();
    r.min_h = s.h.min();
    r.llogl = llogl(s.u);
    r.entropy_E = entropy_E(s.u, s.v, chi);
    r.dissipation_D = dissipation_D(s.u, s.v, chi, ctx.eps_log_abs + ctx.eps_log_rel * r.linf_u, dsm);
    if (tau > 0.0) {
        const Field lap = laplacian_neumann(s.v);
        const Field vt = pointwise(s.u.grid(), s.u.size(),
                                   [&](std::size_t k) { return (lap[k] - s.v[k] + s.u[k]) / tau; });
        r.vt_l2sq = inner(vt, vt);
    }
    const Field f = source_eval(ctx.model.source, s.u);
    r.source_integral = integrate(hadamard(s.u, f));
    r.entropy_source = integrate(pointwise(s.u.grid(), s.u.size(), [&](std::size_t k) {
        const double uk = s.u[k];
        return uk > 0.0 ? uk * f[k] * (std::log(uk) + 1.0 - chi * s.v[k]) : 0.0;
    }));
    const auto lyap = lyapunov(s, ctx);
    r.lyap_G = lyap.G;
    r.lyap_Lambda = lyap.Lambda;
    r.cmp_margin = comparison_margin(s, tau);
    if (prev && s.t > prev->t) r.key_residual_linf = key_identity_residual(*prev, s, ctx);
    r.w_h1sq = dirichlet_energy(s.w) + inner(s.w, s.w);
    const Field gamma = motility_eval(ctx.model.motility, s.v);
    r.u2_weighted = integrate(pointwise(s.u.grid(), s.u.size(), [&](std::size_t k) {
        return s.u[k] * s.u[k] * gamma[k];
    }));
    r.monotone_gap = monotone_gap(s, ctx);
    r.h_l1 = norm(s.h, Norm::L1);
    r.v_l2 = norm(s.v, Norm::L2);
    r.gradv_l2 = std::sqrt(dirichlet_energy(s.v));
    r.steady_residual = r.mass > 0.0 ? steady_state_residual(s.u, s.v, chi, r.mass) : 0.0;
    return r;
}

OdiCheckReport gronwall_check(std::span<const double> t, std::span<const double> Lambda,
                              std::span<const double> alpha, std::span<const double> beta, double lambda,
                              double tolerance) {
    const std::size_t n = t.size();
    if (n < 2 || Lambda.size() != n || alpha.size() != n || beta.size() != n) {
        throw InvalidArgument("gronwall_check needs aligned series with at least two samples");
    }
    if (!(lambda > 0.0)) throw InvalidArgument("gronwall_check needs lambda > 0");
    const double dt = t[1] - t[0];
    if (!(dt > 0.0)) throw InvalidArgument("gronwall_check needs increasing sample times");
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0 && std::abs((t[k] - t[k - 1]) - dt) > 1e-9 * dt) {
            throw InvalidArgument("gronwall_check needs uniformly sampled series");
        }
        if (alpha[k] < 0.0 || beta[k] < 0.0) throw InvalidArgument("gronwall_check needs alpha, beta >= 0");
    }

    // m = max over s ≤ t of (∫ₛᵗ α - λ(t - s)).
    OdiCheckReport rep;
    double cum = 0.0;
    double low = 0.0;  // min over earlier samples of (A(s) - λ s)
    double m = 0.0;
    double discounted = 0.0;
    double k_beta = 0.0;
    const double decay = std::exp(-lambda * dt);
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) {
            cum += 0.5 * dt * (alpha[k - 1] + alpha[k]);
            discounted = discounted * decay + 0.5 * dt * (beta[k - 1] * decay + beta[k]);
        }
        const double shifted = cum - lambda * (t[k] - t[0]);
        m = std::max(m, shifted - low);
        low = std::min(low, shifted);
        k_beta = std::max(k_beta, discounted);
    }
    rep.m = m;
    rep.K_beta = k_beta;

    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double bound = Lambda[0] * std::exp(m - lambda * (t[k] - t[0])) + std::exp(m) * k_beta;
        const double margin = bound - Lambda[k];
        if (margin < rep.worst_margin) {
            rep.worst_margin = margin;
            rep.worst_index = k;
        }
    }
    rep.holds = rep.worst_margin >= -tolerance;
    return rep;
}

std::vector<double> dual_estimate_value(std::span<const double> t, std::span<const double> w_h1sq,
                                        std::span<const double> q) {
    if (w_h1sq.size() != t.size() || q.size() != t.size()) {
        throw InvalidArgument("dual_estimate_value needs aligned series");
    }
    DualAccumulator acc;
    std::vector<double> out;
    out.reserve(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) out.push_back(acc.push(t[k], w_h1sq[k], q[k]));
    return out;
}

double DualAccumulator::push(double t, double w_h1sq, double q) {
    if (started_) {
        const double dt = t - t_;
        const double decay = std::exp(-2.0 * dt);
        integral_ = integral_ * decay + 0.5 * dt * (q_ * decay + q);
    }
    started_ = true;
    t_ = t;
    q_ = q;
    return w_h1sq + integral_;
}

std::vector<double> mass_identity_residual(std::span<const double> t, std::span<const double> mass,
                                           std::span<const double> source_integral) {
    if (mass.size() != t.size() || source_integral.size() != t.size()) {
        throw InvalidArgument("mass_identity_residual needs aligned series");
    }
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const double dt = t[k + 1] - t[k];
        if (!(dt > 0.0)) throw InvalidArgument("mass_identity_residual needs increasing sample times");
        out.push_back(std::abs((mass[k + 1] - mass[k]) / dt + 0.5 * (source_integral[k] + source_integral[k + 1])));
    }
    return out;
}

std::string to_string(Trend trend) {
    switch (trend) {
        case Trend::Bounded: return "Bounded";
        case Trend::Growing: return "Growing";
        case Trend::Inconclusive: return "Inconclusive";
    }
    return "?";
}

double kendall_tau(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    long long score = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (values[j] > values[i]) ++score;
            else if (values[j] < values[i]) --score;
        }
    }
    return static_cast<double>(score) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

Trend blowup_classify(std::span<const double> t, std::span<const double> values, double window_frac,
                      double growth_factor) {
    if (t.size() != values.size()) throw InvalidArgument("blowup_classify needs aligned series");
    if (values.size() < 20) throw InvalidArgument("blowup_classify needs at least 20 samples");
    if (!(window_frac > 0.0 && window_frac <= 1.0)) throw InvalidArgument("window fraction must lie in (0,1]");
    const double t_start = t.back() - window_frac * (t.back() - t.front());
    std::size_t first = 0;
    while (first < t.size() && t[first] < t_start - 1e-12 * std::abs(t.back())) ++first;
    const auto window = values.subspan(first);
    if (window.size() < 2) return Trend::Inconclusive;

    const double start = window.front();
    const double peak = *std::max_element(window.begin(), window.end());
    const double growth = start > 0.0 ? peak / start : std::numeric_limits<double>::infinity();

    bool monotone = true;
    for (std::size_t k = 1; k < window.size(); ++k) {
        if (window[k] < window[k - 1] - 1e-12 * std::abs(window[k - 1])) {
            monotone = false;
            break;
        }
    }
    if (monotone && start > 0.0 && window.back() / start >= growth_factor) return Trend::Growing;
    if (growth < growth_factor && kendall_tau(window) < 0.5) return Trend::Bounded;
    return Trend::Inconclusive;
}

}  // namespace dsmks
