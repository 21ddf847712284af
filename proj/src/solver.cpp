#include "dsmks/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "dsmks/error.hpp"

namespace dsmks {

namespace {

constexpr int kMaxRetries = 8;

bool source_vanishes(const SourceSpec& s) {
    return s.family == SourceFamily::Zero || (s.family == SourceFamily::Constant && s.c == 0.0);
}

double derive_b0(const ModelParams& model, double a1) {
    try {
        const double list[] = {a1};
        return derive_constants(model.source, list, a1).b0;
    } catch (const AssumptionViolated&) {
        return minimal_b0(model.source);
    }
}

void check_profile(const InitialProfile& p, const Grid& grid, std::string_view what) {
    if (p.mass && p.mass_ratio) throw InvalidArgument(std::string(what) + ": give either mass or mass_ratio");
    if (p.mass && !(*p.mass > 0.0)) throw InvalidArgument(std::string(what) + ": mass must be > 0");
    if (p.mass_ratio && !(*p.mass_ratio > 0.0)) throw InvalidArgument(std::string(what) + ": mass_ratio must be > 0");
    if (!(p.noise >= 0.0 && p.noise < 1.0)) throw InvalidArgument(std::string(what) + ": noise must lie in [0,1)");
    if (p.kind == ProfileKind::Gaussian && !(p.width > 0.0)) {
        throw InvalidArgument(std::string(what) + ": gaussian width must be > 0");
    }
    if (p.kind == ProfileKind::Table && p.table.size() != grid.size()) {
        throw InvalidArgument(std::string(what) + ": table has " + std::to_string(p.table.size()) +
                              " values, grid has " + std::to_string(grid.size()) + " cells");
    }
}

}  // namespace

Grid GridSpec::build() const {
    return make_grid(dim, std::span<const int>(n.data(), static_cast<std::size_t>(std::clamp(dim, 0, 2))),
                     std::span<const double>(length.data(), static_cast<std::size_t>(std::clamp(dim, 0, 2))));
}

Field make_profile(const Grid& grid, const InitialProfile& p, double chi, std::uint64_t seed) {
    Field out(grid);
    switch (p.kind) {
        case ProfileKind::Constant:
            out = Field(grid, p.value);
            break;
        case ProfileKind::Cosine:
            out = Field::from_function(grid, [&](double x, double y) {
                double prod = 1.0;
                const double coord[2] = {x, y};
                for (int a = 0; a < grid.dim; ++a) {
                    if (p.modes[a] != 0) prod *= std::cos(p.modes[a] * std::numbers::pi * coord[a] / grid.length[a]);
                }
                return p.value + p.amplitude * prod;
            });
            break;
        case ProfileKind::Gaussian:
            out = Field::from_function(grid, [&](double x, double y) {
                const double dx = x - p.center[0];
                const double dy = grid.dim == 2 ? y - p.center[1] : 0.0;
                return p.value + p.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * p.width * p.width));
            });
            break;
        case ProfileKind::Table:
            out = Field(grid, p.table);
            break;
        case ProfileKind::Elliptic:
            throw InvalidArgument("elliptic profile needs the density; use Simulator::init_state");
    }
    if (p.noise > 0.0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] *= 1.0 + p.noise * unit(rng);
    }
    if (p.mass || p.mass_ratio) {
        const double target = p.mass ? *p.mass : *p.mass_ratio * 4.0 * std::numbers::pi / chi;
        const double current = integrate(out);
        if (!(current > 0.0)) throw InvalidArgument("cannot rescale a profile with nonpositive integral");
        out *= target / current;
    }
    return out;
}

void RunConfig::validate() const {
    const Grid g = grid.build();
    model.validate();
    if (!(T_end >= 0.0) || !std::isfinite(T_end)) throw InvalidArgument("T_end ≥ 0 required");
    if (!(sample_every > 0.0) || !std::isfinite(sample_every)) throw InvalidArgument("sample_every > 0 required");
    if (!(dt.safety > 0.0 && dt.safety <= 1.0)) throw InvalidArgument("dt safety must lie in (0,1]");
    if (dt.mode == DtMode::Fixed && !(dt.dt > 0.0)) throw InvalidArgument("fixed dt policy needs dt > 0");
    if (dt.dt_max && !(*dt.dt_max > 0.0)) throw InvalidArgument("dt_max must be > 0");
    if (dt.scheme == TransportScheme::Implicit && model.mode != ModelMode::DensitySuppressed) {
        throw InvalidArgument("implicit transport needs the density-suppressed mode");
    }
    if (!(solver.tol > 0.0)) throw InvalidArgument("solver tol must be > 0");
    if (solver.max_iterations < 0) throw InvalidArgument("solver max_iterations must be ≥ 0");
    if (!(diagnostics.M > 0.0)) throw InvalidArgument("diagnostic M must be > 0");
    if (!std::isfinite(diagnostics.C0)) throw InvalidArgument("diagnostic C0 must be finite");
    if (!(diagnostics.a1_for_b0 > 0.0)) throw InvalidArgument("a1 must be > 0");
    if (!(diagnostics.blowup_fraction >= 0.0 && diagnostics.blowup_fraction <= 1.0)) {
        throw InvalidArgument("blowup_fraction must lie in [0,1]");
    }
    if (!(diagnostics.window_frac > 0.0 && diagnostics.window_frac <= 1.0)) {
        throw InvalidArgument("window_frac must lie in (0,1]");
    }
    if (!(diagnostics.growth_factor > 1.0)) throw InvalidArgument("growth_factor must be > 1");
    if (output.snapshot_stride < 0) throw InvalidArgument("snapshot_stride must be ≥ 0");

    if (u0.kind == ProfileKind::Elliptic) throw InvalidArgument("initial u cannot be elliptic");
    check_profile(u0, g, "initial u");
    check_profile(v0, g, "initial v");
    const Field u = make_profile(g, u0, model.chi(), seed);
    if (!u.all_finite()) throw InvalidArgument("initial u must be finite");
    if (u.min() < 0.0) throw InvalidArgument("initial u ≥ 0 required");
    if (!(u.max() > 0.0)) throw InvalidArgument("initial u must not vanish identically");
    if (model.tau > 0.0 && v0.kind != ProfileKind::Elliptic) {
        const Field v = make_profile(g, v0, model.chi(), seed + 1);
        if (!v.all_finite()) throw InvalidArgument("initial v must be finite");
        if (v.min() < 0.0) throw InvalidArgument("initial v ≥ 0 required when τ > 0");
    }
}

std::string to_string(ExitStatus s) {
    switch (s) {
        case ExitStatus::Completed: return "Completed";
        case ExitStatus::BlowupSuspected: return "BlowupSuspected";
        case ExitStatus::StiffnessFailure: return "StiffnessFailure";
        case ExitStatus::NumericalFailure: return "NumericalFailure";
    }
    return "?";
}

int exit_code(ExitStatus s) {
    switch (s) {
        case ExitStatus::Completed: return 0;
        case ExitStatus::BlowupSuspected: return 2;
        case ExitStatus::StiffnessFailure: return 3;
        case ExitStatus::NumericalFailure: return 4;
    }
    return 1;
}

Simulator::Simulator(RunConfig config)
    : config_((config.validate(), std::move(config))),
      grid_(config_.grid.build()),
      solver_(grid_, config_.solver) {
    ctx_.solver = &solver_;
    ctx_.model = config_.model;
    ctx_.b0 = derive_b0(config_.model, config_.diagnostics.a1_for_b0);
    ctx_.M = config_.diagnostics.M;
    ctx_.C0 = config_.diagnostics.C0;
    pos_tol_ = 1e-10 * norm(make_profile(grid_, config_.u0, config_.model.chi(), config_.seed), Norm::Linf);
    h_active_ = config_.model.tau > 0.0 && !(source_vanishes(config_.model.source) && ctx_.b0 == 0.0);
}

SimState Simulator::init_state() const {
    const double tau = config_.model.tau;
    const double chi = config_.model.chi();
    SimState s;
    s.u = make_profile(grid_, config_.u0, chi, config_.seed);
    s.w = solver_.helmholtz(s.u);
    s.w_current = true;
    if (tau == 0.0 || config_.v0.kind == ProfileKind::Elliptic) {
        s.v = s.w;
    } else {
        s.v = make_profile(grid_, config_.v0, chi, config_.seed + 1);
    }
    s.h = Field(grid_, 0.0);
    s.C_cmp = comparison_constant(s.u, s.v, s.w, tau, chi);
    return s;
}

double Simulator::stable_dt(const SimState& s) const {
    if (config_.dt.scheme == TransportScheme::Implicit) return std::numeric_limits<double>::infinity();
    const double h = grid_.h_min();
    const int dim = grid_.dim;
    if (config_.model.mode == ModelMode::DensitySuppressed) {
        const double gmax = config_.model.motility(std::max(s.v.min(), 0.0));
        if (!(gmax > 0.0)) return std::numeric_limits<double>::infinity();
        return config_.dt.safety * h * h / (2.0 * dim * gmax);
    }
    const double grad = kernels::omp::max_face_gradient(grid_.shape(), s.v.values());
    return config_.dt.safety / (2.0 * dim * (1.0 / (h * h) + config_.model.chi() * grad / h));
}

double Simulator::select_dt(const SimState& s, bool* above_bound) const {
    const double bound = stable_dt(s);
    double dt = 0.0;
    if (config_.dt.mode == DtMode::Fixed) {
        dt = config_.dt.dt;
        if (above_bound) *above_bound = dt > bound;
    } else {
        dt = std::min(bound, config_.dt.dt_max.value_or(grid_.h_min()));
        if (s.last_retries > 0) dt *= 0.5;
        if (above_bound) *above_bound = false;
    }
    if (dt < 1e-12 * config_.T_end) {
        std::ostringstream os;
        os << "time step " << dt << " underflows at t = " << s.t;
        throw StiffnessFailure(os.str());
    }
    return dt;
}

void Simulator::refresh(SimState& s) const {
    if (config_.model.tau == 0.0) {
        s.w = s.v;
    } else {
        s.w = solver_.helmholtz(s.u);
    }
    s.w_current = true;
}

std::optional<SimState> Simulator::try_step(const SimState& s, double dt, std::size_t* undershoots) const {
    const auto& model = config_.model;
    const double tau = model.tau;
    const std::size_t n = s.u.size();
    const long len = static_cast<long>(n);

    Field transport(grid_);
    if (config_.dt.scheme == TransportScheme::Implicit) {
        transport = implicit_transport(s.u, motility_eval(model.motility, s.v, undershoots), dt);
    } else if (model.mode == ModelMode::DensitySuppressed) {
        const Field gamma = motility_eval(model.motility, s.v, undershoots);
        kernels::omp::laplacian_product(grid_.shape(), s.u.values(), gamma.values(), transport.values());
    } else {
        kernels::omp::keller_segel_rhs(grid_.shape(), model.chi(), s.u.values(), s.v.values(), transport.values());
    }

    SimState next;
    next.t = s.t + dt;
    next.step_count = s.step_count + 1;
    next.dt_last = dt;
    next.C_cmp = s.C_cmp;

    next.u = Field(grid_);
    {
        const Field f = source_eval(model.source, s.u);
        auto out = next.u.values();
#pragma omp parallel for schedule(static)
        for (long k = 0; k < len; ++k) {
            const double fk = f[k];
            const double grow = fk < 0.0 ? -fk : 0.0;
            const double decay = fk > 0.0 ? fk : 0.0;
            out[k] = (s.u[k] + dt * transport[k] + dt * s.u[k] * grow) / (1.0 + dt * decay);
        }
    }
    require_finite(next.u, "u");
    if (next.u.min() < -pos_tol_) return std::nullopt;

    if (tau > 0.0) {
        Field rhs(grid_);
        auto r = rhs.values();
#pragma omp parallel for schedule(static)
        for (long k = 0; k < len; ++k) r[k] = tau * s.v[k] + dt * next.u[k];
        next.v = solver_.solve(rhs, tau + dt, dt);
    } else {
        next.v = solver_.helmholtz(next.u);
        next.w = next.v;
        next.w_current = true;
    }
    require_finite(next.v, "v");
    if (next.v.min() < -pos_tol_) return std::nullopt;

    if (h_active_) {
        const Field f = source_eval(model.source, next.u);
        Field forcing(grid_);
        auto fo = forcing.values();
#pragma omp parallel for schedule(static)
        for (long k = 0; k < len; ++k) fo[k] = next.u[k] * f[k] + ctx_.b0;
        const Field psi = solver_.helmholtz(forcing);
        Field rhs(grid_);
        auto r = rhs.values();
#pragma omp parallel for schedule(static)
        for (long k = 0; k < len; ++k) r[k] = tau * s.h[k] + dt * psi[k];
        next.h = solver_.solve(rhs, tau + dt, dt);
        require_finite(next.h, "h");
        if (next.h.min() < -pos_tol_) return std::nullopt;
    } else {
        next.h = s.h;
    }
    if (!next.w_current) next.w = Field(grid_);
    return next;
}

// Returns Δ(Γu*) for (I - dt ΔΓ) u* = u, so that u* = u + dt·(result) keeps
// the mass exactly. With y = Γ^{1/2} u* the system is the SPD problem
// (I + dt S(-Δ)S) y = S u, S = Γ^{1/2}, solved by preconditioned CG.
Field Simulator::implicit_transport(const Field& u, const Field& gamma, double dt) const {
    const auto shape = grid_.shape();
    const std::size_t n = u.size();
    const long len = static_cast<long>(n);
    std::vector<double> sq(n);
    for (std::size_t k = 0; k < n; ++k) sq[k] = std::sqrt(gamma[k]);
    const double gmin = gamma.min();
    const double gmax = gamma.max();

    std::vector<double> scratch(n);
    std::vector<double> tmp(n);
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
#pragma omp parallel for schedule(static)
        for (long k = 0; k < len; ++k) scratch[k] = a[k] * b[k];
        return kernels::omp::sum(scratch);
    };
    auto apply = [&](const std::vector<double>& y, std::vector<double>& out) {
#pragma omp parallel for schedule(static)
        for (long k = 0; k < len; ++k) tmp[k] = sq[k] * y[k];
        kernels::omp::laplacian(shape, tmp, out);
#pragma omp parallel for schedule(static)
        for (long k = 0; k < len; ++k) out[k] = y[k] - dt * sq[k] * out[k];
    };

    // Nearly uniform motility: the constant-coefficient operator is an
    // excellent preconditioner. Otherwise fall back to the diagonal.
    const bool spectral = config_.solver.method == SolverMethod::Spectral && gmin > 0.0 && gmax <= 4.0 * gmin;
    const double gbar = std::sqrt(gmin * gmax);
    std::vector<double> diag(n);
    for (int j = 0; j < grid_.n[1]; ++j) {
        for (int i = 0; i < grid_.n[0]; ++i) {
            double d = ((i > 0) + (i + 1 < shape.nx)) / (shape.hx * shape.hx);
            if (grid_.dim == 2) d += ((j > 0) + (j + 1 < shape.ny)) / (shape.hy * shape.hy);
            const std::size_t k = static_cast<std::size_t>(j) * shape.nx + i;
            diag[k] = 1.0 + dt * gamma[k] * d;
        }
    }
    auto precondition = [&](const std::vector<double>& r, std::vector<double>& out) {
        if (spectral) {
            const Field z = solver_.solve(Field(grid_, r), 1.0, dt * gbar);
            std::copy(z.values().begin(), z.values().end(), out.begin());
        } else {
            for (std::size_t k = 0; k < n; ++k) out[k] = r[k] / diag[k];
        }
    };

    std::vector<double> b(n);
    for (std::size_t k = 0; k < n; ++k) b[k] = sq[k] * u[k];
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = b[k] / diag[k];
    std::vector<double> r(n), s(n), p(n), q(n);
    apply(y, q);
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - q[k];
    const double bnorm = std::sqrt(dot(b, b));
    const double target = 1e-13 * bnorm;
    double rnorm = std::sqrt(dot(r, r));
    const int max_it = 10 * static_cast<int>(n);
    int it = 0;
    if (rnorm > target) {
        precondition(r, s);
        p = s;
        double rs = dot(r, s);
        for (; it < max_it; ++it) {
            apply(p, q);
            const double alpha = rs / dot(p, q);
#pragma omp parallel for schedule(static)
            for (long k = 0; k < len; ++k) {
                y[k] += alpha * p[k];
                r[k] -= alpha * q[k];
            }
            rnorm = std::sqrt(dot(r, r));
            if (rnorm <= target) break;
            precondition(r, s);
            const double rs_new = dot(r, s);
            const double beta = rs_new / rs;
            rs = rs_new;
#pragma omp parallel for schedule(static)
            for (long k = 0; k < len; ++k) p[k] = s[k] + beta * p[k];
        }
    }
    if (rnorm > target) {
        std::ostringstream os;
        os << "implicit transport solve did not converge in " << max_it << " iterations";
        throw SolverFailure(os.str(), rnorm / bnorm);
    }
    for (std::size_t k = 0; k < n; ++k) tmp[k] = sq[k] * y[k];
    Field out(grid_);
    kernels::omp::laplacian(shape, tmp, out.values());
    return out;
}

SimState Simulator::step(const SimState& s, double dt, std::size_t* undershoots) const {
    double d = dt;
    for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
        if (auto next = try_step(s, d, undershoots)) {
            next->last_retries = attempt;
            return std::move(*next);
        }
        d *= 0.5;
    }
    std::ostringstream os;
    os << "positivity lost at t = " << s.t << " after " << kMaxRetries << " step halvings";
    throw NumericalFailure(os.str());
}

double Simulator::step_mass_residual(const SimState& s, const SimState& next) const {
    const double dt = next.t - s.t;
    const Field f = source_eval(config_.model.source, s.u);
    Field split(grid_);
    for (std::size_t k = 0; k < split.size(); ++k) {
        const double fk = f[k];
        split[k] = next.u[k] * std::max(fk, 0.0) - s.u[k] * std::max(-fk, 0.0);
    }
    return std::abs(integrate(next.u) - integrate(s.u) + dt * integrate(split));
}

RunResult Simulator::run(const RunCallbacks& cb) const {
    RunResult result;
    SimState state = init_state();
    const double T = config_.T_end;
    const double cell = grid_.cell_volume();
    DualAccumulator dual;
    double mass_residual = 0.0;
    long sample_index = 0;
    double last_snapshot_t = -1.0;
    bool warned = false;
    std::optional<SimState> prev;

    auto emit_snapshot = [&](const SimState& s) {
        if (cb.on_snapshot && s.t != last_snapshot_t) {
            cb.on_snapshot(s);
            last_snapshot_t = s.t;
        }
    };

    auto take_sample = [&]() -> bool {
        refresh(state);
        DiagnosticsRecord rec = sample_record(state, prev ? &*prev : nullptr, ctx_);
        rec.mass_residual = mass_residual;
        rec.dual_estimate = dual.push(rec.t, rec.w_h1sq, rec.u2_weighted);
        mass_residual = 0.0;
        result.series.push_back(rec);
        if (cb.on_sample) cb.on_sample(state, rec);
        const int stride = config_.output.snapshot_stride;
        if (stride > 0 && sample_index % stride == 0) emit_snapshot(state);
        ++sample_index;
        const double frac = config_.diagnostics.blowup_fraction;
        if (frac > 0.0 && rec.mass > 0.0 && rec.linf_u * cell / rec.mass > frac) {
            std::ostringstream os;
            os << "a single cell holds " << rec.linf_u * cell / rec.mass << " of the mass at t = " << rec.t;
            result.status = ExitStatus::BlowupSuspected;
            result.message = os.str();
            return false;
        }
        return true;
    };

    if (T > 0.0) {
        bool go = take_sample();
        long k = 1;
        try {
            while (go && state.t < T) {
                const double target = std::min(static_cast<double>(k) * config_.sample_every, T);
                bool above = false;
                double dt = select_dt(state, &above);
                if (above && !warned) {
                    warned = true;
                    if (cb.on_warning) {
                        std::ostringstream os;
                        os << "fixed dt " << dt << " exceeds the stability bound " << stable_dt(state);
                        cb.on_warning(os.str());
                    }
                }
                const bool landing = state.t + dt >= target - 1e-12 * T;
                if (landing) {
                    dt = target - state.t;
                    prev = state;
                }
                SimState next = step(state, dt, &result.undershoots);
                result.retries += next.last_retries;
                mass_residual = std::max(mass_residual, step_mass_residual(state, next));
                const bool reached = landing && next.last_retries == 0;
                if (reached) next.t = target;
                state = std::move(next);
                if (reached) {
                    go = take_sample();
                    prev.reset();
                    if (target == static_cast<double>(k) * config_.sample_every) ++k;
                }
            }
        } catch (const StiffnessFailure& e) {
            result.status = ExitStatus::StiffnessFailure;
            result.message = e.what();
        } catch (const NumericalFailure& e) {
            result.status = ExitStatus::NumericalFailure;
            result.message = e.what();
        } catch (const SolverFailure& e) {
            result.status = ExitStatus::NumericalFailure;
            result.message = e.what();
        }
    }
    if (!state.w_current) refresh(state);
    emit_snapshot(state);
    result.steps = state.step_count;
    result.final_state = std::move(state);
    return result;
}

}  // namespace dsmks
