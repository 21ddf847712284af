#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dsmks/solver.hpp"
#include "support.hpp"

using namespace dsmks;
using std::numbers::pi;
using testing_support::max_abs_diff;

namespace {

RunConfig base_config(int dim, int n, double L = 1.0) {
    RunConfig c;
    c.grid.dim = dim;
    c.grid.n = {n, dim == 2 ? n : 1};
    c.grid.length = {L, dim == 2 ? L : 1.0};
    return c;
}

InitialProfile cosine(double value, double amplitude) {
    InitialProfile p;
    p.kind = ProfileKind::Cosine;
    p.value = value;
    p.amplitude = amplitude;
    return p;
}

SourceSpec constant_source(double c) {
    SourceSpec s;
    s.family = SourceFamily::Constant;
    s.c = c;
    s.sample_max = 10.0;
    return s;
}

}  // namespace

TEST_CASE("init_state for constant data") {
    RunConfig c = base_config(2, 16);
    const Simulator sim(c);
    const SimState s = sim.init_state();
    CHECK(max_abs_diff(s.w, Field(sim.grid(), 1.0)) <= 1e-14);
    CHECK(s.h.max() == 0.0);
    CHECK(s.h.min() == 0.0);
    CHECK(s.C_cmp == doctest::Approx(1.0));
    CHECK(s.w_current);
}

TEST_CASE("init_state with tau = 0 uses the elliptic signal") {
    RunConfig c = base_config(1, 128);
    c.model.tau = 0.0;
    c.u0 = cosine(1.0, 0.1);
    c.v0 = constant_profile(5.0);
    const Simulator sim(c);
    const SimState s = sim.init_state();
    const Field expect = Field::from_function(sim.grid(), [](double x, double) {
        return 1.0 + 0.1 * std::cos(pi * x) / (1.0 + pi * pi);
    });
    CHECK(max_abs_diff(s.v, expect) <= 1e-4);
    CHECK(max_abs_diff(s.v, s.w) == 0.0);
    CHECK(s.C_cmp == 0.0);
}

TEST_CASE("invalid configurations are rejected") {
    RunConfig c = base_config(2, 16);
    c.u0 = constant_profile(0.0);
    CHECK_THROWS_AS(Simulator{c}, InvalidArgument);
    c = base_config(2, 16);
    c.u0 = constant_profile(-1.0);
    CHECK_THROWS_AS(Simulator{c}, InvalidArgument);
    c = base_config(2, 16);
    c.v0 = constant_profile(-1.0);
    CHECK_THROWS_AS(Simulator{c}, InvalidArgument);
    c.model.tau = 0.0;
    CHECK_NOTHROW(Simulator{c});
    c = base_config(2, 16);
    c.T_end = -1.0;
    CHECK_THROWS_AS(Simulator{c}, InvalidArgument);
    c = base_config(2, 16);
    c.model.mode = ModelMode::MinimalKS;
    c.dt.scheme = TransportScheme::Implicit;
    CHECK_THROWS_AS(Simulator{c}, InvalidArgument);
    c = base_config(2, 16);
    c.dt.mode = DtMode::Fixed;
    CHECK_THROWS_AS(Simulator{c}, InvalidArgument);
}

TEST_CASE("select_dt follows the explicit bound, the cap and the retry halving") {
    RunConfig c = base_config(1, 64);
    const Simulator sim(c);
    SimState s = sim.init_state();
    s.v = Field(sim.grid(), 0.0);
    CHECK(sim.select_dt(s) == doctest::Approx(0.4 / (2.0 * 64 * 64)).epsilon(1e-14));
    s.last_retries = 1;
    CHECK(sim.select_dt(s) == doctest::Approx(0.2 / (2.0 * 64 * 64)).epsilon(1e-14));
    s.last_retries = 0;
    s.v = Field(sim.grid(), 1000.0);
    CHECK(sim.select_dt(s) == doctest::Approx(1.0 / 64));

    c.dt.mode = DtMode::Fixed;
    c.dt.dt = 1e-3;
    const Simulator fixed(c);
    bool above = false;
    CHECK(fixed.select_dt(fixed.init_state(), &above) == 1e-3);
    CHECK(above);
    c.dt.dt = 1e-6;
    const Simulator fine(c);
    CHECK(fine.select_dt(fine.init_state(), &above) == 1e-6);
    CHECK_FALSE(above);

    RunConfig stiff = base_config(1, 8);
    stiff.T_end = 1e10;
    stiff.sample_every = 1e9;
    const Simulator st(stiff);
    CHECK_THROWS_AS(st.select_dt(st.init_state()), StiffnessFailure);
    CHECK(st.run().status == ExitStatus::StiffnessFailure);
}

TEST_CASE("implicit transport has no stability bound") {
    RunConfig c = base_config(2, 16);
    c.dt.scheme = TransportScheme::Implicit;
    c.dt.dt_max = 0.05;
    const Simulator sim(c);
    CHECK(std::isinf(sim.stable_dt(sim.init_state())));
    CHECK(sim.select_dt(sim.init_state()) == 0.05);
}

TEST_CASE("steady constants are unchanged by a step") {
    for (double tau : {0.0, 1.0}) {
        for (TransportScheme scheme : {TransportScheme::Explicit, TransportScheme::Implicit}) {
            RunConfig c = base_config(2, 16);
            c.model.tau = tau;
            c.u0 = constant_profile(1.3);
            c.v0 = constant_profile(1.3);
            c.dt.scheme = scheme;
            const Simulator sim(c);
            const SimState s = sim.init_state();
            const SimState next = sim.step(s, sim.select_dt(s));
            CHECK(max_abs_diff(next.u, s.u) <= 1e-14);
            CHECK(max_abs_diff(next.v, s.v) <= 1e-14);
        }
    }
}

TEST_CASE("uniform decay under a constant unit source") {
    RunConfig c = base_config(2, 16);
    c.model.source = constant_source(1.0);
    c.u0 = cosine(1.0, 0.3);
    const Simulator sim(c);
    SimState s = sim.init_state();
    const double m0 = integrate(s.u);
    const double dt = 1e-3;
    const SimState one = sim.step(s, dt);
    CHECK(integrate(one.u) == doctest::Approx(m0 / (1.0 + dt)).epsilon(1e-13));
    for (int k = 0; k < 100; ++k) s = sim.step(s, dt);
    CHECK(integrate(s.u) == doctest::Approx(m0 * std::pow(1.0 + dt, -100)).epsilon(1e-12));
}

TEST_CASE("mass is conserved without a source") {
    for (TransportScheme scheme : {TransportScheme::Explicit, TransportScheme::Implicit}) {
        RunConfig c = base_config(2, 24, 2.0);
        c.u0 = cosine(1.0, 0.8);
        c.u0.modes = {1, 2};
        c.dt.scheme = scheme;
        const Simulator sim(c);
        SimState s = sim.init_state();
        const double m0 = integrate(s.u);
        for (int k = 0; k < 500; ++k) {
            const SimState next = sim.step(s, sim.select_dt(s));
            CHECK(sim.step_mass_residual(s, next) <= 1e-12 * m0);
            s = next;
        }
        CHECK(std::abs(integrate(s.u) - m0) <= 1e-12 * m0);
        CHECK(s.u.min() >= -sim.pos_tol());
    }
}

TEST_CASE("sublogistic step keeps the split mass law and positivity") {
    RunConfig c = base_config(1, 64);
    c.model.source.family = SourceFamily::SubLogistic;
    c.model.source.lambda = 0.5;
    c.u0 = cosine(1.0, 0.9);
    c.v0.kind = ProfileKind::Elliptic;
    const Simulator sim(c);
    SimState s = sim.init_state();
    const double m0 = integrate(s.u);
    for (int k = 0; k < 200; ++k) {
        const SimState next = sim.step(s, sim.select_dt(s));
        CHECK(sim.step_mass_residual(s, next) <= 1e-12 * m0);
        CHECK(next.h.min() >= -sim.pos_tol());
        s = next;
    }
}

TEST_CASE("run with T_end = 0 completes with an empty series") {
    RunConfig c = base_config(2, 16);
    c.T_end = 0.0;
    const RunResult r = Simulator(c).run();
    CHECK(r.status == ExitStatus::Completed);
    CHECK(r.series.empty());
    CHECK(r.steps == 0);
}

TEST_CASE("run samples on the configured cadence and keeps w and v consistent") {
    for (double tau : {0.0, 1.0}) {
        RunConfig c = base_config(1, 64);
        c.model.tau = tau;
        c.u0 = cosine(1.0, 0.5);
        c.v0.kind = ProfileKind::Elliptic;
        c.T_end = 0.05;
        c.sample_every = 0.01;
        const Simulator sim(c);
        std::vector<double> w_err;
        RunCallbacks cb;
        cb.on_sample = [&](const SimState& s, const DiagnosticsRecord&) {
            w_err.push_back(max_abs_diff(s.w, sim.solver().helmholtz(s.u)));
            if (tau == 0.0) CHECK(max_abs_diff(s.v, s.w) <= 1e-9);
        };
        const RunResult r = sim.run(cb);
        REQUIRE(r.status == ExitStatus::Completed);
        REQUIRE(r.series.size() == 6);
        for (std::size_t k = 0; k < r.series.size(); ++k) {
            CHECK(r.series[k].t == doctest::Approx(0.01 * static_cast<double>(k)).epsilon(1e-12));
        }
        for (double e : w_err) CHECK(e <= 1e-9);
    }
}

TEST_CASE("runs are deterministic") {
    RunConfig c = base_config(2, 32);
    c.model.source.family = SourceFamily::SubLogistic;
    c.u0 = cosine(1.0, 0.5);
    c.u0.modes = {1, 1};
    c.u0.noise = 0.1;
    c.v0.kind = ProfileKind::Elliptic;
    c.T_end = 0.05;
    c.sample_every = 0.01;
    const RunResult a = Simulator(c).run();
    const RunResult b = Simulator(c).run();
    REQUIRE(a.series.size() == b.series.size());
    for (std::size_t k = 0; k < a.series.size(); ++k) {
        CHECK(a.series[k].linf_u == b.series[k].linf_u);
        CHECK(a.series[k].entropy_E == b.series[k].entropy_E);
        CHECK(a.series[k].cmp_margin == b.series[k].cmp_margin);
    }
    CHECK(max_abs_diff(a.final_state.u, b.final_state.u) == 0.0);
}

TEST_CASE("density converges at first order in dt and second order in h") {
    auto run_to = [](int n, double dt) {
        RunConfig c = base_config(1, n);
        c.model.source.family = SourceFamily::SubLogistic;
        c.u0 = cosine(1.0, 0.5);
        c.v0.kind = ProfileKind::Elliptic;
        c.T_end = 0.5;
        c.sample_every = 0.5;
        c.dt.mode = DtMode::Fixed;
        c.dt.dt = dt;
        const RunResult r = Simulator(c).run();
        REQUIRE(r.status == ExitStatus::Completed);
        return r.final_state.u;
    };
    // Time order on a fixed grid against a dt/8 reference.
    const Field ref_t = run_to(32, 1e-4 / 8);
    const double e1 = norm(run_to(32, 1e-4) - ref_t, Norm::Linf);
    const double e2 = norm(run_to(32, 5e-5) - ref_t, Norm::Linf);
    CHECK(std::log2(e1 / e2) >= 0.9);

    // Space order with a small dt, comparing cell averages on the coarse grid.
    auto restrict_to = [](const Field& fine, const Grid& coarse) {
        Field out(coarse);
        const std::size_t r = fine.size() / coarse.size();
        for (std::size_t k = 0; k < coarse.size(); ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < r; ++j) s += fine[k * r + j];
            out[k] = s / static_cast<double>(r);
        }
        return out;
    };
    const double dt = 5e-6;
    const Field f16 = run_to(16, dt), f32 = run_to(32, dt), f64 = run_to(64, dt);
    const double h1 = norm(f16 - restrict_to(f64, f16.grid()), Norm::Linf);
    const double h2 = norm(f32 - restrict_to(f64, f32.grid()), Norm::Linf);
    CHECK(std::log2(h1 / h2) >= 1.8);
}

TEST_CASE("minimal Keller-Segel mode conserves mass and stays positive") {
    RunConfig c = base_config(2, 32);
    c.model.mode = ModelMode::MinimalKS;
    c.u0 = cosine(1.0, 0.5);
    c.u0.modes = {1, 1};
    c.v0.kind = ProfileKind::Elliptic;
    const Simulator sim(c);
    SimState s = sim.init_state();
    const double m0 = integrate(s.u);
    for (int k = 0; k < 200; ++k) s = sim.step(s, sim.select_dt(s));
    CHECK(std::abs(integrate(s.u) - m0) <= 1e-12 * m0);
    CHECK(s.u.min() >= -sim.pos_tol());
}
