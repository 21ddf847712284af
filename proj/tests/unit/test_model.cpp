#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dsmks/model.hpp"
#include "support.hpp"

using namespace dsmks;

namespace {

SourceSpec sublog(double mu = 1.0, double alpha = 1.0, double lambda = 0.0) {
    SourceSpec s;
    s.family = SourceFamily::SubLogistic;
    s.mu = mu;
    s.alpha = alpha;
    s.lambda = lambda;
    return s;
}

// Independent maximizer: golden-section search on a unimodal bracket.
template <class F>
double golden_max(F f, double a, double b) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    for (int i = 0; i < 200; ++i) {
        if (f(c) > f(d)) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    return f(0.5 * (a + b));
}

std::vector<double> dense_samples(double smax, std::size_t count) {
    std::vector<double> s(count);
    for (std::size_t i = 0; i < count; ++i) {
        // Half linear on [0,10], half geometric up to smax.
        if (i < count / 2) {
            s[i] = 10.0 * static_cast<double>(i) / static_cast<double>(count / 2);
        } else {
            const double q = static_cast<double>(i - count / 2) / static_cast<double>(count - count / 2 - 1);
            s[i] = 10.0 * std::pow(smax / 10.0, q);
        }
    }
    return s;
}

}  // namespace

TEST_CASE("exponential motility values") {
    MotilitySpec m;
    const Grid g = testing_support::interval(16);
    CHECK(motility_eval(m, Field(g, 0.0)).min() == 1.0);
    const Field half = motility_eval(m, Field(g, std::log(2.0)));
    CHECK(half.max() == doctest::Approx(0.5).epsilon(1e-15));

    const Field v1 = testing_support::random_field(g, 1, 0.0, 3.0);
    Field v2 = v1;
    v2 += testing_support::random_field(g, 2, 0.0, 1.0);
    const Field g1 = motility_eval(m, v1), g2 = motility_eval(m, v2);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(g1[k] >= g2[k]);
}

TEST_CASE("motility tolerates small undershoot and rejects larger ones") {
    MotilitySpec m;
    const Grid g = testing_support::interval(16);
    Field v(g, 0.5);
    v[3] = -5e-9;
    std::size_t low = 0;
    const Field gamma = motility_eval(m, v, &low);
    CHECK(low == 1);
    CHECK(gamma[3] == 1.0);
    v[3] = -1e-6;
    CHECK_THROWS_AS(motility_eval(m, v), InvalidArgument);
}

TEST_CASE("tabulated motility interpolates and validates") {
    MotilitySpec m;
    m.kind = MotilityKind::Tabulated;
    m.table_s = {0.0, 1.0, 2.0};
    m.table_gamma = {1.0, 0.5, 0.25};
    m.validate();
    CHECK(m(0.5) == doctest::Approx(0.75));
    CHECK(m(5.0) == 0.25);
    m.table_gamma = {1.0, 0.5, 0.75};
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    m.table_gamma = {1.0, 0.5, 0.0};
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    m.hook = [](double s) { return 1.0 / (1.0 + s); };
    CHECK(m(1.0) == 0.5);
}

TEST_CASE("source examples") {
    const Grid g = testing_support::interval(16);
    CHECK(source_eval(sublog(), Field(g, std::exp(1.0) - 1.0)).max() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(norm(source_eval(SourceSpec{}, testing_support::random_field(g, 3, 0.0, 9.0)), Norm::Linf) == 0.0);
    CHECK(source_eval(sublog(1.0, 1.0, 2.0), Field(g, 0.0)).min() == -2.0);

    SourceSpec gl;
    gl.family = SourceFamily::GeneralizedLogistic;
    gl.mu = 2.0;
    gl.kappa = 3.0;
    gl.lambda = 1.0;
    CHECK(gl(2.0) == doctest::Approx(7.0));
    CHECK(gl.satisfies_growth());
    CHECK_FALSE(gl.satisfies_sublog());
    CHECK(sublog().satisfies_sublog());
    CHECK_FALSE(SourceSpec{}.satisfies_growth());
}

TEST_CASE("b0 for log(1+s) matches an independent golden-section maximum") {
    const SourceSpec f = sublog();
    const double a1_list[] = {0.0, 1.0, 2.0};
    const SourceConstants c = derive_constants(f, a1_list);
    const double oracle = golden_max([](double s) { return s * (1.0 - std::log1p(s)); }, 0.0, 10.0);
    CHECK(oracle == doctest::Approx(0.3304).epsilon(1e-3));
    CHECK(c.b0 == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(c.b1_of(0.0) == 0.0);
    CHECK(c.b1_of(1.0) == c.b0);
    CHECK_THROWS_AS(c.b1_of(3.0), InvalidArgument);
}

TEST_CASE("derived constants satisfy their inequalities on a million samples") {
    for (const SourceSpec& f : {sublog(), sublog(2.0, 0.5, 1.0), sublog(0.5, 1.0, -0.2)}) {
        const double a1_list[] = {0.0, 0.5, 1.0};
        const SourceConstants c = derive_constants(f, a1_list);
        REQUIRE(c.a2.has_value());
        const auto s = dense_samples(f.sample_max, 1'000'000);
        double worst_b0 = 0.0, worst_b1 = 0.0, worst_a2 = 0.0;
        for (double x : s) {
            const double sf = x * f(x);
            worst_b0 = std::min(worst_b0, sf + c.b0);
            for (const auto& [a1, b1] : c.b1) worst_b1 = std::min(worst_b1, sf - (a1 * x - b1));
            if (x >= 1.0) worst_a2 = std::min(worst_a2, *c.a2 * x * std::log(x) + *c.b2 - sf);
        }
        CHECK(worst_b0 >= -1e-8);
        CHECK(worst_b1 >= -1e-8);
        CHECK(worst_a2 >= -1e-8);
    }
}

TEST_CASE("a2 for mu log(1+s) is at least mu") {
    const SourceSpec f = sublog(3.0);
    const double a1_list[] = {1.0};
    const SourceConstants c = derive_constants(f, a1_list);
    REQUIRE(c.a2.has_value());
    CHECK(*c.a2 >= 3.0);
    double ratio = 0.0;
    for (double x = std::exp(1.0); x <= f.sample_max; x *= 1.01) ratio = std::max(ratio, f(x) / std::log(x));
    CHECK(ratio < 10.0);
}

TEST_CASE("derive_constants rejects out-of-hypothesis sources") {
    const double a1_list[] = {1.0};
    CHECK_THROWS_AS(derive_constants(SourceSpec{}, a1_list), AssumptionViolated);
    SourceSpec f = sublog();
    f.sample_max = 1.5;
    CHECK_THROWS_AS(derive_constants(f, a1_list), RangeTooSmall);

    SourceSpec gl;
    gl.family = SourceFamily::GeneralizedLogistic;
    const SourceConstants c = derive_constants(gl, a1_list);
    CHECK_FALSE(c.a2.has_value());
    CHECK(c.b0 == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("minimal_b0 covers families without growth") {
    CHECK(minimal_b0(SourceSpec{}) == 0.0);
    SourceSpec c;
    c.family = SourceFamily::Constant;
    c.c = -1.0;
    c.sample_max = 10.0;
    CHECK(minimal_b0(c) == doctest::Approx(10.0));
}

TEST_CASE("model parameter validation") {
    ModelParams p;
    p.validate();
    CHECK(p.critical_mass() == doctest::Approx(4.0 * std::numbers::pi));
    p.tau = -1.0;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("τ ≥ 0"), InvalidArgument);
    p.tau = 0.0;
    p.motility.chi = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
