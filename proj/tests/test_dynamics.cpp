#include <cmath>
#include <numbers>

#include "catch_amalgamated.hpp"

#include <canard/dynamics.hpp>
#include <canard/verify.hpp>

using namespace canard;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PlanarField center() {
    return [](const Vec2& v) -> Vec2 { return {-v[1], v[0]}; };
}

PlanarField focus(double a) {
    return [a](const Vec2& v) -> Vec2 { return {-v[1] + a * v[0], v[0] + a * v[1]}; };
}

IntegratorOptions opts(double t_max, double rtol = 1e-10, double atol = 1e-13) {
    IntegratorOptions o;
    o.t_max = t_max;
    o.rel_tol = rtol;
    o.abs_tol = atol;
    return o;
}

}  // namespace

TEST_CASE("linear center returns after one period") {
    auto tr = integrate(center(), {1, 0}, opts(2 * std::numbers::pi));
    CHECK_THAT(tr.y.back()[0], WithinAbs(1, 1e-6));
    CHECK_THAT(tr.y.back()[1], WithinAbs(0, 1e-6));
    CHECK_THAT(tr.t.back(), WithinAbs(2 * std::numbers::pi, 1e-12));
    // dense output between steps
    const Vec2 mid = tr.at(1.0);
    CHECK_THAT(mid[0], WithinAbs(std::cos(1.0), 1e-8));
    CHECK_THAT(mid[1], WithinAbs(std::sin(1.0), 1e-8));
}

TEST_CASE("energy drift over 100 periods") {
    auto tr = integrate(center(), {1, 0}, opts(200 * std::numbers::pi, 1e-9, 1e-12));
    double drift = 0;
    for (auto& y : tr.y) drift = std::max(drift, std::abs(y[0] * y[0] + y[1] * y[1] - 1));
    CHECK(drift < 1e-4);
}

TEST_CASE("reversing time twice reproduces the start") {
    auto p = example1();
    auto f = allee_field(p);
    auto o = opts(50);
    auto fwd = integrate(f, {0.3, 0.12}, o);
    o.direction = Direction::Reversed;
    auto back = integrate(f, fwd.y.back(), o);
    CHECK_THAT(back.y.back()[0], WithinAbs(0.3, 2e-8));
    CHECK_THAT(back.y.back()[1], WithinAbs(0.12, 2e-8));
}

TEST_CASE("integrator option validation and failures") {
    IntegratorOptions o;
    o.rel_tol = 0;
    CHECK_THROWS_AS(integrate(center(), {1, 0}, o), std::invalid_argument);
    CHECK_THROWS_AS(integrate(center(), {NAN, 0}, opts(1)), std::invalid_argument);
    PlanarField blowup = [](const Vec2& v) -> Vec2 { return {v[0] * v[0], 0}; };
    CHECK_THROWS_AS(integrate(blowup, {1, 0}, opts(2)), NumericalFailure);
}

TEST_CASE("return map of the linear center is the identity") {
    Section sec{0, 0, true, +1};
    for (double y : {-0.1, -0.5, -2.0}) CHECK_THAT(return_map(center(), sec, y, opts(20)), WithinAbs(y, 1e-8));
}

TEST_CASE("stable focus contracts") {
    // x' = -y - 0.1 x, y' = x - 0.1 y, ray above the origin crossed leftwards
    Section sec{0, 0, false, -1};
    for (double y : {0.1, 0.5, 1.0}) {
        const double P = return_map(focus(-0.1), sec, y, opts(20));
        CHECK(P < y);
        CHECK_THAT(P, WithinRel(y * std::exp(-0.1 * 2 * std::numbers::pi), 1e-7));
    }
}

TEST_CASE("a focus has no cycle to bracket") {
    Section sec{0, 0, true, +1};
    CHECK_THROWS_AS(find_cycle(focus(-0.1), sec, {-1.0, -0.1}, opts(50)), BracketInvalid);
    CHECK_THROWS_AS(find_cycle(focus(-0.1), sec, {0.1, 1.0}, opts(50)), BracketInvalid);
}

TEST_CASE("find_cycle on a known limit cycle") {
    // r' = r (1 - r^2) mu, theta' = 1: unit circle, multiplier exp(-4 pi mu)
    for (double mu : {0.05, -0.05}) {
        PlanarField f = [mu](const Vec2& v) -> Vec2 {
            const double g = mu * (1 - v[0] * v[0] - v[1] * v[1]);
            return {-v[1] + g * v[0], v[0] + g * v[1]};
        };
        Section sec{0, 0, true, +1};
        auto o = opts(100, 1e-12, 1e-14);
        if (mu < 0) o.direction = Direction::Reversed;
        if (mu < 0) sec.crossing = -1;
        auto R = find_cycle(f, sec, {-1.3, -0.7}, o);
        CHECK(R.converged);
        CHECK_THAT(R.section_point[1], WithinAbs(-1, 1e-8));
        CHECK_THAT(R.period, WithinAbs(2 * std::numbers::pi, 1e-6));
        CHECK_THAT(R.multiplier, WithinRel(std::exp(-4 * std::numbers::pi * mu), 1e-5));
        CHECK(R.stability == (mu > 0 ? Stability::Stable : Stability::Unstable));
        // one period from the fixed point returns to it
        auto o2 = opts(R.period, 1e-12, 1e-14);
        auto tr = integrate(f, R.section_point, o2);
        CHECK(std::hypot(tr.y.back()[0] - R.section_point[0], tr.y.back()[1] - R.section_point[1]) < 1e-6);
    }
}

TEST_CASE("stability from the multiplier") {
    CHECK(stability_from_multiplier(0.9) == Stability::Stable);
    CHECK(stability_from_multiplier(1.1) == Stability::Unstable);
    CHECK(stability_from_multiplier(1 + 5e-5) == Stability::Neutral);
    CHECK(stability_from_multiplier(1 - 5e-5) == Stability::Neutral);
}

TEST_CASE("Example 1 just below the trace-zero onset has a stable cycle") {
    auto p = example1();
    p.beta = hopf_onset_scan(p, p.beta - 0.01, p.beta + 0.01, 40).beta - 4e-6;
    auto E = *equilibria(p).E4;
    auto sec = e4_section(p, Direction::Forward);
    auto R = find_cycle(allee_field(p), sec, {E.y - 5e-4, E.y - 2.5e-4}, cycle_options(Direction::Forward));
    CHECK(R.converged);
    CHECK(R.multiplier < 1);
    CHECK(R.stability == Stability::Stable);
}

TEST_CASE("Example 2 just above onset has a forward-unstable cycle") {
    auto p = example2();
    p.beta = hopf_onset_scan(p, p.beta - 0.01, p.beta + 0.01, 40).beta + 3e-7;
    auto E = *equilibria(p).E4;
    auto sec = e4_section(p, Direction::Reversed);
    auto R = find_cycle(allee_field(p), sec, {E.y - 4e-3, E.y - 2e-3}, cycle_options(Direction::Reversed));
    CHECK(R.converged);
    CHECK(R.multiplier > 1);
    CHECK(R.stability == Stability::Unstable);
}

TEST_CASE("hopf_onset_scan brackets the trace sign change") {
    for (auto p : {example1(), example2()}) {
        auto on = hopf_onset_scan(p, p.beta - 0.01, p.beta + 0.01, 40);
        CHECK(on.trace_below * on.trace_above < 0);
        CHECK_THAT(on.lambda, WithinRel(lambda_from_beta(p, on.beta), 1e-15));
    }
    auto p = example1();
    CHECK_THROWS_AS(hopf_onset_scan(p, 0.05, 0.06, 5), std::domain_error);
}

TEST_CASE("onset approaches lambda_h at least at order eps^(3/2)") {
    for (auto base : {example1(), example2()}) {
        std::vector<double> err;
        for (double eps : {0.01, 0.005, 0.0025}) {
            AlleeParams p = base;
            p.eps = eps;
            auto on = hopf_onset_scan(p, p.beta - 0.02, p.beta + 0.02, 80);
            auto c = model_bifurcation_curves(p, false);
            err.push_back(std::abs(on.lambda - c.lambda_h));
        }
        CHECK(err[0] / err[1] >= 2.5);
        CHECK(err[1] / err[2] >= 2.5);
    }
}

TEST_CASE("past the onset on the stable side E4 attracts nearby orbits") {
    auto p = example1();
    const double onset = hopf_onset_scan(p, p.beta - 0.01, p.beta + 0.01, 40).beta;
    p.beta = onset - 0.01;
    CHECK(equilibria(p).E4->trace > 0);
    p.beta = onset + 0.01;
    REQUIRE(equilibria(p).E4->trace < 0);
    auto E = *equilibria(p).E4;
    auto tr = integrate(allee_field(p), {E.x + 0.005, E.y - 0.002}, opts(3000));
    CHECK(std::hypot(tr.y.back()[0] - E.x, tr.y.back()[1] - E.y) < 1e-4);
}

TEST_CASE("the model field stays in the invariant region") {
    auto p = example2();
    for (Vec2 s : {Vec2{0.01, 0.01}, Vec2{0.99, 1.9}, Vec2{0.5, 0.0}, Vec2{0.0, 1.0}}) {
        DormandPrince dp(allee_field(p), s, opts(2000, 1e-9, 1e-12));
        double ex = 0;
        while (dp.step()) ex = std::max({ex, -dp.y()[0], dp.y()[0] - 1, -dp.y()[1]});
        CHECK(ex < 1e-9);
    }
}
