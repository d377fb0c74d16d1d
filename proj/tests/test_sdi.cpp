#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"

#include <canard/sdi.hpp>

using namespace canard;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

AlleeParams cyclicity_set(double m, double n, double alpha, double beta) {
    AlleeParams p{m, n, alpha, beta, 0, 0.01};
    p.gamma = gamma_star(m, n, alpha, beta);
    return p;
}

}  // namespace

TEST_CASE("branch_inverse examples") {
    std::mt19937_64 rng(41);
    for (int k = 0; k < 20; ++k) {
        auto p = random_cyclicity_params(rng);
        auto M = fold_point(p.m, p.n);
        auto top = branch_inverse(M.y, p);
        CHECK_THAT(top.x, WithinAbs(M.x, 1e-7));
        CHECK_THAT(top.sigma, WithinAbs(M.x, 1e-7));
        for (double f : {0.1, 0.5, 0.9}) {
            const double y = M.y * f;
            auto b = branch_inverse(y, p);
            CHECK_THAT(allee_F(b.x, p.m, p.n), WithinAbs(y, 1e-12));
            CHECK_THAT(allee_F(b.sigma, p.m, p.n), WithinAbs(allee_F(b.x, p.m, p.n), 1e-12));
            CHECK(b.sigma < M.x);
            CHECK(M.x < b.x);
        }
        CHECK_THROWS_AS(branch_inverse(M.y * 1.01, p), std::domain_error);
    }
}

TEST_CASE("branch_below_fold agrees with branch_inverse") {
    std::mt19937_64 rng(40);
    for (int k = 0; k < 10; ++k) {
        auto p = random_cyclicity_params(rng);
        const double yM = fold_point(p.m, p.n).y;
        for (double u : {0.05, 0.1, 0.2}) {
            if (u * u >= yM) continue;
            auto a = branch_below_fold(u, p), b = branch_inverse(yM - u * u, p);
            CHECK_THAT(a.x, WithinRel(b.x, 1e-10));
            CHECK_THAT(a.sigma, WithinRel(b.sigma, 1e-10));
        }
        // close to the fold the gap x - sigma is still resolved to full precision
        auto c = branch_below_fold(1e-7, p);
        CHECK(c.x > c.sigma);
        CHECK_THAT(c.x - c.sigma, WithinRel(1e-7 * std::sqrt(2 * (1 - p.m - p.n - yM) + 4 * p.m), 1e-6));
    }
}

TEST_CASE("Phi is affine and increasing") {
    std::mt19937_64 rng(42);
    for (int k = 0; k < 10; ++k) {
        auto p = random_cyclicity_params(rng);
        CHECK_THAT(phi(0.3, p) - phi(0.2, p), WithinRel(0.1 * (p.alpha + p.gamma), 1e-12));
        CHECK_THAT(phi(phi_root_y0(p), p), WithinAbs(0, 1e-14));
    }
    // at the degenerate parameters Phi(yM) = alpha + 2 gamma - (3 alpha + 2 gamma) sqrt(m) ~ 0
    AlleeParams q{0.263075, 0.1, 0.8, 0.138485, 0.4424, 0.01};
    const double closed = q.alpha + 2 * q.gamma - (3 * q.alpha + 2 * q.gamma) * std::sqrt(q.m);
    CHECK(std::abs(closed) < 1e-5);
    CHECK_THAT(phi(fold_point(q.m, q.n).y, q), WithinAbs(closed, 1e-14));
}

TEST_CASE("h(sigma) - h(x) factorizes with constant m^(3/2)") {
    std::mt19937_64 rng(43);
    for (int k = 0; k < 10; ++k) {
        auto p = random_cyclicity_params(rng);
        const double yM = fold_point(p.m, p.n).y;
        for (double f : {0.2, 0.5, 0.8}) {
            const double y = yM * f;
            if (std::abs(phi(y, p)) < 1e-6) continue;
            CHECK_THAT(identity_ratio(y, p), WithinRel(std::pow(p.m, 1.5), 1e-9));
        }
    }
}

TEST_CASE("I(s) vanishes as s -> 0 and matches the x-form") {
    std::mt19937_64 rng(44);
    for (int k = 0; k < 5; ++k) {
        auto p = random_cyclicity_params(rng);
        const double smax = admissible_s_max(p);
        CHECK(slow_divergence_integral(p, 0, 0) == 0);
        const double small = std::abs(slow_divergence_integral(p, 0, 1e-8 * smax));
        CHECK(small < 1e-6 * std::abs(slow_divergence_integral(p, 0, 0.5 * smax)));
        for (double f : {0.2, 0.6, 0.95}) {
            const double s = f * smax;
            CHECK_THAT(sdi_x_form(p, 0, s), WithinRel(slow_divergence_integral(p, 0, s), 1e-6));
        }
        CHECK_THROWS_AS(slow_divergence_integral(p, 0, smax), std::domain_error);
        CHECK_THROWS_AS(slow_divergence_integral(p, 0, -1e-3), std::domain_error);
    }
}

TEST_CASE("sign of I follows the sign of Phi when Phi is single-signed") {
    std::mt19937_64 rng(45);
    int checked = 0;
    for (int k = 0; k < 40; ++k) {
        auto p = random_cyclicity_params(rng);
        const double smax = admissible_s_max(p), yM = fold_point(p.m, p.n).y;
        for (double f : {0.1, 0.4, 0.8}) {
            const double s = f * smax;
            const double a = phi(yM - s, p), b = phi(yM, p);
            if (a * b <= 0) continue;
            ++checked;
            CHECK(sign_of(slow_divergence_integral(p, 0, s)) == sign_of(b));
        }
    }
    CHECK(checked > 20);
}

TEST_CASE("m >= m* gives Phi < 0 and a single-signed profile") {
    std::mt19937_64 rng(46);
    int seen = 0;
    for (int k = 0; k < 60 && seen < 3; ++k) {
        auto p = random_cyclicity_params(rng);
        if (phi_case(p) != PhiCase::PhiNegative) continue;
        ++seen;
        auto R = cyclicity_report(p, 30);
        CHECK(R.zero_count == 0);
        for (double v : R.values) CHECK(v < 0);
    }
    CHECK(seen > 0);
}

TEST_CASE("m < m* with y0 <= 0 is tagged PhiPositive") {
    // alpha = 1, gamma small: m* is large, and y0 < 0 for small m
    auto p = cyclicity_set(0.1, 0.2, 1.0, 0.1);
    REQUIRE(p.gamma > 0);
    CHECK(p.m < m_star(p.alpha, p.gamma));
    CHECK(phi_root_y0(p) <= 0);
    CHECK(phi_case(p) == PhiCase::PhiPositive);
    auto R = cyclicity_report(p, 30);
    CHECK(R.phi_case == PhiCase::PhiPositive);
    CHECK(R.zero_count == 0);
}

TEST_CASE("Phi sign change gives exactly one zero") {
    auto p = cyclicity_set(0.064, 0.038, 1.704, 0);
    p.beta = 1.704 * fold_point(0.064, 0.038).x - 0.179 * fold_point(0.064, 0.038).y;
    p.gamma = gamma_star(p.m, p.n, p.alpha, p.beta);
    REQUIRE(p.beta > 0);
    REQUIRE(phi_root_y0(p) > 0);
    CHECK(phi_case(p) == PhiCase::PhiSignChange);
    auto R = cyclicity_report(p, 40);
    CHECK(R.zero_count == 1);
}

TEST_CASE("profile is continuous under grid refinement") {
    auto p = cyclicity_set(0.1, 0.2, 1.0, 0.1);
    auto coarse = cyclicity_report(p, 10);
    auto fine = cyclicity_report(p, 21);
    // every other fine point coincides with a coarse one: s_k = smax k / (N + 1)
    for (std::size_t k = 0; k < coarse.s_grid.size(); ++k) {
        CHECK_THAT(fine.s_grid[2 * k + 1], WithinAbs(coarse.s_grid[k], 1e-15));
        CHECK_THAT(fine.values[2 * k + 1], WithinRel(coarse.values[k], 1e-10));
    }
    double jump = 0, scale = 0;
    for (std::size_t k = 0; k + 1 < fine.values.size(); ++k) {
        jump = std::max(jump, std::abs(fine.values[k + 1] - fine.values[k]));
        scale = std::max(scale, std::abs(fine.values[k]));
    }
    CHECK(jump < 0.5 * scale);
}

TEST_CASE("cyclicity hypotheses are enforced") {
    AlleeParams p{0.1, 0.2, 1.0, 0.1, 0.3, 0.01};
    CHECK_THROWS_AS(cyclicity_report(p, 10), ConditionViolation);
    auto q = cyclicity_set(0.1, 0.2, 1.0, 0.1);
    CHECK_THROWS_AS(cyclicity_report(q, 1), std::invalid_argument);
}

TEST_CASE("seeded random sets have at most one zero") {
    std::mt19937_64 rng(47);
    for (int k = 0; k < 10; ++k) {
        auto p = random_cyclicity_params(rng);
        CHECK(cyclicity_report(p, 40).zero_count <= 1);
    }
}
