#include <random>

#include "catch_amalgamated.hpp"

#include <canard/jet.hpp>

using namespace canard;
using Catch::Matchers::WithinAbs;

namespace {

Jet x1(int D) { return Jet::variable(1, D, 0); }
Jet one(int nv, int D) { return Jet::constant(nv, D, 1.0); }

bool same(const Jet& a, const Jet& b, double tol = 0) {
    if (a.nvars() != b.nvars() || a.degree_bound() != b.degree_bound()) return false;
    for (std::size_t s = 0; s < a.size(); ++s)
        if (std::abs(a.coeff_at(s) - b.coeff_at(s)) > tol) return false;
    return true;
}

Jet random_jet(std::mt19937_64& rng, int nv, int D) {
    std::uniform_real_distribution<double> U(-1, 1);
    Jet j(nv, D);
    for (std::size_t s = 0; s < j.size(); ++s) j.set(j.monomial(s), U(rng));
    return j;
}

}  // namespace

TEST_CASE("jet_add examples") {
    auto x = x1(4);
    auto s = (one(1, 4) + x) + (one(1, 4) - x);
    CHECK(s.coeff(0) == 2);
    CHECK(s.actual_degree() == 0);

    auto x2 = x * x;
    CHECK(same(x2 + Jet(1, 4), x2));

    auto a = one(1, 2) + x1(2) + x1(2) * x1(2);
    auto cube = Jet::from_terms(1, 2, {{MultiIndex{3, 0, 0, 0}, 1.0}});
    CHECK(cube.max_abs() == 0);
    CHECK_FALSE(cube.exact());
    auto sum = a + cube;
    CHECK(sum.coeff(0) == 1);
    CHECK(sum.coeff(1) == 1);
    CHECK(sum.coeff(2) == 1);
    CHECK_FALSE(sum.exact());
}

TEST_CASE("jet_mul examples") {
    auto p = (one(1, 2) + x1(2)) * (one(1, 2) - x1(2));
    CHECK(p.coeff(0) == 1);
    CHECK(p.coeff(1) == 0);
    CHECK(p.coeff(2) == -1);

    auto q = (one(1, 1) + x1(1)) * (one(1, 1) + x1(1));
    CHECK(q.coeff(0) == 1);
    CHECK(q.coeff(1) == 2);
    CHECK(q.degree_bound() == 1);
    CHECK_FALSE(q.exact());

    auto xy = Jet::variable(2, 2, 0) * Jet::variable(2, 2, 1);
    CHECK(xy.coeff(1, 1) == 1);
    CHECK(xy.max_abs() == 1);
}

TEST_CASE("jet_compose examples") {
    // x^2 with x = r u, over (r, u)
    auto x = x1(4);
    auto r = Jet::variable(2, 4, 0), u = Jet::variable(2, 4, 1);
    auto c = compose(x * x, {r * u});
    CHECK(c.coeff(2, 2) == 1);
    CHECK(c.max_abs() == 1);

    // -y + x^2 with x = r x1, y = r^2 y1 over (r, x1, y1)
    auto X = Jet::variable(2, 4, 0), Y = Jet::variable(2, 4, 1);
    auto f = -Y + X * X;
    auto R = Jet::variable(3, 4, 0), X1 = Jet::variable(3, 4, 1), Y1 = Jet::variable(3, 4, 2);
    auto g = compose(f, {R * X1, R * R * Y1});
    CHECK(g.coeff(2, 0, 1) == -1);
    CHECK(g.coeff(2, 2, 0) == 1);
    CHECK(g.max_abs() == 1);

    CHECK_THROWS_AS(compose(x * x, {Jet::variable(1, 4, 0) + 1.0}), JetError);
}

TEST_CASE("recenter is the constant-shift path") {
    auto x = x1(4);
    auto sq = x * x;
    const double x0 = 1.7;
    auto rc = recenter(sq, std::vector<double>{x0});
    CHECK_THAT(rc.coeff(0), WithinAbs(x0 * x0, 1e-15));
    CHECK_THAT(rc.coeff(1), WithinAbs(2 * x0, 1e-15));
    CHECK_THAT(rc.coeff(2), WithinAbs(1, 1e-15));
    CHECK_THROWS_AS(recenter(reciprocal(one(1, 4) + x), std::vector<double>{0.5}), JetError);
}

TEST_CASE("jet_diff and jet_eval examples") {
    auto X = Jet::variable(2, 4, 0), Y = Jet::variable(2, 4, 1);
    auto d = (X * X * Y).diff(0);
    CHECK(d.coeff(1, 1) == 2);
    CHECK(d.max_abs() == 2);
    CHECK(Jet::constant(2, 4, 3.0).diff(1).max_abs() == 0);
    auto c = x1(4).pow(3).diff(0);
    CHECK(c.coeff(2) == 3);

    auto p = one(1, 4) + x1(4) + x1(4) * x1(4);
    CHECK(p.eval({2.0}) == 7);
    CHECK((X * Y).eval({3.0, 4.0}) == 12);
    CHECK(Jet(2, 4).eval({5.0, -1.0}) == 0);
}

TEST_CASE("jet errors") {
    CHECK_THROWS_AS(Jet(0, 4), JetError);
    CHECK_THROWS_AS(Jet(5, 4), JetError);
    CHECK_THROWS_AS(Jet::variable(2, 4, 2), JetError);
    CHECK_THROWS_AS(Jet(2, 4) + Jet(3, 4), JetError);
    CHECK_THROWS_AS(reciprocal(x1(4)), JetError);
    CHECK_THROWS_AS(x1(4).eval({1.0, 2.0}), JetError);
    Jet j(2, 2);
    CHECK_THROWS_AS(j.set(3, 0, 1.0), JetError);
}

TEST_CASE("reciprocal times the jet is one") {
    auto a = Jet::constant(2, 4, 2.0) + Jet::variable(2, 4, 0).scaled(0.3) - Jet::variable(2, 4, 1).scaled(0.7);
    auto p = a * reciprocal(a);
    CHECK_THAT(p.coeff(0, 0), WithinAbs(1, 1e-15));
    for (std::size_t s = 1; s < p.size(); ++s) CHECK_THAT(p.coeff_at(s), WithinAbs(0, 1e-14));
}

TEST_CASE("add and mul are commutative and associative") {
    std::mt19937_64 rng(11);
    for (int D = 0; D <= 4; ++D)
        for (int k = 0; k < 5; ++k) {
            auto a = random_jet(rng, 2, D), b = random_jet(rng, 2, D), c = random_jet(rng, 2, D);
            CHECK(same(a + b, b + a, 0));
            CHECK(same(a * b, b * a, 1e-15));
            CHECK(same((a + b) + c, a + (b + c), 1e-15));
            CHECK(same((a * b) * c, a * (b * c), 1e-13));
        }
}

TEST_CASE("compose with the identity substitution returns the input") {
    std::mt19937_64 rng(12);
    auto f = random_jet(rng, 3, 4);
    auto g = compose(f, {Jet::variable(3, 4, 0), Jet::variable(3, 4, 1), Jet::variable(3, 4, 2)});
    CHECK(same(f, g, 1e-15));
}

TEST_CASE("eval commutes with compose when nothing is truncated") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int k = 0; k < 10; ++k) {
        // quadratic f of linear-plus-quadratic substitutions stays within D = 4
        auto f = random_jet(rng, 2, 2).truncated(4);
        std::vector<Jet> subs;
        for (int i = 0; i < 2; ++i) {
            auto s = random_jet(rng, 3, 2).truncated(4);
            s.set(0, 0, 0.0);
            subs.push_back(s);
        }
        auto fg = compose(f, subs);
        REQUIRE(fg.exact());
        std::vector<double> p{U(rng), U(rng), U(rng)};
        const double lhs = fg.eval(p);
        const double rhs = f.eval({subs[0].eval(p), subs[1].eval(p)});
        CHECK_THAT(lhs, WithinAbs(rhs, 1e-13));
    }
}

TEST_CASE("mixed partials commute") {
    std::mt19937_64 rng(14);
    for (int k = 0; k < 5; ++k) {
        auto f = random_jet(rng, 2, 4);
        CHECK(same(f.diff(0).diff(1), f.diff(1).diff(0), 0));
    }
}
