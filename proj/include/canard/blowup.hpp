#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fit.hpp"
#include "jet.hpp"
#include "normalform.hpp"

namespace canard {

enum class Stage { dnf2, dnf3, dnf5, dnf6, dnf7 };

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::dnf2: return "dnf2";
        case Stage::dnf3: return "dnf3";
        case Stage::dnf5: return "dnf5";
        case Stage::dnf6: return "dnf6";
        case Stage::dnf7: return "dnf7";
    }
    return "?";
}

struct PlanarPolySystem {
    Jet fx{2, 4};
    Jet fy{2, 4};
    Stage label = Stage::dnf3;

    double m(int i, int j) const { return fx.coeff(i, j); }
    double n(int i, int j) const { return fy.coeff(i, j); }
    double trace() const { return m(1, 0) + n(0, 1); }
    double det() const { return m(1, 0) * n(0, 1) - m(0, 1) * n(1, 0); }
};

constexpr int pipeline_degree = 4;

// The normal form as a cubic polynomial field in (x, y) at fixed lambda, eps.
inline PlanarPolySystem dnf2_system(const NormalFormCoefficients& k, double lambda, double eps) {
    const int D = pipeline_degree;
    Jet fx(2, D), fy(2, D);
    // -y h1
    fx.set(0, 1, -1);
    fx.set(1, 1, -k.a10);
    fx.set(0, 2, -k.a01);
    fx.set(2, 1, -k.a20);
    fx.set(1, 2, -k.a11);
    fx.set(0, 3, -k.a02);
    // x^2 h2
    fx.add_term({2, 0}, 1);
    fx.add_term({3, 0}, k.b10);
    // eps h3
    const std::array<std::pair<MultiIndex, double>, 9> h3{{
        {{1, 0}, k.c10}, {{0, 1}, k.c01}, {{2, 0}, k.c20}, {{1, 1}, k.c11}, {{0, 2}, k.c02},
        {{3, 0}, k.c30}, {{2, 1}, k.c21}, {{1, 2}, k.c12}, {{0, 3}, k.c03}}};
    for (auto& [e, v] : h3) fx.add_term(e, eps * v);

    // eps (x h4 - lambda h5 + y h6)
    fy.add_term({1, 0}, eps);
    fy.add_term({2, 0}, eps * k.d10);
    fy.add_term({3, 0}, eps * k.d20);
    const std::array<std::pair<MultiIndex, double>, 10> h5{{
        {{0, 0}, 1.0}, {{1, 0}, k.e10}, {{0, 1}, k.e01}, {{2, 0}, k.e20}, {{1, 1}, k.e11},
        {{0, 2}, k.e02}, {{3, 0}, k.e30}, {{2, 1}, k.e21}, {{1, 2}, k.e12}, {{0, 3}, k.e03}}};
    for (auto& [e, v] : h5) fy.add_term(e, -eps * lambda * v);
    const std::array<std::pair<MultiIndex, double>, 6> yh6{{
        {{0, 1}, k.f00}, {{1, 1}, k.f10}, {{0, 2}, k.f01}, {{2, 1}, k.f20}, {{1, 2}, k.f11},
        {{0, 3}, k.f02}}};
    for (auto& [e, v] : yh6) fy.add_term(e, eps * v);
    return {fx, fy, Stage::dnf2};
}

inline void require_r(double r) {
    if (!(r > 0)) throw std::invalid_argument("blow-up radius r must be positive");
}

// Blow-up x = r x1, y = r^2 y1, lambda = r lambda1, eps = r^2, time / r, by
// the closed-form m_ij / n_ij table.
inline PlanarPolySystem blow_up_table(const NormalFormCoefficients& k, double r, double l1) {
    require_r(r);
    const double r2 = r * r, r3 = r2 * r, r4 = r3 * r, r5 = r4 * r;
    Jet fx(2, pipeline_degree), fy(2, pipeline_degree);
    fx.set(1, 0, r * k.c10);
    fx.set(0, 1, -1 + r2 * k.c01);
    fx.set(2, 0, 1 + r2 * k.c20);
    fx.set(1, 1, r * (r2 * k.c11 - k.a10));
    fx.set(0, 2, r2 * (r2 * k.c02 - k.a01));
    fx.set(3, 0, r * (k.b10 + r2 * k.c30));
    fx.set(2, 1, r2 * (r2 * k.c21 - k.a20));
    fx.set(1, 2, r3 * (r2 * k.c12 - k.a11));
    fx.set(0, 3, r4 * (r2 * k.c03 - k.a02));

    fy.set(0, 0, -l1);
    fy.set(1, 0, 1 - l1 * r * k.e10);
    fy.set(0, 1, r * (k.f00 - l1 * r * k.e01));
    fy.set(2, 0, r * (k.d10 - l1 * r * k.e20));
    fy.set(1, 1, r2 * (k.f10 - l1 * r * k.e11));
    fy.set(0, 2, r3 * (k.f01 - l1 * r * k.e02));
    fy.set(3, 0, r2 * (k.d20 - l1 * r * k.e30));
    fy.set(2, 1, r3 * (k.f20 - l1 * r * k.e21));
    fy.set(1, 2, r4 * (k.f11 - l1 * r * k.e12));
    fy.set(0, 3, r5 * (k.f02 - l1 * r * k.e03));
    return {fx, fy, Stage::dnf3};
}

// Same blow-up by composing the normal-form jets with x = r x1, y = r^2 y1.
inline PlanarPolySystem blow_up_compose(const NormalFormCoefficients& k, double r, double l1) {
    require_r(r);
    const double eps = r * r;
    auto base = dnf2_system(k, r * l1, eps);
    std::vector<Jet> subs{Jet::variable(2, pipeline_degree, 0).scaled(r),
                          Jet::variable(2, pipeline_degree, 1).scaled(r * r)};
    // x1' = x'/r^2, y1' = y'/r^3 after dividing time by r
    Jet fx = compose(base.fx, subs).scaled(1 / (r * r));
    Jet fy = compose(base.fy, subs).scaled(1 / (r * r * r));
    return {fx, fy, Stage::dnf3};
}

inline PlanarPolySystem blow_up(const NormalFormCoefficients& k, double r, double l1) {
    return blow_up_table(k, r, l1);
}

struct EquilibriumSeries {
    std::array<double, 4> p{};
    std::array<double, 4> q{};
    double x() const { return p[0] + p[1] + p[2] + p[3]; }
    double y() const { return q[0] + q[1] + q[2] + q[3]; }
};

inline EquilibriumSeries equilibrium_series(const PlanarPolySystem& s) {
    const double m10 = s.m(1, 0), m01 = s.m(0, 1), m20 = s.m(2, 0), m11 = s.m(1, 1), m02 = s.m(0, 2),
                 m30 = s.m(3, 0), m21 = s.m(2, 1), m12 = s.m(1, 2);
    const double n00 = s.n(0, 0), n10 = s.n(1, 0), n01 = s.n(0, 1), n20 = s.n(2, 0), n11 = s.n(1, 1),
                 n02 = s.n(0, 2), n30 = s.n(3, 0), n21 = s.n(2, 1);
    if (n10 == 0 || m01 == 0) throw NumericalFailure("equilibrium_series: vanishing n10 or m01");
    EquilibriumSeries e;
    auto& p = e.p;
    auto& q = e.q;
    p[0] = -n00 / n10;
    q[0] = -m20 * n00 * n00 / (m01 * n10 * n10);
    p[1] = -(p[0] * p[0] * n20 + q[0] * n01) / n10;
    q[1] = -(p[0] * (p[0] * p[0] * (m30 * n10 - 2 * m20 * n20) + q[0] * (m11 * n10 - 2 * m20 * n01) + m10 * n10))
         / (m01 * n10);
    p[2] = -(p[0] * (p[0] * p[0] * n30 + 2 * p[1] * n20 + q[0] * n11) + q[1] * n01) / n10;
    q[2] = (p[0] * p[0] * (p[1] * (4 * m20 * n20 - 3 * m30 * n10) + q[0] * (2 * m20 * n11 - m21 * n10))
            + p[0] * q[1] * (2 * m20 * n01 - m11 * n10)
            - n10 * (p[1] * q[0] * m11 + p[1] * (p[1] * m20 + m10) + q[0] * q[0] * m02)
            + 2 * std::pow(p[0], 4) * m20 * n30)
         / (m01 * n10);
    p[3] = -(p[0] * q[1] * n11 + q[0] * (p[0] * p[0] * n21 + p[1] * n11) + 3 * p[1] * p[0] * p[0] * n30
             + 2 * p[2] * p[0] * n20 + p[1] * p[1] * n20 + q[2] * n01 + q[0] * q[0] * n02)
         / n10;
    q[3] = (2 * std::pow(p[0], 3) * m20 * (3 * p[1] * n30 + q[0] * n21)
            + p[0] * p[0] * (p[2] * (4 * m20 * n20 - 3 * m30 * n10) + q[1] * (2 * m20 * n11 - m21 * n10))
            + p[0] * (2 * p[1] * q[0] * (m20 * n11 - m21 * n10) + p[1] * p[1] * (2 * m20 * n20 - 3 * m30 * n10)
                      + q[2] * (2 * m20 * n01 - m11 * n10) + q[0] * q[0] * (2 * m20 * n02 - m12 * n10))
            - n10 * (p[1] * q[1] * m11 + q[0] * (p[2] * m11 + 2 * q[1] * m02) + p[2] * (2 * p[1] * m20 + m10)))
         / (m01 * n10);
    return e;
}

struct Point2 {
    double x = 0, y = 0;
};

inline double residual(const PlanarPolySystem& s, Point2 p) {
    return std::max(std::abs(s.fx.eval({p.x, p.y})), std::abs(s.fy.eval({p.x, p.y})));
}

inline Point2 newton_equilibrium(const PlanarPolySystem& s, Point2 guess, double tol = 1e-12, int max_iter = 50) {
    Jet fxx = s.fx.diff(0), fxy = s.fx.diff(1), fyx = s.fy.diff(0), fyy = s.fy.diff(1);
    Point2 p = guess;
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> v{p.x, p.y};
        double F = s.fx.eval(v), G = s.fy.eval(v);
        double a = fxx.eval(v), b = fxy.eval(v), c = fyx.eval(v), d = fyy.eval(v);
        double det = a * d - b * c;
        if (det == 0 || !std::isfinite(det)) throw NumericalFailure("newton_equilibrium: singular Jacobian");
        double dx = (F * d - b * G) / det, dy = (a * G - c * F) / det;
        p.x -= dx;
        p.y -= dy;
        if (std::abs(dx) + std::abs(dy) < 1e-15 * (1 + std::abs(p.x) + std::abs(p.y)) || residual(s, p) < tol * 1e-3) {
            if (residual(s, p) < tol) return p;
        }
    }
    if (residual(s, p) < tol) return p;
    throw NumericalFailure("newton_equilibrium: no convergence in 50 iterations");
}

inline PlanarPolySystem translate_to_equilibrium(const PlanarPolySystem& s, Point2 eq, double tol = 1e-10) {
    if (residual(s, eq) > tol) throw NumericalFailure("translate_to_equilibrium: point is not an equilibrium");
    PlanarPolySystem out{recenter(s.fx, {eq.x, eq.y}), recenter(s.fy, {eq.x, eq.y}), Stage::dnf5};
    // the constant terms are the residual, which the recentred field drops
    out.fx.set(0, 0, 0);
    out.fy.set(0, 0, 0);
    return out;
}

// Closed-form dnf5 coefficients: Taylor re-expansion about the series equilibrium
// truncated at third order (the bookkeeping r in the tables is set to 1).
struct TranslatedSeries {
    double m10, m01, m20, m11, m02, m30, m21, m12;
    double n10, n01, n20, n11, n02, n30, n21;
};

inline TranslatedSeries translated_series(const PlanarPolySystem& s, const EquilibriumSeries& e) {
    const auto& p = e.p;
    const auto& q = e.q;
    TranslatedSeries t{};
    t.m10 = 2 * p[0] * s.m(2, 0)
          + (s.m(1, 0) + q[0] * s.m(1, 1) + 2 * p[1] * s.m(2, 0) + 3 * p[0] * p[0] * s.m(3, 0))
          + (q[1] * s.m(1, 1) + 2 * p[2] * s.m(2, 0) + 2 * p[0] * q[0] * s.m(2, 1) + 6 * p[0] * p[1] * s.m(3, 0))
          + (s.m(1, 2) * q[0] * q[0] + q[2] * s.m(1, 1) + 2 * p[3] * s.m(2, 0) + 2 * (p[1] * q[0] + p[0] * q[1]) * s.m(2, 1)
             + (3 * p[1] * p[1] + 6 * p[0] * p[2]) * s.m(3, 0));
    t.m01 = s.m(0, 1) + p[0] * s.m(1, 1) + (p[0] * p[0] * s.m(2, 1) + p[1] * s.m(1, 1) + 2 * q[0] * s.m(0, 2))
          + (2 * p[0] * q[0] * s.m(1, 2) + p[2] * s.m(1, 1) + 2 * p[0] * p[1] * s.m(2, 1) + 2 * q[1] * s.m(0, 2));
    t.m20 = s.m(2, 0) + 3 * p[0] * s.m(3, 0) + (q[0] * s.m(2, 1) + 3 * p[1] * s.m(3, 0))
          + (q[1] * s.m(2, 1) + 3 * p[2] * s.m(3, 0));
    t.m11 = s.m(1, 1) + 2 * p[0] * s.m(2, 1) + (2 * p[1] * s.m(2, 1) + 2 * q[0] * s.m(1, 2));
    t.m02 = s.m(0, 2) + p[0] * s.m(1, 2);
    t.m30 = s.m(3, 0);
    t.m21 = s.m(2, 1);
    t.m12 = s.m(1, 2);
    t.n10 = s.n(1, 0) + 2 * p[0] * s.n(2, 0) + (3 * p[0] * p[0] * s.n(3, 0) + 2 * p[1] * s.n(2, 0) + q[0] * s.n(1, 1))
          + (2 * p[0] * q[0] * s.n(2, 1) + 2 * p[2] * s.n(2, 0) + 6 * p[0] * p[1] * s.n(3, 0) + q[1] * s.n(1, 1));
    t.n01 = s.n(0, 1) + p[0] * s.n(1, 1) + (s.n(2, 1) * p[0] * p[0] + 2 * q[0] * s.n(0, 2) + p[1] * s.n(1, 1));
    t.n20 = s.n(2, 0) + 3 * p[0] * s.n(3, 0) + (3 * p[1] * s.n(3, 0) + q[0] * s.n(2, 1));
    t.n11 = s.n(1, 1) + 2 * p[0] * s.n(2, 1);
    t.n02 = s.n(0, 2);
    t.n30 = s.n(3, 0);
    t.n21 = s.n(2, 1);
    return t;
}

enum class Branch { UseN10, UseM01, Auto };

inline const char* to_string(Branch b) {
    switch (b) {
        case Branch::UseN10: return "n10";
        case Branch::UseM01: return "m01";
        case Branch::Auto: return "auto";
    }
    return "?";
}

struct NormalizedSystem {
    PlanarPolySystem sys;
    std::array<std::array<double, 2>, 2> T{};
    double detT = 0;
    Branch branch = Branch::UseN10;
};

inline NormalizedSystem normalize_linear(const PlanarPolySystem& s, Branch branch = Branch::Auto) {
    const double m10 = s.m(1, 0), m01 = s.m(0, 1), n10 = s.n(1, 0), n01 = s.n(0, 1);
    const double M = -(m10 + n01), N = m10 * n01 - m01 * n10;
    const double disc = 4 * N - M * M;
    if (!(disc > 0)) throw NumericalFailure("normalize_linear: real eigenvalues (4N - M^2 <= 0)");
    const double sq = std::sqrt(disc), r2 = std::sqrt(2.0);
    if (branch == Branch::Auto) branch = std::abs(n10) >= std::abs(m01) ? Branch::UseN10 : Branch::UseM01;
    NormalizedSystem out;
    out.branch = branch;
    auto& T = out.T;
    if (branch == Branch::UseN10) {
        if (n10 == 0) throw NumericalFailure("normalize_linear: zero pivot n10");
        T = {{{-r2 * n10, r2 * (m10 + M / 2)}, {0.0, r2 / 2 * sq}}};
    } else {
        if (m01 == 0) throw NumericalFailure("normalize_linear: zero pivot m01");
        T = {{{r2 * (n01 + M / 2), -r2 * m01}, {r2 / 2 * sq, 0.0}}};
    }
    out.detT = T[0][0] * T[1][1] - T[0][1] * T[1][0];
    const double Ti00 = T[1][1] / out.detT, Ti01 = -T[0][1] / out.detT;
    const double Ti10 = -T[1][0] / out.detT, Ti11 = T[0][0] / out.detT;
    const int D = s.fx.degree_bound();
    Jet u = Jet::variable(2, D, 0), v = Jet::variable(2, D, 1);
    std::vector<Jet> subs{u.scaled(Ti00) + v.scaled(Ti01), u.scaled(Ti10) + v.scaled(Ti11)};
    Jet a = compose(s.fx, subs), b = compose(s.fy, subs);
    out.sys.fx = a.scaled(T[0][0]) + b.scaled(T[0][1]);
    out.sys.fy = a.scaled(T[1][0]) + b.scaled(T[1][1]);
    out.sys.label = Stage::dnf6;
    return out;
}

// Closed-form linear entries after normalization.
inline double closed_form_mtilde10(const PlanarPolySystem& s) { return (s.m(1, 0) + s.n(0, 1)) / 2; }
inline double closed_form_mtilde01(const PlanarPolySystem& s) {
    const double m10 = s.m(1, 0), m01 = s.m(0, 1), n10 = s.n(1, 0), n01 = s.n(0, 1);
    return -0.5 * std::sqrt(2 * m10 * n01 - 4 * m01 * n10 - m10 * m10 - n01 * n01);
}

inline double trace_at(const NormalFormCoefficients& k, double r, double l1) {
    auto s = blow_up(k, r, l1);
    auto e = equilibrium_series(s);
    auto eq = newton_equilibrium(s, {e.x(), e.y()});
    auto t = translate_to_equilibrium(s, eq);
    return t.trace();
}

// lambda1*(r): the blown-up parameter at which the linearization at the
// equilibrium has zero trace.
inline double hopf_lambda1(const NormalFormCoefficients& k, double r) {
    if (!(r > 0 && r <= 0.2)) throw std::invalid_argument("hopf_lambda1: r must lie in (0, 0.2]");
    double l = rho_coefficients(k).rho1 * r;
    for (int it = 0; it < 50; ++it) {
        double t = trace_at(k, r, l);
        if (std::abs(t / 2) < 1e-14) return l;
        double h = 1e-6 * std::max(1.0, std::abs(l));
        double dt = (trace_at(k, r, l + h) - trace_at(k, r, l - h)) / (2 * h);
        if (dt == 0 || !std::isfinite(dt)) break;
        double step = t / dt;
        l -= step;
        if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(l))) break;
    }
    if (std::abs(trace_at(k, r, l) / 2) < 1e-12) return l;
    throw NumericalFailure("hopf_lambda1: no convergence in 50 iterations");
}

inline double fact2(int i, int j) {
    static const double f[] = {1, 1, 2, 6, 24};
    return f[i] * f[j];
}

// First Lyapunov coefficient for x' = -beta0-rotation + f, y' = ... + g.
inline double lyapunov_DF(const PlanarPolySystem& s) {
    const double tr = s.trace();
    if (std::abs(tr) > 1e-12) throw NumericalFailure("lyapunov_DF: linear part has nonzero trace");
    const double b0 = s.n(1, 0);
    if (b0 == 0) throw NumericalFailure("lyapunov_DF: beta0 = 0");
    auto f = [&](int i, int j) { return s.m(i, j) * fact2(i, j); };
    auto g = [&](int i, int j) { return s.n(i, j) * fact2(i, j); };
    const double cubic = f(3, 0) + f(1, 2) + g(2, 1) + g(0, 3);
    const double quad = f(1, 1) * (f(2, 0) + f(0, 2)) - g(1, 1) * (g(2, 0) + g(0, 2)) - f(2, 0) * g(2, 0)
                      + f(0, 2) * g(0, 2);
    return (cubic + quad / b0) / 16;
}

struct BlowupL1 {
    double l1 = 0;
    double lambda1 = 0;
    double detT = 0;
    Branch branch = Branch::UseN10;
    PlanarPolySystem normalized;
};

inline BlowupL1 l1_blowup_detail(const NormalFormCoefficients& k, double r, Branch branch = Branch::Auto) {
    BlowupL1 out;
    out.lambda1 = hopf_lambda1(k, r);
    auto s = blow_up(k, r, out.lambda1);
    auto e = equilibrium_series(s);
    auto eq = newton_equilibrium(s, {e.x(), e.y()});
    auto t = translate_to_equilibrium(s, eq);
    auto nz = normalize_linear(t, branch);
    nz.sys.label = Stage::dnf7;
    out.l1 = lyapunov_DF(nz.sys);
    out.detT = nz.detT;
    out.branch = nz.branch;
    out.normalized = nz.sys;
    return out;
}

inline double l1_blowup(const NormalFormCoefficients& k, double r, Branch branch = Branch::Auto) {
    return l1_blowup_detail(k, r, branch).l1;
}

// r-grid used by every oracle fit.
inline std::vector<double> oracle_r_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 16; ++i) g.push_back(0.02 + 0.005 * i);
    return g;
}

}  // namespace canard
