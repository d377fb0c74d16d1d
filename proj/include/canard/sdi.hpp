#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "allee.hpp"
#include "errors.hpp"

namespace canard {

struct BranchPair {
    double x = 0;      // right preimage, x >= xM (repelling branch side of the cycle)
    double sigma = 0;  // left preimage, sigma <= xM, F(sigma) = F(x)
};

// Both preimages of height y on y = F(x): roots of x^2 + (m+n+y-1)x + m(n+y) = 0.
inline BranchPair branch_inverse(double y, const AlleeParams& p) {
    const double b = 1 - p.m - p.n - y;
    double d = b * b - 4 * p.m * (p.n + y);
    if (d < 0) {
        // rounding at the fold itself is tolerated, anything larger is above it
        if (d < -1e-13 * std::max(1.0, b * b)) throw std::domain_error("branch_inverse: height above the fold");
        d = 0;
    }
    const double sq = std::sqrt(d);
    BranchPair r;
    r.x = 0.5 * (b + sq);
    r.sigma = r.x > 0 ? p.m * (p.n + y) / r.x : 0.5 * (b - sq);
    if (d == 0) r.sigma = r.x;
    return r;
}

// Same pair at height yM - u^2. The discriminant vanishes at the fold, so it
// factors as u^2 (2 b0 + u^2 + 4m) and keeps full relative accuracy as u -> 0.
inline BranchPair branch_below_fold(double u, const AlleeParams& p) {
    const double yM = fold_point(p.m, p.n).y;
    const double b0 = 1 - p.m - p.n - yM;
    const double sq = std::abs(u) * std::sqrt(2 * b0 + u * u + 4 * p.m);
    BranchPair r;
    r.x = 0.5 * (b0 + u * u + sq);
    r.sigma = p.m * (p.n + yM - u * u) / r.x;
    return r;
}

inline double phi(double y, const AlleeParams& p) {
    const double ag = p.alpha + p.gamma;
    return ag * y + p.gamma + p.n * ag - std::sqrt(p.m) * p.alpha - p.m * ag;
}

inline double phi_root_y0(const AlleeParams& p) {
    const double ag = p.alpha + p.gamma;
    return (std::sqrt(p.m) * p.alpha + (p.m - p.n) * ag - p.gamma) / ag;
}

// h(x) = x F'(x) / (F(x) (alpha x - beta - gamma F(x))): the slow-divergence density
// on the critical curve. lambda0 shifts beta.
inline double sdi_h(double x, const AlleeParams& p, double lambda0 = 0) {
    const double F = allee_F(x, p.m, p.n);
    return x * allee_dF(x, p.m) / (F * (p.alpha * x - (p.beta + lambda0) - p.gamma * F));
}

// Psi(x) = (m - sqrt(m) + x) / ((m+x)^2 (alpha x - beta - gamma F) F)
inline double psi_sdi(double x, const AlleeParams& p) {
    const double F = allee_F(x, p.m, p.n);
    return (p.m - std::sqrt(p.m) + x) / ((p.m + x) * (p.m + x) * (p.alpha * x - p.beta - p.gamma * F) * F);
}

// (h(sigma) - h(x)) / (Psi(sigma) Psi(x) (sigma - x) F(x) Phi(y)) at height y.
inline double identity_ratio(double y, const AlleeParams& p) {
    auto b = branch_inverse(y, p);
    const double lhs = sdi_h(b.sigma, p) - sdi_h(b.x, p);
    const double rhs = psi_sdi(b.sigma, p) * psi_sdi(b.x, p) * (b.sigma - b.x) * allee_F(b.x, p.m, p.n) * phi(y, p);
    return lhs / rhs;
}

// Largest admissible s (exclusive): yM - max(yhat, 0), yhat = y3 when E3 exists.
inline double admissible_s_max(const AlleeParams& p) {
    auto M = fold_point(p.m, p.n);
    auto R = equilibria(p);
    double yhat = 0;
    if (R.E3 && R.E3->y >= 0) yhat = R.E3->y;
    return M.y - yhat;
}

struct QuadratureOptions {
    double rel_tol = 1e-8;
    unsigned max_depth = 20;
};

namespace detail {

// Gauss-Kronrod on the unit interval: Boost reports panel errors in the units of
// the mapped variable, so short intervals are rescaled to keep the test relative.
template <typename F>
double adaptive_quad(F&& f, double a, double b, const QuadratureOptions& q) {
    const double w = b - a;
    auto g = [&](double t) { return f(a + w * t); };
    double err = 0, l1 = 0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, 1.0, q.max_depth, q.rel_tol,
                                                                                  &err, &l1);
    if (!std::isfinite(v) || err > 10 * q.rel_tol * std::max(l1, 1e-300))
        throw NumericalFailure("slow divergence integral: quadrature did not converge");
    return w * v;
}

inline void require_admissible(const AlleeParams& p, double s) {
    const double smax = admissible_s_max(p);
    if (!(s >= 0) || !(s < smax))
        throw std::domain_error("slow divergence integral: s = " + std::to_string(s) + " outside [0, " +
                                std::to_string(smax) + ")");
}

}  // namespace detail

// Cross-check: the same integral in x, int h(x) F'(x) dx from the right end to the
// left end, split at the fold.
inline double sdi_x_form(const AlleeParams& p, double lambda0, double s, const QuadratureOptions& q = {}) {
    detail::require_admissible(p, s);
    if (s == 0) return 0;
    auto M = fold_point(p.m, p.n);
    auto ends = branch_inverse(M.y - s, p);
    auto f = [&](double x) { return sdi_h(x, p, lambda0) * allee_dF(x, p.m); };
    return detail::adaptive_quad(f, ends.x, M.x, q) + detail::adaptive_quad(f, M.x, ends.sigma, q);
}

// I(s) = int_{yM}^{yM-s} h(sigma(x)) - h(x) dy along the critical curve.
inline double slow_divergence_integral(const AlleeParams& p, double lambda0, double s,
                                       const QuadratureOptions& q = {}) {
    detail::require_admissible(p, s);
    if (s == 0) return 0;
    // y = yM - u^2 removes the square-root behaviour of both preimages at the fold
    auto f = [&](double u) {
        auto b = branch_below_fold(u, p);
        return -2 * u * (sdi_h(b.sigma, p, lambda0) - sdi_h(b.x, p, lambda0));
    };
    try {
        return detail::adaptive_quad(f, 0.0, std::sqrt(s), q);
    } catch (const NumericalFailure&) {
        // Very close to the fold h(sigma) - h(x) is a difference of two nearly equal
        // 0/0 quotients and the y-form is limited by rounding; the x-form is not.
        return sdi_x_form(p, lambda0, s, q);
    }
}

enum class PhiCase { PhiNegative, PhiPositive, PhiSignChange };

inline const char* to_string(PhiCase c) {
    switch (c) {
        case PhiCase::PhiNegative: return "PhiNegative";
        case PhiCase::PhiPositive: return "PhiPositive";
        case PhiCase::PhiSignChange: return "PhiSignChange";
    }
    return "?";
}

inline PhiCase phi_case(const AlleeParams& p) {
    if (p.m >= m_star(p.alpha, p.gamma)) return PhiCase::PhiNegative;
    return phi_root_y0(p) <= 0 ? PhiCase::PhiPositive : PhiCase::PhiSignChange;
}

struct SdiProfile {
    std::vector<double> s_grid;
    std::vector<double> values;
    int zero_count = 0;
    PhiCase phi_case = PhiCase::PhiNegative;
    double s_max = 0;
    double y0 = 0;
};

inline void require_cyclicity_hypotheses(const AlleeParams& p) {
    validate(p);
    const double s = 1 - p.m - p.n;
    if (!(s > 0)) throw ConditionViolation("cyclicity bound needs 1 - m - n > 0");
    if (!(s * s - 4 * p.m * p.n > 0)) throw ConditionViolation("cyclicity bound needs Delta1 > 0");
    const double gs = gamma_star(p.m, p.n, p.alpha, p.beta);
    if (std::abs(p.gamma - gs) > 1e-9 * std::max(1.0, gs))
        throw ConditionViolation("cyclicity bound needs gamma = gamma* (fold coincides with E4)");
}

inline int sign_of(double v) { return (v > 0) - (v < 0); }

inline SdiProfile cyclicity_report(const AlleeParams& p, int grid_size, const QuadratureOptions& q = {}) {
    if (grid_size < 2) throw std::invalid_argument("cyclicity_report: grid_size must be at least 2");
    require_cyclicity_hypotheses(p);
    SdiProfile R;
    R.s_max = admissible_s_max(p);
    R.phi_case = phi_case(p);
    R.y0 = phi_root_y0(p);
    for (int k = 1; k <= grid_size; ++k) {
        const double s = R.s_max * k / (grid_size + 1);
        R.s_grid.push_back(s);
        R.values.push_back(slow_divergence_integral(p, 0, s, q));
    }
    // count sign changes; each detected change is refined once on a finer subgrid
    for (std::size_t k = 0; k + 1 < R.values.size(); ++k) {
        if (sign_of(R.values[k]) * sign_of(R.values[k + 1]) >= 0) continue;
        const int sub = 8;
        int prev = sign_of(R.values[k]), changes = 0;
        for (int j = 1; j <= sub; ++j) {
            const double s = R.s_grid[k] + (R.s_grid[k + 1] - R.s_grid[k]) * j / sub;
            const int cur = j == sub ? sign_of(R.values[k + 1]) : sign_of(slow_divergence_integral(p, 0, s, q));
            if (cur != 0 && prev != 0 && cur != prev) ++changes;
            if (cur != 0) prev = cur;
        }
        R.zero_count += std::max(changes, 1);
    }
    return R;
}

// Random parameter set satisfying the cyclicity hypotheses (gamma = gamma* > 0).
template <typename Rng>
AlleeParams random_cyclicity_params(Rng& rng, double eps = 0.01) {
    std::uniform_real_distribution<double> U(0, 1);
    for (;;) {
        AlleeParams p;
        p.eps = eps;
        p.n = 0.01 + 0.49 * U(rng);
        const double mmax = (1 - std::sqrt(p.n)) * (1 - std::sqrt(p.n));
        p.m = 0.01 + (mmax - 0.01) * U(rng);
        const double s = 1 - p.m - p.n;
        if (!(p.m > 0.01) || !(s > 0) || !(s * s - 4 * p.m * p.n > 0)) continue;
        p.alpha = 0.2 + 1.8 * U(rng);
        auto M = fold_point(p.m, p.n);
        p.beta = (0.05 + 0.9 * U(rng)) * p.alpha * M.x;
        p.gamma = gamma_star(p.m, p.n, p.alpha, p.beta);
        if (!(p.gamma > 0)) continue;
        return p;
    }
}

}  // namespace canard
