#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "jet.hpp"
#include "normalform.hpp"

namespace canard {

// x' = x (x/(m+x) - n - x - y),  y' = eps y (alpha x - beta - gamma y)
struct AlleeParams {
    double m = 0, n = 0, alpha = 0, beta = 0, gamma = 0, eps = 0.01;
};

class ConditionViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline bool condition5(double m, double n) {
    return n > 0 && n < 1 && m > 0 && m < (1 - std::sqrt(n)) * (1 - std::sqrt(n));
}

inline void require_condition5(double m, double n) {
    if (!std::isfinite(m) || !std::isfinite(n) || !condition5(m, n))
        throw ConditionViolation("existence condition violated: need 0 < n < 1 and 0 < m < (1 - sqrt(n))^2");
}

inline void validate(const AlleeParams& p) {
    for (double v : {p.m, p.n, p.alpha, p.beta, p.gamma, p.eps})
        if (!std::isfinite(v) || !(v > 0)) throw ConditionViolation("model parameters must be finite and positive");
    if (p.eps > 0.1) throw ConditionViolation("eps must lie in (0, 0.1]");
    require_condition5(p.m, p.n);
}

inline AlleeParams allee_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("model parameters must be a JSON object");
    AlleeParams p;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (!it.value().is_number()) throw std::invalid_argument("parameter '" + k + "' is not a number");
        double v = it.value().get<double>();
        if (k == "m") p.m = v;
        else if (k == "n") p.n = v;
        else if (k == "alpha") p.alpha = v;
        else if (k == "beta") p.beta = v;
        else if (k == "gamma") p.gamma = v;
        else if (k == "eps") p.eps = v;
        else throw std::invalid_argument("unknown model parameter '" + k + "'");
    }
    return p;
}

inline nlohmann::json to_json_value(const AlleeParams& p) {
    return {{"m", p.m}, {"n", p.n}, {"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}, {"eps", p.eps}};
}

inline double allee_F(double x, double m, double n) { return x / (m + x) - n - x; }
inline double allee_dF(double x, double m) { return m / ((m + x) * (m + x)) - 1; }
inline double allee_d2F(double x, double m) { return -2 * m / std::pow(m + x, 3); }

inline double allee_f(const AlleeParams& p, double x, double y) { return x * (allee_F(x, p.m, p.n) - y); }
inline double allee_g(const AlleeParams& p, double x, double y) {
    return p.eps * y * (p.alpha * x - p.beta - p.gamma * y);
}

struct Jacobian2 {
    double a = 0, b = 0, c = 0, d = 0;
    double trace() const { return a + d; }
    double det() const { return a * d - b * c; }
};

inline Jacobian2 allee_jacobian(const AlleeParams& p, double x, double y) {
    Jacobian2 J;
    J.a = allee_F(x, p.m, p.n) - y + x * allee_dF(x, p.m);
    J.b = -x;
    J.c = p.eps * p.alpha * y;
    J.d = p.eps * (p.alpha * x - p.beta - 2 * p.gamma * y);
    return J;
}

struct FoldPoint {
    double x = 0, y = 0;
};

inline FoldPoint fold_point(double m, double n) {
    require_condition5(m, n);
    const double sm = std::sqrt(m);
    return {sm - m, 1 - n + m - 2 * sm};
}

struct BranchInterval {
    std::string name;
    char along = 'x';  // the axis the interval is measured on
    double lo = 0, hi = 0;
    bool attracting = false;
};

// S1a = {x = 0, y >= 0}; Sr and S2a split y = F(x) at the fold between the
// zeros of F. The existence condition makes yM > 0, so F always has two positive zeros.
inline std::vector<BranchInterval> critical_branches(double m, double n) {
    auto M = fold_point(m, n);
    const double s = 1 - m - n;
    const double sq = std::sqrt(s * s - 4 * m * n);
    const double xr = 0.5 * (s + sq);
    const double xl = m * n / xr;
    return {{"S1a", 'y', 0.0, std::numeric_limits<double>::infinity(), true},
            {"Sr", 'x', xl, M.x, false},
            {"S2a", 'x', M.x, xr, true}};
}

enum class EqType { StableNode, UnstableNode, StableFocus, UnstableFocus, Saddle, Center, Degenerate };

inline const char* to_string(EqType t) {
    switch (t) {
        case EqType::StableNode: return "stable node";
        case EqType::UnstableNode: return "unstable node";
        case EqType::StableFocus: return "stable focus";
        case EqType::UnstableFocus: return "unstable focus";
        case EqType::Saddle: return "saddle";
        case EqType::Center: return "center";
        case EqType::Degenerate: return "degenerate";
    }
    return "?";
}

inline EqType classify_equilibrium(const Jacobian2& J) {
    const double tr = J.trace(), det = J.det();
    const double scale = std::max({std::abs(J.a), std::abs(J.b), std::abs(J.c), std::abs(J.d), 1e-300});
    if (std::abs(det) < 1e-14 * scale * scale) return EqType::Degenerate;
    if (det < 0) return EqType::Saddle;
    const double disc = tr * tr - 4 * det;
    if (tr == 0) return EqType::Center;
    if (disc >= 0) return tr < 0 ? EqType::StableNode : EqType::UnstableNode;
    return tr < 0 ? EqType::StableFocus : EqType::UnstableFocus;
}

struct Equilibrium {
    double x = 0, y = 0;
    EqType type = EqType::Degenerate;
    double trace = 0, det = 0;
};

struct EquilibriaReport {
    Equilibrium E0;
    double delta1 = 0, delta2 = 0;
    std::optional<Equilibrium> E1, E2, E3, E4;
    bool E12_collide = false;
    FoldPoint fold;
    double max_residual = 0;
};

inline Equilibrium make_equilibrium(const AlleeParams& p, double x, double y) {
    Equilibrium e{x, y};
    auto J = allee_jacobian(p, x, y);
    e.type = classify_equilibrium(J);
    e.trace = J.trace();
    e.det = J.det();
    return e;
}

struct E34Coefficients {
    double b = 0, c = 0, delta2 = 0;
};

inline E34Coefficients e34_coefficients(const AlleeParams& p) {
    const double ag = p.alpha + p.gamma;
    E34Coefficients k;
    k.b = (p.gamma * (p.m + p.n - 1) + p.m * p.alpha - p.beta) / ag;
    k.c = p.m * (p.gamma * p.n - p.beta) / ag;
    k.delta2 = k.b * k.b - 4 * k.c;
    return k;
}

inline EquilibriaReport equilibria(const AlleeParams& p) {
    validate(p);
    EquilibriaReport R;
    R.fold = fold_point(p.m, p.n);
    R.E0 = make_equilibrium(p, 0, 0);
    const double s = 1 - p.m - p.n;
    R.delta1 = s * s - 4 * p.m * p.n;
    auto track = [&](const Equilibrium& e) {
        R.max_residual = std::max({R.max_residual, std::abs(allee_f(p, e.x, e.y)), std::abs(allee_g(p, e.x, e.y))});
    };
    track(R.E0);
    if (s > 0 && R.delta1 >= 0) {
        if (R.delta1 == 0) {
            R.E12_collide = true;
            R.E1 = make_equilibrium(p, s / 2, 0);
            track(*R.E1);
        } else {
            const double sq = std::sqrt(R.delta1);
            // stable form of the smaller root
            const double x2 = 0.5 * (s + sq);
            const double x1 = p.m * p.n / x2;
            R.E1 = make_equilibrium(p, x1, 0);
            R.E2 = make_equilibrium(p, x2, 0);
            track(*R.E1);
            track(*R.E2);
        }
    }
    auto k = e34_coefficients(p);
    R.delta2 = k.delta2;
    if (s > 0 && R.delta1 > 0 && k.delta2 > 0) {
        const double sq = std::sqrt(k.delta2);
        const double x3 = 0.5 * (-k.b - sq), x4 = 0.5 * (-k.b + sq);
        for (auto [x, slot] : {std::pair{x3, &R.E3}, std::pair{x4, &R.E4}}) {
            if (x <= 0) continue;
            const double y = (p.alpha * x - p.beta) / p.gamma;
            *slot = make_equilibrium(p, x, y);
            track(**slot);
        }
    }
    return R;
}

inline double gamma_star(double m, double n, double alpha, double beta) {
    const double sm = std::sqrt(m);
    const double den = -m + 2 * sm + n - 1;
    if (den == 0) throw std::invalid_argument("gamma_star: zero denominator (y_M = 0)");
    return (beta + alpha * m - alpha * sm) / den;
}

inline double gamma_star_fold_form(double m, double n, double alpha, double beta) {
    auto M = fold_point(m, n);
    if (M.y == 0) throw std::invalid_argument("gamma_star: zero denominator (y_M = 0)");
    return (alpha * M.x - beta) / M.y;
}

inline double beta_star(const AlleeParams& p) {
    auto M = fold_point(p.m, p.n);
    return p.alpha * M.x - p.gamma * M.y;
}

// K = sqrt(alpha xM yM): the time scale of the model normal form.
inline double model_K(const AlleeParams& p) {
    auto M = fold_point(p.m, p.n);
    const double v = p.alpha * M.x * M.y;
    if (!(v > 0)) throw ConditionViolation("degenerate fold: alpha xM yM must be positive");
    return std::sqrt(v);
}

struct ModelNormalForm {
    NormalFormCoefficients nf;
    double K = 0;
    double kx = 0, ky = 0;  // xbar = kx X, ybar = ky Y (both signed, sqrt(m) - 1 < 0)
    double beta_star = 0;
};

// Jet transform of the model about the fold at lambda = 0 (beta = beta*).
inline ModelNormalForm normal_form_coeffs(const AlleeParams& p) {
    require_condition5(p.m, p.n);
    auto M = fold_point(p.m, p.n);
    ModelNormalForm out;
    out.K = model_K(p);
    const double sm = std::sqrt(p.m);
    out.kx = out.K / (sm - 1);
    out.ky = p.alpha * M.y / (sm - 1);
    out.beta_star = beta_star(p);
    const double K = out.K, kx = out.kx, ky = out.ky;

    const int D = 4;
    Jet X = Jet::variable(2, D, 0), Y = Jet::variable(2, D, 1);
    Jet u = X.scaled(kx);
    Jet x = u + M.x;
    Jet y = Y.scaled(ky) + M.y;
    Jet F = x * reciprocal(u + (p.m + M.x)) - x - p.n;
    Jet xdot = x * (F - y);
    Jet ydot = y * (x.scaled(p.alpha) - out.beta_star - y.scaled(p.gamma));
    Jet P = xdot.scaled(1 / (kx * K));  // X' in tau = K t
    Jet Q = ydot.scaled(1 / (ky * K));  // Y' / eps
    // -lambda h5: dQ/dbeta = -y/(ky K); lambda = beta_offset * yM/(ky K)
    Jet h5 = y.scaled(1 / M.y);

    auto& nf = out.nf;
    // P = -Y h1 + X^2 h2: Y-carrying terms belong to h1, pure-X cubic to h2.
    nf.a10 = -P.coeff(1, 1);
    nf.a01 = -P.coeff(0, 2);
    nf.a20 = -P.coeff(2, 1);
    nf.a11 = -P.coeff(1, 2);
    nf.a02 = -P.coeff(0, 3);
    nf.b10 = P.coeff(3, 0);
    // pure-X terms of order <= 1 would be eps h3; the model has none
    nf.c10 = P.coeff(1, 0);
    nf.c01 = 0;
    // Q = X h4 + Y h6
    nf.d10 = Q.coeff(2, 0);
    nf.d20 = Q.coeff(3, 0);
    nf.f00 = Q.coeff(0, 1);
    nf.f10 = Q.coeff(1, 1);
    nf.f01 = Q.coeff(0, 2);
    nf.f20 = Q.coeff(2, 1);
    nf.f11 = Q.coeff(1, 2);
    nf.f02 = Q.coeff(0, 3);
    nf.e10 = h5.coeff(1, 0);
    nf.e01 = h5.coeff(0, 1);
    nf.e20 = h5.coeff(2, 0);
    nf.e11 = h5.coeff(1, 1);
    nf.e02 = h5.coeff(0, 2);
    return out;
}

inline double psi_of_m(double m, double alpha, double gamma) {
    const double sm = std::sqrt(m);
    return 2 * gamma * (1 - sm) + alpha - 3 * alpha * sm;
}

// Closed forms for the leading model coefficients.
struct ModelClosedForms {
    double a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, A = 0;
};

inline ModelClosedForms model_closed_forms(const AlleeParams& p) {
    auto M = fold_point(p.m, p.n);
    const double K = model_K(p), sm = std::sqrt(p.m);
    ModelClosedForms c;
    c.a1 = 0;
    c.a2 = p.alpha * M.y / (K * (sm - 1));
    c.a3 = -K / ((sm - 1) * (sm - 1));
    c.a4 = 0;
    c.a5 = (p.alpha * M.x - p.beta - 2 * p.gamma * M.y) / K;
    c.A = psi_of_m(p.m, p.alpha, p.gamma) * M.y / (K * (1 - sm));
    return c;
}

enum class PsiCase { Case1a, Case1b, Case1c, Case2 };

inline const char* to_string(PsiCase c) {
    switch (c) {
        case PsiCase::Case1a: return "1a";
        case PsiCase::Case1b: return "1b";
        case PsiCase::Case1c: return "1c";
        case PsiCase::Case2: return "2";
    }
    return "?";
}

struct PsiReport {
    double psi = 0;
    double m_star = 0;
    PsiCase which = PsiCase::Case1a;
    int sign_A = 0;
};

inline double m_star(double alpha, double gamma) {
    const double r = (alpha + 2 * gamma) / (3 * alpha + 2 * gamma);
    return r * r;
}

inline PsiReport psi_case_analysis(double m, double n, double alpha, double gamma) {
    PsiReport R;
    R.psi = psi_of_m(m, alpha, gamma);
    R.m_star = m_star(alpha, gamma);
    const double nlim = std::pow(2 * alpha / (3 * alpha + 2 * gamma), 2);
    if (n > nlim) {
        R.which = PsiCase::Case2;
        R.sign_A = 1;
    } else if (m < R.m_star) {
        R.which = PsiCase::Case1a;
        R.sign_A = 1;
    } else if (m > R.m_star) {
        R.which = PsiCase::Case1b;
        R.sign_A = -1;
    } else {
        R.which = PsiCase::Case1c;
        R.sign_A = 0;
    }
    return R;
}

// Closed form of omega2 on the omega1 = 0 surface.
inline double omega2_at_degeneracy(double alpha, double gamma, double yM) {
    if (!(alpha > 0 && gamma > 0 && yM > 0)) throw std::invalid_argument("omega2_at_degeneracy: inputs must be positive");
    const double s2 = std::sqrt(2.0), ag = alpha + 2 * gamma, tg = 3 * alpha + 2 * gamma;
    return gamma * tg * tg
         * (9 * s2 * tg * std::sqrt(ag) * std::pow(yM, 1.5) + 8 * (s2 * alpha * std::sqrt(ag * yM) + 1))
         / (8 * alpha * alpha * ag);
}

// The same quantity as produced by the general omega2 polynomial applied to the
// model normal form at m = m*.
inline double omega2_at_degeneracy_consistent(double alpha, double gamma, double yM) {
    if (!(alpha > 0 && gamma > 0 && yM > 0)) throw std::invalid_argument("omega2_at_degeneracy: inputs must be positive");
    const double s2 = std::sqrt(2.0), ag = alpha + 2 * gamma, tg = 3 * alpha + 2 * gamma;
    return gamma * tg * tg
         * (9 * s2 * tg * std::sqrt(ag) * std::pow(yM, 1.5) + 4 * s2 * alpha * std::sqrt(ag * yM))
         / (8 * alpha * alpha * ag);
}

// beta <-> lambda in the model normal form. The consistent scaling follows the
// signed ybar factor; the flipped variant carries the opposite sign.
inline double lambda_from_beta(const AlleeParams& p, double beta) {
    const double sm = std::sqrt(p.m);
    return (beta - beta_star(p)) * (sm - 1) / (p.alpha * model_K(p));
}
inline double beta_from_lambda(const AlleeParams& p, double lambda) {
    const double sm = std::sqrt(p.m);
    return beta_star(p) + lambda * p.alpha * model_K(p) / (sm - 1);
}
inline double lambda_from_beta_flipped(const AlleeParams& p, double beta) {
    return -lambda_from_beta(p, beta);
}

struct BifurcationCurves {
    double lambda_h = 0, lambda_c = 0;
    double beta_h = 0, beta_c = 0;  // consistent conversion
    double A = 0;
    double lambda_of_beta = 0;      // where p.beta sits on the lambda axis
    bool coincidence = false;       // gamma = gamma*(beta) within tolerance
};

// Curves of the model normal form at lambda = 0 (beta = beta*). With
// require_coincidence the hypothesis gamma = gamma*(beta) is enforced.
inline BifurcationCurves model_bifurcation_curves(const AlleeParams& p, bool require_coincidence = true,
                                                  double gamma_tol = 1e-6) {
    validate(p);
    const double s = 1 - p.m - p.n;
    if (!(s > 0) || !(s * s - 4 * p.m * p.n > 0))
        throw ConditionViolation("bifurcation curves need Delta1 > 0 and 1 - m - n > 0");
    BifurcationCurves c;
    c.coincidence = std::abs(p.gamma - gamma_star(p.m, p.n, p.alpha, p.beta)) <= gamma_tol;
    if (require_coincidence && !c.coincidence)
        throw ConditionViolation("bifurcation curves need gamma = gamma* (fold coincides with E4)");
    auto nf = normal_form_coeffs(p).nf;
    c.A = compute_A(nf);
    c.lambda_h = lambda_H(nf.a1(), nf.a5(), p.eps);
    c.lambda_c = lambda_c(nf.a1(), nf.a5(), c.A, p.eps);
    c.beta_h = beta_from_lambda(p, c.lambda_h);
    c.beta_c = beta_from_lambda(p, c.lambda_c);
    c.lambda_of_beta = lambda_from_beta(p, p.beta);
    return c;
}

}  // namespace canard
