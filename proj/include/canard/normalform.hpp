#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace canard {

// Constants of the slow-fast normal form
//   x' = -y h1 + x^2 h2 + eps h3,   y' = eps (x h4 - lambda h5 + y h6)
// h1 = 1 + a_ij x^i y^j, h2 = 1 + b10 x, h3 = c_ij x^i y^j, h4 = 1 + d_i0 x^i,
// h5 = 1 + e_ij x^i y^j, h6 = f_ij x^i y^j.
struct NormalFormCoefficients {
    double a10 = 0, a01 = 0, a20 = 0, a11 = 0, a02 = 0;
    double b10 = 0;
    double c10 = 0, c01 = 0, c20 = 0, c11 = 0, c02 = 0, c30 = 0, c21 = 0, c12 = 0, c03 = 0;
    double d10 = 0, d20 = 0;
    double e10 = 0, e01 = 0, e20 = 0, e11 = 0, e02 = 0, e30 = 0, e21 = 0, e12 = 0, e03 = 0;
    double f00 = 0, f10 = 0, f01 = 0, f20 = 0, f11 = 0, f02 = 0;

    struct Field {
        std::string_view name;
        double NormalFormCoefficients::*ptr;
    };
    static const std::array<Field, 32>& fields() {
        using N = NormalFormCoefficients;
        static const std::array<Field, 32> f{{
            {"a10", &N::a10}, {"a01", &N::a01}, {"a20", &N::a20}, {"a11", &N::a11}, {"a02", &N::a02},
            {"b10", &N::b10},
            {"c10", &N::c10}, {"c01", &N::c01}, {"c20", &N::c20}, {"c11", &N::c11}, {"c02", &N::c02},
            {"c30", &N::c30}, {"c21", &N::c21}, {"c12", &N::c12}, {"c03", &N::c03},
            {"d10", &N::d10}, {"d20", &N::d20},
            {"e10", &N::e10}, {"e01", &N::e01}, {"e20", &N::e20}, {"e11", &N::e11}, {"e02", &N::e02},
            {"e30", &N::e30}, {"e21", &N::e21}, {"e12", &N::e12}, {"e03", &N::e03},
            {"f00", &N::f00}, {"f10", &N::f10}, {"f01", &N::f01}, {"f20", &N::f20}, {"f11", &N::f11},
            {"f02", &N::f02},
        }};
        return f;
    }

    double& operator[](std::string_view key) {
        for (auto& f : fields())
            if (f.name == key) return this->*f.ptr;
        throw std::invalid_argument("unknown normal-form coefficient '" + std::string(key) + "'");
    }
    double operator[](std::string_view key) const {
        return const_cast<NormalFormCoefficients&>(*this)[key];
    }

    bool finite() const {
        for (auto& f : fields())
            if (!std::isfinite(this->*f.ptr)) return false;
        return true;
    }

    // a1..a5 shorthands
    double a1() const { return c10; }
    double a2() const { return a10; }
    double a3() const { return b10; }
    double a4() const { return d10; }
    double a5() const { return f00; }
};

inline nlohmann::json to_json_value(const NormalFormCoefficients& nf) {
    nlohmann::json j = nlohmann::json::object();
    for (auto& f : NormalFormCoefficients::fields()) j[std::string(f.name)] = nf.*f.ptr;
    return j;
}

inline NormalFormCoefficients nf_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("normal-form coefficients must be a JSON object");
    NormalFormCoefficients nf;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_number())
            throw std::invalid_argument("coefficient '" + it.key() + "' is not a number");
        nf[it.key()] = it.value().get<double>();
    }
    if (!nf.finite()) throw std::invalid_argument("normal-form coefficients must be finite");
    return nf;
}

enum class HopfClass { Supercritical, Subcritical, DegenerateSupercritical, DegenerateSubcritical, Undetermined };

inline const char* to_string(HopfClass c) {
    switch (c) {
        case HopfClass::Supercritical: return "Supercritical";
        case HopfClass::Subcritical: return "Subcritical";
        case HopfClass::DegenerateSupercritical: return "DegenerateSupercritical";
        case HopfClass::DegenerateSubcritical: return "DegenerateSubcritical";
        case HopfClass::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

struct HopfAnalysis {
    double A = 0, rho1 = 0, rho3 = 0, omega1 = 0, omega2 = 0;
    HopfClass classification = HopfClass::Undetermined;
};

inline double compute_A(const NormalFormCoefficients& nf) {
    return -nf.a10 + 3 * nf.b10 - 2 * nf.d10 - 2 * nf.f00;
}

inline void require_positive_eps(double eps) {
    if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
}

inline double lambda_H(double a1, double a5, double eps) {
    require_positive_eps(eps);
    return -(a1 + a5) * eps / 2;
}

inline double lambda_c(double a1, double a5, double A, double eps) {
    require_positive_eps(eps);
    return -((a1 + a5) / 2 + A / 8) * eps;
}

struct RhoCoefficients {
    double rho1 = 0, rho3 = 0, rho31 = 0, rho32 = 0;
};

inline RhoCoefficients rho_coefficients(const NormalFormCoefficients& nf) {
    RhoCoefficients r;
    r.rho1 = -(nf.c10 + nf.f00) / 2;
    r.rho31 = nf.a10 * nf.c10 + 2 * nf.c10 * nf.f00 - 2 * nf.c20 + nf.e01 - nf.f10;
    r.rho32 = nf.a10 - 3 * nf.b10 + 2 * (nf.d10 - nf.e10 + nf.f00);
    r.rho3 = r.rho1 / 8 * (r.rho31 + r.rho1 * r.rho32);
    return r;
}

// The r^2 coefficient of the trace-zero curve lambda1*(r) as measured by the
// blow-up pipeline: four times the closed-form rho3.
inline double rho3_trace_zero(const NormalFormCoefficients& nf) {
    auto r = rho_coefficients(nf);
    return r.rho1 / 2 * (r.rho31 + r.rho1 * r.rho32);
}

// omega2 split into its eight term groups so each can be checked alone.
namespace omega2_terms {

inline double line1(const NormalFormCoefficients& k) {
    return 6 * k.a10 * k.b10 * k.c10 + 6 * k.a10 * k.b10 * k.f00 - 4 * k.a10 * k.c10 * k.d10
         + k.a10 * k.c10 * k.e10 - 4 * k.a10 * k.c10 * k.f00;
}

inline double line2(const NormalFormCoefficients& k) {
    return -4 * k.a10 * k.c01 - 2 * k.a10 * k.a10 * k.c10 + 2 * k.a20 * k.c10 - 2 * k.a10 * k.c20
         - 6 * k.a10 * k.d10 * k.f00 + k.a10 * k.e10 * k.f00;
}

inline double line3(const NormalFormCoefficients& k) {
    return -12 * k.a10 * k.f00 * k.f00 - 4 * k.a10 * k.a10 * k.f00 + 6 * k.a20 * k.f00
         + 2 * k.a01 * (k.a10 + 2 * k.f00) - 2 * k.a11 + 2 * k.f20;
}

inline double line4(const NormalFormCoefficients& k) {
    return 12 * k.b10 * k.c10 * k.d10 - 3 * k.b10 * k.c10 * k.e10 + 12 * k.b10 * k.c10 * k.f00
         + 6 * k.b10 * k.c01 + 12 * k.b10 * k.d10 * k.f00;
}

inline double line5(const NormalFormCoefficients& k) {
    return -3 * k.b10 * k.e10 * k.f00 + 18 * k.b10 * k.f00 * k.f00 + 4 * k.c10 * k.d10 * k.e10
         - 8 * k.c10 * k.d10 * k.f00 - 8 * k.c10 * k.d10 * k.d10 - 4 * k.c01 * k.d10;
}

inline double line6(const NormalFormCoefficients& k) {
    return -4 * k.c20 * k.d10 + 6 * k.c10 * k.d20 + 4 * k.c10 * k.e10 * k.f00 - 2 * k.c10 * k.e01
         - 2 * k.c10 * k.e20 - 8 * k.c01 * k.f00;
}

inline double line7(const NormalFormCoefficients& k) {
    return -8 * k.c20 * k.f00 + 2 * k.c10 * k.f10 + 2 * k.c11 + 6 * k.c30 + 4 * k.d10 * k.e10 * k.f00
         - 16 * k.d10 * k.f00 * k.f00 - 8 * k.d10 * k.d10 * k.f00;
}

inline double line8(const NormalFormCoefficients& k) {
    return 6 * k.d20 * k.f00 - 2 * k.d10 * k.f10 + 4 * k.e10 * k.f00 * k.f00 - 2 * k.e01 * k.f00
         - 2 * k.e20 * k.f00 - 8 * k.f00 * k.f00 * k.f00 + 4 * k.f10 * k.f00;
}

}  // namespace omega2_terms

struct OmegaCoefficients {
    double omega1 = 0, omega2 = 0;
};

inline OmegaCoefficients omega_coefficients(const NormalFormCoefficients& nf) {
    using namespace omega2_terms;
    OmegaCoefficients o;
    o.omega1 = compute_A(nf);
    o.omega2 = line1(nf) + line2(nf) + line3(nf) + line4(nf) + line5(nf) + line6(nf) + line7(nf) + line8(nf);
    return o;
}

inline double default_classify_tol(double omega1, double omega2) {
    return 1e-9 * std::max(1.0, std::abs(omega1) + std::abs(omega2));
}

inline HopfClass classify_hopf(double omega1, double omega2, double tol) {
    if (!(tol > 0)) throw std::invalid_argument("classify_hopf: tol must be positive");
    if (omega1 < -tol) return HopfClass::Supercritical;
    if (omega1 > tol) return HopfClass::Subcritical;
    if (omega2 < -tol) return HopfClass::DegenerateSupercritical;
    if (omega2 > tol) return HopfClass::DegenerateSubcritical;
    return HopfClass::Undetermined;
}

inline HopfClass classify_hopf(double omega1, double omega2) {
    return classify_hopf(omega1, omega2, default_classify_tol(omega1, omega2));
}

inline double l1_series(double omega1, double omega2, double eps) {
    require_positive_eps(eps);
    return std::sqrt(eps) * (omega1 / 16 + omega2 * eps / 32);
}

inline HopfAnalysis analyze_normal_form(const NormalFormCoefficients& nf) {
    HopfAnalysis h;
    h.A = compute_A(nf);
    auto rho = rho_coefficients(nf);
    h.rho1 = rho.rho1;
    h.rho3 = rho.rho3;
    auto om = omega_coefficients(nf);
    h.omega1 = om.omega1;
    h.omega2 = om.omega2;
    h.classification = classify_hopf(h.omega1, h.omega2);
    return h;
}

}  // namespace canard
