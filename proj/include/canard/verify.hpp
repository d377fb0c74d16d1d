#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "allee.hpp"
#include "blowup.hpp"
#include "dynamics.hpp"
#include "fit.hpp"
#include "normalform.hpp"
#include "sdi.hpp"

namespace canard {

struct CheckResult {
    int id = 0;  // 0 for informational lines
    std::string name;
    bool pass = false;
    std::string detail;
    nlohmann::json data = nlohmann::json::object();
};

struct VerifyOptions {
    std::uint64_t seed = 20240601;
    double omega2_perturbation = 0;  // negative-control hook: relative shift of the omega2 reference
    bool dynamics = true;
    bool sdi = true;
};

inline std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Uniform [-1, 1] coefficients, rejected when the rotation at the Hopf point of
// the largest oracle radius is weak (4N - M^2 <= 0.05).
template <typename Rng>
NormalFormCoefficients random_record(Rng& rng, bool omega1_zero = false) {
    std::uniform_real_distribution<double> U(-1, 1);
    for (;;) {
        NormalFormCoefficients nf;
        for (auto& f : NormalFormCoefficients::fields()) nf.*f.ptr = U(rng);
        if (omega1_zero) nf.a10 = 3 * nf.b10 - 2 * nf.d10 - 2 * nf.f00;
        try {
            const double r = oracle_r_grid().back();
            const double l = hopf_lambda1(nf, r);
            auto s = blow_up(nf, r, l);
            auto e = equilibrium_series(s);
            auto t = translate_to_equilibrium(s, newton_equilibrium(s, {e.x(), e.y()}));
            const double M = -(t.m(1, 0) + t.n(0, 1)), N = t.m(1, 0) * t.n(0, 1) - t.m(0, 1) * t.n(1, 0);
            if (4 * N - M * M > 0.05) return nf;
        } catch (const std::exception&) {
        }
    }
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

inline CheckResult check_omega1(std::uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(seed);
    CheckResult c{1, "omega1 oracle"};
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
        auto nf = random_record(rng);
        std::vector<std::pair<double, double>> s;
        for (double r : oracle_r_grid()) s.push_back({r, l1_blowup(nf, r)});
        auto fit = fit_odd_series(s, {1, 3, 5, 7});
        const double want = omega_coefficients(nf).omega1 / 16;
        const double e = rel_err(fit.coeff(1), want);
        worst = std::max(worst, e);
        c.data["records"].push_back({{"fitted", fit.coeff(1)}, {"omega1_over_16", want}, {"rel_err", e}});
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.pass = worst < 1e-3 && secs < 30;
    c.detail = fmt("20 records, max rel err %.2e (tol 1e-3), %.1f s (target < 30 s)", worst, secs);
    c.data["max_rel_err"] = worst;
    c.data["seconds"] = secs;
    return c;
}

inline CheckResult check_omega2(std::uint64_t seed, double perturbation = 0) {
    std::mt19937_64 rng(seed + 1);
    CheckResult c{2, "omega2 oracle"};
    double worst = 0, worst_even = 0;
    for (int k = 0; k < 10; ++k) {
        auto nf = random_record(rng, true);
        std::vector<std::pair<double, double>> s;
        for (double r : oracle_r_grid()) s.push_back({r, l1_blowup(nf, r)});
        auto fit = fit_odd_series(s, {1, 3, 5, 7});
        auto even = fit_odd_series(s, {0, 2, 1, 3, 5, 7, 9});
        const double want = omega_coefficients(nf).omega2 * (1 + perturbation) / 32;
        const double e = rel_err(fit.coeff(3), want);
        const double ev = std::max(std::abs(even.coeff(0)), std::abs(even.coeff(2)));
        worst = std::max(worst, e);
        worst_even = std::max(worst_even, ev);
        c.data["records"].push_back({{"fitted", fit.coeff(3)}, {"omega2_over_32", want}, {"rel_err", e},
                                     {"r0", even.coeff(0)}, {"r2", even.coeff(2)}});
    }
    c.pass = worst < 1e-2 && worst_even < 1e-6;
    c.detail = fmt("10 records on omega1 = 0, max rel err %.2e (tol 1e-2), max |r^0|,|r^2| %.2e (tol 1e-6)", worst,
                   worst_even);
    c.data["max_rel_err"] = worst;
    c.data["max_even"] = worst_even;
    return c;
}

inline CheckResult check_rho(std::uint64_t seed) {
    std::mt19937_64 rng(seed + 2);
    CheckResult c{3, "rho oracle"};
    double w1 = 0, w3 = 0, w2 = 0, w3_true = 0;
    for (int k = 0; k < 10; ++k) {
        auto nf = random_record(rng);
        std::vector<std::pair<double, double>> s;
        for (double r : oracle_r_grid()) s.push_back({r, hopf_lambda1(nf, r) / r});
        auto even = fit_odd_series(s, {0, 2, 4, 6});
        auto all = fit_odd_series(s, {0, 1, 2, 3, 4, 5, 6});
        auto rho = rho_coefficients(nf);
        const double e1 = rel_err(even.coeff(0), rho.rho1), e3 = rel_err(even.coeff(2), rho.rho3);
        w1 = std::max(w1, e1);
        w3 = std::max(w3, e3);
        w2 = std::max(w2, std::abs(all.coeff(1)));
        w3_true = std::max(w3_true, rel_err(even.coeff(2), rho3_trace_zero(nf)));
        c.data["records"].push_back({{"rho1_fit", even.coeff(0)}, {"rho1", rho.rho1}, {"rho3_fit", even.coeff(2)},
                                     {"rho3", rho.rho3}, {"rho2_fit", all.coeff(1)}});
    }
    c.pass = w1 < 1e-6 && w3 < 1e-3 && w2 < 1e-6;
    c.detail = fmt("10 records, rho1 rel %.2e (tol 1e-6), rho3 rel %.2e (tol 1e-3), |rho2| %.2e (tol 1e-6); "
                   "fit vs 4x closed-form rho3 rel %.2e",
                   w1, w3, w2, w3_true);
    c.data["rho3_vs_4x_closed_form"] = w3_true;
    return c;
}

inline CheckResult check_equilibrium_order(std::uint64_t seed) {
    std::mt19937_64 rng(seed + 3);
    CheckResult c{4, "equilibrium-series order"};
    double lo = 1e9, hi = -1e9;
    for (int k = 0; k < 5; ++k) {
        auto nf = random_record(rng);
        std::vector<double> lx, ly;
        for (double r : {0.1, 0.05, 0.025}) {
            auto s = blow_up(nf, r, 0.2);
            auto e = equilibrium_series(s);
            auto q = newton_equilibrium(s, {e.x(), e.y()});
            lx.push_back(std::log(r));
            ly.push_back(std::log(std::hypot(q.x - e.x(), q.y - e.y())));
        }
        const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
        double sxy = 0, sxx = 0;
        for (int i = 0; i < 3; ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        const double slope = sxy / sxx;
        lo = std::min(lo, slope);
        hi = std::max(hi, slope);
        c.data["slopes"].push_back(slope);
    }
    c.pass = lo > 3.7 && hi < 4.3;
    c.detail = fmt("5 records, lambda1 = 0.2, log-log slopes in [%.3f, %.3f] (want 4 +- 0.3)", lo, hi);
    return c;
}

inline CheckResult check_degeneracy() {
    CheckResult c{5, "Allee degeneracy"};
    const double alpha = 0.8, gamma = 0.4424, n = 0.1;
    const double ms = m_star(alpha, gamma);
    AlleeParams p{ms, n, alpha, 0.138485, gamma, 0.01};
    auto nf = normal_form_coeffs(p).nf;
    const double A = compute_A(nf);
    const double w2 = omega2_at_degeneracy(alpha, gamma, fold_point(ms, n).y);
    auto cls = classify_hopf(A, w2);
    c.pass = std::abs(ms - 0.263075) < 1e-6 && std::abs(A) < 1e-6 && w2 > 0 && cls == HopfClass::DegenerateSubcritical;
    c.detail = fmt("m* = %.10f (|m* - 0.263075| = %.1e, tol 1e-6), |A| = %.1e (tol 1e-6), omega2 = %.6f, %s", ms,
                   std::abs(ms - 0.263075), std::abs(A), w2, to_string(cls));
    c.data = {{"m_star", ms}, {"A", A}, {"omega2_at_degeneracy", w2}, {"classification", to_string(cls)},
              {"omega2_general", omega_coefficients(nf).omega2}};
    return c;
}

inline IntegratorOptions cycle_options(Direction d) {
    IntegratorOptions o;
    o.rel_tol = 1e-12;
    o.abs_tol = 1e-14;
    o.t_max = 5000;
    o.direction = d;
    return o;
}

inline AlleeParams example1() { return {0.3, 0.1, 0.849561, 0.2, 0.1, 0.0099}; }
inline AlleeParams example2() { return {0.263075, 0.1, 0.8, 0.138485, 0.4424, 0.01}; }

// Lower ray below E4, crossed in the rotation direction of the chosen time.
inline Section e4_section(const AlleeParams& p, Direction d) {
    auto R = equilibria(p);
    if (!R.E4) throw std::domain_error("E4 does not exist");
    return {R.E4->x, R.E4->y, true, d == Direction::Reversed ? -1 : +1};
}

inline nlohmann::json to_json_value(const CycleResult& r) {
    return {{"section_point", {r.section_point[0], r.section_point[1]}},
            {"period", r.period},
            {"multiplier", r.multiplier},
            {"multiplier_integrated", r.multiplier_integrated},
            {"residual", r.residual},
            {"stability", to_string(r.stability)},
            {"converged", r.converged},
            {"iterations", r.iterations}};
}

inline CheckResult cycle_check(int id, const std::string& name, const AlleeParams& p, Direction dir,
                               const std::vector<Vec2>& seeds, double inner_offset, Stability want) {
    CheckResult c{id, name};
    try {
        auto sec = e4_section(p, dir);
        auto opts = cycle_options(dir);
        auto f = allee_field(p);
        std::vector<double> ys;
        for (auto& s : seeds)
            ys.push_back(s[0] == sec.x0 && sec.on_ray(s[1]) ? s[1] : first_hit(f, s, sec, opts).y);
        if (ys.size() == 1) ys.push_back(sec.base_y - inner_offset);
        auto R = find_cycle(f, sec, {ys[0], ys[1]}, opts);
        c.pass = R.converged && R.stability == want;
        c.detail = fmt("cycle at y = %.8f, period %.2f, forward multiplier %.6f, %s", R.section_point[1], R.period,
                       R.multiplier, to_string(R.stability));
        c.data = to_json_value(R);
    } catch (const std::exception& e) {
        c.pass = false;
        c.detail = std::string("no cycle: ") + e.what();
    }
    return c;
}

inline CheckResult trace_info(const AlleeParams& p, const std::string& name) {
    CheckResult c{0, name, true};
    auto R = equilibria(p);
    auto on = hopf_onset_scan(p, p.beta - 0.01, p.beta + 0.01, 40);
    c.detail = fmt("E4 = (%.6f, %.6f), trace %.3e (%s); trace-zero onset at beta = %.14f", R.E4->x, R.E4->y,
                   R.E4->trace, to_string(R.E4->type), on.beta);
    c.data = {{"E4", {R.E4->x, R.E4->y}}, {"trace", R.E4->trace}, {"onset_beta", on.beta}};
    return c;
}

inline CheckResult check_example1() {
    auto p = example1();
    return cycle_check(6, "Example 1 cycle", p, Direction::Forward, {{0.2644, 0.0961}}, 1e-5, Stability::Stable);
}

inline CheckResult check_example2() {
    auto p = example2();
    return cycle_check(7, "Example 2 cycle", p, Direction::Reversed, {{0.25, 0.1375}, {0.25, 0.13}}, 0,
                       Stability::Unstable);
}

// The same machinery just across the trace-zero onset, where the small Hopf
// cycles do exist.
inline std::vector<CheckResult> onset_cycle_info() {
    std::vector<CheckResult> out;
    auto p1 = example1();
    out.push_back(trace_info(p1, "Example 1 at the given beta"));
    p1.beta = hopf_onset_scan(p1, p1.beta - 0.01, p1.beta + 0.01, 40).beta - 4e-6;
    {
        auto E = *equilibria(p1).E4;
        auto c = cycle_check(0, "Example 1 at onset - 4e-6", p1, Direction::Forward,
                             {{E.x, E.y - 5e-4}, {E.x, E.y - 2.5e-4}}, 0, Stability::Stable);
        c.detail = fmt("beta = %.14f: ", p1.beta) + c.detail;
        out.push_back(c);
    }
    auto p2 = example2();
    out.push_back(trace_info(p2, "Example 2 at the given beta"));
    p2.beta = hopf_onset_scan(p2, p2.beta - 0.01, p2.beta + 0.01, 40).beta + 3e-7;
    {
        auto E = *equilibria(p2).E4;
        auto c = cycle_check(0, "Example 2 at onset + 3e-7 (reversed time)", p2, Direction::Reversed,
                             {{E.x, E.y - 4e-3}, {E.x, E.y - 2e-3}}, 0, Stability::Unstable);
        c.detail = fmt("beta = %.14f: ", p2.beta) + c.detail;
        out.push_back(c);
    }
    return out;
}

// Region D = [0, 1] x [0, inf); starts are drawn from [0, 1] x [0, 2].
inline CheckResult check_invariant_region(std::uint64_t seed) {
    CheckResult c{8, "invariant region"};
    std::mt19937_64 rng(seed + 8);
    std::uniform_real_distribution<double> ux(0, 1), uy(0, 2);
    double excursion = 0, ymax = 0;
    IntegratorOptions o;
    o.rel_tol = 1e-9;
    o.abs_tol = 1e-12;
    o.t_max = 1e4;
    int failures = 0;
    std::string first_error;
    for (int k = 0; k < 100; ++k) {
        auto p = k % 2 ? example2() : example1();
        Vec2 x0{ux(rng), uy(rng)};
        try {
            DormandPrince dp(allee_field(p), x0, o);
            while (dp.step()) {
                const auto& y = dp.y();
                excursion = std::max({excursion, -y[0], y[0] - 1, -y[1]});
                ymax = std::max(ymax, y[1]);
            }
        } catch (const std::exception& e) {
            if (!failures++) first_error = e.what();
        }
    }
    c.pass = failures == 0 && excursion < 1e-9;
    c.detail = fmt("100 starts, t <= 1e4, max excursion %.2e (tol 1e-9), max y %.3f, %d integration failures",
                   std::max(excursion, 0.0), ymax, failures);
    if (failures) c.detail += " (" + first_error + ")";
    c.data = {{"excursion", excursion}, {"max_y", ymax}, {"failures", failures}};
    return c;
}

inline CheckResult check_sdi(std::uint64_t seed) {
    CheckResult c{9, "SDI cyclicity"};
    std::mt19937_64 rng(seed + 9);
    int worst_zeros = 0;
    double worst_xy = 0;
    for (int k = 0; k < 10; ++k) {
        auto p = random_cyclicity_params(rng);
        auto R = cyclicity_report(p, 40);
        worst_zeros = std::max(worst_zeros, R.zero_count);
        for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const double s = f * R.s_max;
            worst_xy = std::max(worst_xy, rel_err(sdi_x_form(p, 0, s), slow_divergence_integral(p, 0, s)));
        }
        c.data["sets"].push_back(
            {{"params", to_json_value(p)}, {"zero_count", R.zero_count}, {"case", to_string(R.phi_case)}});
    }
    c.pass = worst_zeros <= 1 && worst_xy < 1e-6;
    c.detail = fmt("10 sets, max zero_count %d (want <= 1), x/y-form max rel diff %.2e (tol 1e-6)", worst_zeros,
                   worst_xy);
    return c;
}

inline CheckResult check_lyapunov_units() {
    CheckResult c{10, "Lyapunov unit checks"};
    double worst = 0;
    for (double sigma : {1.0, -0.7, 2.5}) {
        PlanarPolySystem s;
        s.fx.set(0, 1, -1);
        s.fx.set(3, 0, sigma);
        s.fy.set(1, 0, 1);
        worst = std::max(worst, std::abs(lyapunov_DF(s) - 3 * sigma / 8));
    }
    PlanarPolySystem lin;
    lin.fx.set(0, 1, -1);
    lin.fy.set(1, 0, 1);
    const double l0 = lyapunov_DF(lin);
    c.pass = worst <= 1e-14 && std::abs(l0) <= 1e-14;
    c.detail = fmt("max |L1 - 3 sigma/8| = %.1e, linear center L1 = %.1e (tol 1e-14)", worst, std::abs(l0));
    return c;
}

inline std::vector<CheckResult> run_acceptance(const VerifyOptions& o,
                                               const std::function<void(const CheckResult&)>& report = {}) {
    std::vector<CheckResult> out;
    auto add = [&](CheckResult c) {
        if (report) report(c);
        out.push_back(std::move(c));
    };
    auto guarded = [&](int id, const std::string& name, auto&& fn) {
        try {
            add(fn());
        } catch (const std::exception& e) {
            add({id, name, false, std::string("stage failure: ") + e.what()});
        }
    };
    guarded(1, "omega1 oracle", [&] { return check_omega1(o.seed); });
    guarded(2, "omega2 oracle", [&] { return check_omega2(o.seed, o.omega2_perturbation); });
    guarded(3, "rho oracle", [&] { return check_rho(o.seed); });
    guarded(4, "equilibrium-series order", [&] { return check_equilibrium_order(o.seed); });
    guarded(5, "Allee degeneracy", [&] { return check_degeneracy(); });
    if (o.dynamics) {
        guarded(6, "Example 1 cycle", [&] { return check_example1(); });
        guarded(7, "Example 2 cycle", [&] { return check_example2(); });
        try {
            for (auto& c : onset_cycle_info()) add(c);
        } catch (const std::exception& e) {
            add({0, "onset diagnostics", false, e.what()});
        }
        guarded(8, "invariant region", [&] { return check_invariant_region(o.seed); });
    }
    if (o.sdi) guarded(9, "SDI cyclicity", [&] { return check_sdi(o.seed); });
    guarded(10, "Lyapunov unit checks", [&] { return check_lyapunov_units(); });
    return out;
}

inline std::string format_line(const CheckResult& c) {
    if (c.id == 0) return "INFO        " + c.name + ": " + c.detail;
    return fmt("%s  [%2d] ", c.pass ? "PASS" : "FAIL", c.id) + c.name + ": " + c.detail;
}

inline nlohmann::json to_json_value(const CheckResult& c) {
    return {{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}, {"data", c.data}};
}

}  // namespace canard
