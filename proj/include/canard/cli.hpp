#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "allee.hpp"
#include "blowup.hpp"
#include "dynamics.hpp"
#include "fit.hpp"
#include "io.hpp"
#include "normalform.hpp"
#include "sdi.hpp"
#include "verify.hpp"

namespace canard {

struct RunConfig {
    std::string command;
    nlohmann::json doc = nlohmann::json::object();
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 20240601;
    std::optional<double> eps;
    std::vector<int> grid;
    bool reversed = false;
    double perturb_omega2 = 0;
    bool skip_dynamics = false;
    bool skip_sdi = false;
};

struct CommandResult {
    int exit_code = 0;
    std::vector<std::string> lines;
    nlohmann::json report = nlohmann::json::object();
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

inline nlohmann::json scalar_value(const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    try {
        return parse_num(v);
    } catch (const std::exception&) {
        return v;
    }
}

inline bool is_model_key(const std::string& k) {
    return k == "m" || k == "n" || k == "alpha" || k == "beta" || k == "gamma" || k == "eps";
}

inline bool is_coefficient_key(const std::string& k) {
    for (auto& f : NormalFormCoefficients::fields())
        if (f.name == k) return true;
    return false;
}

}  // namespace detail

// key=value lines: dotted keys nest ("sweep.x = m"), comma lists become arrays,
// bare model parameter names go to "params" and coefficient names to "coefficients".
inline nlohmann::json parse_flat_config(const std::string& text) {
    nlohmann::json doc = nlohmann::json::object();
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        nlohmann::json v;
        if (value.find(',') != std::string::npos) {
            v = nlohmann::json::array();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) v.push_back(detail::scalar_value(detail::trim(item)));
        } else {
            v = detail::scalar_value(value);
        }
        if (detail::is_model_key(key)) key = "params." + key;
        else if (detail::is_coefficient_key(key)) key = "coefficients." + key;
        nlohmann::json* node = &doc;
        std::stringstream ks(key);
        std::string part;
        std::vector<std::string> parts;
        while (std::getline(ks, part, '.')) parts.push_back(part);
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
        (*node)[parts.back()] = v;
    }
    return doc;
}

inline nlohmann::json load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        auto j = nlohmann::json::parse(text);
        if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
        return j;
    }
    return parse_flat_config(text);
}

// "40" or "23x20"
inline std::vector<int> parse_grid(const std::string& s) {
    std::vector<int> g;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        const double v = parse_num(detail::trim(part));
        if (!(v >= 1) || v != std::floor(v) || v > 1e6) throw std::invalid_argument("grid sizes must be positive integers");
        g.push_back(static_cast<int>(v));
    }
    if (g.empty() || g.size() > 2) throw std::invalid_argument("grid must be N or NxM");
    return g;
}

inline AlleeParams model_params(const RunConfig& c) {
    if (!c.doc.contains("params")) throw std::invalid_argument("config has no 'params' object");
    AlleeParams p = allee_from_json(c.doc["params"]);
    if (c.eps) p.eps = *c.eps;
    if (c.doc.value("gamma_from_beta", false)) {
        require_condition5(p.m, p.n);
        p.gamma = gamma_star(p.m, p.n, p.alpha, p.beta);
    }
    validate(p);
    return p;
}

namespace detail {

inline double section_number(const nlohmann::json& sec, const char* key, double def) {
    if (!sec.contains(key)) return def;
    if (!sec[key].is_number()) throw std::invalid_argument(std::string("'") + key + "' must be a number");
    return sec[key].get<double>();
}

inline nlohmann::json section(const RunConfig& c, const char* name) {
    if (!c.doc.contains(name)) return nlohmann::json::object();
    if (!c.doc[name].is_object()) throw std::invalid_argument(std::string("'") + name + "' must be an object");
    return c.doc[name];
}

inline std::string str(const char* f, auto... a) { return fmt(f, a...); }

}  // namespace detail

// Model quantities shared by analyze and every sweep row. The omega1 tolerance
// covers the effect on A of an m given to within m_tol of m*.
inline nlohmann::json model_point(const AlleeParams& p, double m_tol = 1e-6) {
    auto mnf = normal_form_coeffs(p);
    auto om = omega_coefficients(mnf.nf);
    auto psi = psi_case_analysis(p.m, p.n, p.alpha, p.gamma);
    auto curves = model_bifurcation_curves(p, false);
    AlleeParams q = p;
    q.m = p.m * (1 + 1e-6);
    const double dAdm = (compute_A(normal_form_coeffs(q).nf) - om.omega1) / (q.m - p.m);
    const double tol = std::max(default_classify_tol(om.omega1, om.omega2), std::abs(dAdm) * m_tol);
    auto cls = classify_hopf(om.omega1, om.omega2, tol);
    return {{"A", om.omega1},
            {"omega1", om.omega1},
            {"omega2", om.omega2},
            {"lambda_h", curves.lambda_h},
            {"lambda_c", curves.lambda_c},
            {"beta_h", curves.beta_h},
            {"beta_c", curves.beta_c},
            {"case", to_string(psi.which)},
            {"psi", psi.psi},
            {"m_star", psi.m_star},
            {"sign_A_case", psi.sign_A},
            {"classification", to_string(cls)},
            {"omega1_tol", tol},
            {"l1_series", l1_series(om.omega1, om.omega2, p.eps)}};
}

inline nlohmann::json equilibrium_json(const Equilibrium& e) {
    return {{"x", e.x}, {"y", e.y}, {"type", to_string(e.type)}, {"trace", e.trace}, {"det", e.det}};
}

inline CommandResult cmd_analyze(const RunConfig& c) {
    CommandResult r;
    using detail::str;
    if (c.doc.contains("coefficients")) {
        auto nf = nf_from_json(c.doc["coefficients"]);
        auto h = analyze_normal_form(nf);
        r.report = {{"source", "coefficients"},
                    {"coefficients", to_json_value(nf)},
                    {"A", h.A},
                    {"omega1", h.omega1},
                    {"omega2", h.omega2},
                    {"rho1", h.rho1},
                    {"rho3", h.rho3},
                    {"classification", to_string(h.classification)}};
        r.lines.push_back(str("A = omega1 = %.10g, omega2 = %.10g", h.omega1, h.omega2));
        r.lines.push_back(str("rho1 = %.10g, rho3 = %.10g", h.rho1, h.rho3));
        std::optional<double> eps = c.eps;
        if (!eps && c.doc.contains("eps")) eps = c.doc["eps"].get<double>();
        if (eps) {
            const double lh = lambda_H(nf.a1(), nf.a5(), *eps), lc = lambda_c(nf.a1(), nf.a5(), h.A, *eps);
            r.report["eps"] = *eps;
            r.report["lambda_h"] = lh;
            r.report["lambda_c"] = lc;
            r.report["l1_series"] = l1_series(h.omega1, h.omega2, *eps);
            r.lines.push_back(str("eps = %g: lambda_h = %.10g, lambda_c = %.10g", *eps, lh, lc));
        }
        r.lines.push_back(std::string("classification: ") + to_string(h.classification));
    } else {
        auto p = model_params(c);
        const double m_tol = c.doc.value("degeneracy_m_tol", 1e-6);
        auto R = equilibria(p);
        r.report = model_point(p, m_tol);
        r.report["source"] = "model";
        r.report["params"] = to_json_value(p);
        r.report["fold"] = {{"x", R.fold.x}, {"y", R.fold.y}};
        nlohmann::json eq = {{"E0", equilibrium_json(R.E0)}};
        if (R.E1) eq["E1"] = equilibrium_json(*R.E1);
        if (R.E2) eq["E2"] = equilibrium_json(*R.E2);
        if (R.E3) eq["E3"] = equilibrium_json(*R.E3);
        if (R.E4) eq["E4"] = equilibrium_json(*R.E4);
        r.report["equilibria"] = eq;
        r.report["delta1"] = R.delta1;
        r.report["delta2"] = R.delta2;
        const double gs = gamma_star(p.m, p.n, p.alpha, p.beta);
        r.report["gamma_star"] = gs;
        r.report["fold_at_E4"] = std::abs(p.gamma - gs) <= 1e-6;
        r.report["beta_star"] = beta_star(p);
        r.report["lambda_of_beta"] = lambda_from_beta(p, p.beta);
        r.report["coefficients"] = to_json_value(normal_form_coeffs(p).nf);
        r.report["A_closed_form"] = model_closed_forms(p).A;
        r.report["degeneracy_m_tol"] = m_tol;
        const double ms = r.report["m_star"];
        r.report["omega2_at_m_star"] = omega2_at_degeneracy(p.alpha, p.gamma, fold_point(ms, p.n).y);

        auto& j = r.report;
        r.lines.push_back(str("fold M = (%.10g, %.10g)", R.fold.x, R.fold.y));
        for (auto& [name, e] : eq.items())
            r.lines.push_back(str("%s = (%.10g, %.10g) %s, trace %.4g", name.c_str(), e["x"].get<double>(),
                                  e["y"].get<double>(), e["type"].get<std::string>().c_str(),
                                  e["trace"].get<double>()));
        r.lines.push_back(str("gamma* = %.10g (fold at E4: %s), beta* = %.10g", gs,
                              j["fold_at_E4"].get<bool>() ? "yes" : "no", j["beta_star"].get<double>()));
        r.lines.push_back(str("A = omega1 = %.6e, omega2 = %.10g", j["omega1"].get<double>(),
                              j["omega2"].get<double>()));
        r.lines.push_back(str("Psi = %.6g, m* = %.10g, case %s", j["psi"].get<double>(), ms,
                              j["case"].get<std::string>().c_str()));
        r.lines.push_back(str("lambda_h = %.10g, lambda_c = %.10g (beta_h = %.10g, beta_c = %.10g)",
                              j["lambda_h"].get<double>(), j["lambda_c"].get<double>(), j["beta_h"].get<double>(),
                              j["beta_c"].get<double>()));
        r.lines.push_back(str("classification: %s (|omega1| tolerance %.2e from |m - m*| <= %g)",
                              j["classification"].get<std::string>().c_str(), j["omega1_tol"].get<double>(), m_tol));
    }
    write_json(c.output_dir / "analyze.json", r.report);
    {
        auto out = open_out(c.output_dir / "summary.txt");
        for (auto& l : r.lines) out << l << '\n';
    }
    return r;
}

namespace detail {

inline double& param_ref(AlleeParams& p, const std::string& name) {
    if (name == "m") return p.m;
    if (name == "n") return p.n;
    if (name == "alpha") return p.alpha;
    if (name == "beta") return p.beta;
    if (name == "gamma") return p.gamma;
    if (name == "eps") return p.eps;
    throw std::invalid_argument("unknown sweep parameter '" + name + "'");
}

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return v;
}

inline std::pair<double, double> range_of(const nlohmann::json& s, const char* key) {
    if (!s.contains(key) || !s[key].is_array() || s[key].size() != 2)
        throw std::invalid_argument(std::string("sweep needs '") + key + "' = [lo, hi]");
    const double a = s[key][0].get<double>(), b = s[key][1].get<double>();
    if (!std::isfinite(a) || !std::isfinite(b) || b < a) throw std::invalid_argument("sweep range must be finite, lo <= hi");
    return {a, b};
}

}  // namespace detail

inline const std::vector<std::string>& sweep_header() {
    static const std::vector<std::string> h{"x", "y", "A", "omega1", "omega2", "lambda_h", "lambda_c", "case",
                                            "classification"};
    return h;
}

inline CommandResult cmd_sweep(const RunConfig& c) {
    auto base = model_params(c);
    auto s = detail::section(c, "sweep");
    const std::string xn = s.value("x", "m"), yn = s.value("y", "gamma");
    if (xn == yn) throw std::invalid_argument("sweep axes must differ");
    auto [x0, x1] = detail::range_of(s, "x_range");
    auto [y0, y1] = detail::range_of(s, "y_range");
    std::vector<int> g = c.grid;
    if (g.empty() && s.contains("grid")) {
        if (s["grid"].is_number()) g = {s["grid"].get<int>()};
        else for (auto& v : s["grid"]) g.push_back(v.get<int>());
    }
    if (g.empty() || g.size() > 2) throw std::invalid_argument("sweep needs a grid N or [Nx, Ny]");
    if (g.size() == 1) g.push_back(g[0]);
    if (g[0] < 1 || g[1] < 1) throw std::invalid_argument("empty sweep grid");
    auto xs = detail::linspace(x0, x1, g[0]), ys = detail::linspace(y0, y1, g[1]);

    CsvTable t;
    t.header = sweep_header();
    std::vector<std::vector<double>> signA(ys.size(), std::vector<double>(xs.size(), std::nan("")));
    int valid = 0;
    for (std::size_t j = 0; j < ys.size(); ++j)
        for (std::size_t i = 0; i < xs.size(); ++i) {
            AlleeParams p = base;
            detail::param_ref(p, xn) = xs[i];
            detail::param_ref(p, yn) = ys[j];
            std::vector<std::string> row{csv_num(xs[i]), csv_num(ys[j])};
            try {
                validate(p);
                auto pt = model_point(p);
                for (const char* k : {"A", "omega1", "omega2", "lambda_h", "lambda_c"})
                    row.push_back(csv_num(pt[k].get<double>()));
                row.push_back(pt["case"].get<std::string>());
                row.push_back(pt["classification"].get<std::string>());
                signA[j][i] = sign_of(pt["A"].get<double>());
                ++valid;
            } catch (const std::invalid_argument&) {
                for (int k = 0; k < 5; ++k) row.push_back("nan");
                row.push_back("invalid");
                row.push_back("invalid");
            }
            t.add_row(std::move(row));
        }
    write_csv(c.output_dir / "sweep.csv", t);
    write_svg_sign_heatmap(c.output_dir / "sweep_signA.svg", xs, ys, signA, "sign(A)", xn, yn);
    CommandResult r;
    r.report = {{"x", xn},         {"y", yn},         {"x_range", {x0, x1}}, {"y_range", {y0, y1}},
                {"grid", {g[0], g[1]}}, {"rows", t.rows.size()}, {"valid_rows", valid},
                {"base_params", to_json_value(base)}};
    write_json(c.output_dir / "sweep.json", r.report);
    r.lines.push_back(detail::str("sweep %s x %s: %zu rows (%d valid) written to %s", xn.c_str(), yn.c_str(),
                                  t.rows.size(), valid, (c.output_dir / "sweep.csv").string().c_str()));
    return r;
}

inline CommandResult cmd_simulate(const RunConfig& c) {
    auto p = model_params(c);
    auto s = detail::section(c, "simulate");
    if (!s.contains("initial") || !s["initial"].is_array() || s["initial"].size() != 2)
        throw std::invalid_argument("simulate needs 'initial' = [x, y]");
    Vec2 x0{s["initial"][0].get<double>(), s["initial"][1].get<double>()};
    IntegratorOptions o;
    o.t_max = detail::section_number(s, "t_max", 1000);
    o.rel_tol = detail::section_number(s, "rel_tol", 1e-10);
    o.abs_tol = detail::section_number(s, "abs_tol", 1e-13);
    o.max_step = detail::section_number(s, "max_step", std::numeric_limits<double>::infinity());
    const bool reversed = c.reversed || s.value("reversed", false);
    o.direction = reversed ? Direction::Reversed : Direction::Forward;
    validate(o);
    auto tr = integrate(allee_field(p), x0, o);

    // reported time is the physical one: negative when integrated backwards
    const double sgn = reversed ? -1 : 1;
    CsvTable t;
    t.header = {"t", "x", "y"};
    PolylineSeries ps{"orbit", {}, {}};
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        t.add_row({csv_num(sgn * tr.t[i]), csv_num(tr.y[i][0]), csv_num(tr.y[i][1])});
        ps.x.push_back(tr.y[i][0]);
        ps.y.push_back(tr.y[i][1]);
    }
    write_csv(c.output_dir / "trajectory.csv", t);
    std::vector<PolylineSeries> series{ps};
    auto R = equilibria(p);
    if (R.E4) series.push_back({"E4", {R.E4->x}, {R.E4->y}});
    write_svg_polylines(c.output_dir / "trajectory.svg", series, reversed ? "orbit (reversed time)" : "orbit", "x", "y");

    CommandResult r;
    const auto& last = tr.y.back();
    r.report = {{"params", to_json_value(p)},
                {"initial", {x0[0], x0[1]}},
                {"t_end", sgn * tr.t.back()},
                {"final", {last[0], last[1]}},
                {"steps", tr.t.size() - 1},
                {"rejected", tr.rejected},
                {"stiffness_warning", tr.stiffness_warning},
                {"direction", reversed ? "reversed" : "forward"}};
    r.lines.push_back(detail::str("trajectory: %zu points to t = %g, final (%.10g, %.10g)%s", tr.t.size(),
                                  sgn * tr.t.back(), last[0], last[1],
                                  tr.stiffness_warning ? " [stiffness warning]" : ""));
    if (s.contains("cycle")) {
        auto cy = s["cycle"];
        if (!cy.contains("offsets") || cy["offsets"].size() != 2)
            throw std::invalid_argument("simulate.cycle needs 'offsets' = [d1, d2] below E4");
        auto sec = e4_section(p, o.direction);
        auto copt = cycle_options(o.direction);
        const double a = sec.base_y - cy["offsets"][0].get<double>(), b = sec.base_y - cy["offsets"][1].get<double>();
        auto cr = find_cycle(allee_field(p), sec, {std::min(a, b), std::max(a, b)}, copt);
        r.report["cycle"] = to_json_value(cr);
        write_json(c.output_dir / "cycle.json", r.report["cycle"]);
        r.lines.push_back(detail::str("cycle: y = %.10g, period %.4g, forward multiplier %.8f, %s",
                                      cr.section_point[1], cr.period, cr.multiplier, to_string(cr.stability)));
    }
    write_json(c.output_dir / "simulate.json", r.report);
    return r;
}

inline CommandResult cmd_sdi(const RunConfig& c) {
    auto p = model_params(c);
    auto s = detail::section(c, "sdi");
    int grid = static_cast<int>(detail::section_number(s, "grid", 40));
    if (!c.grid.empty()) grid = c.grid[0];
    auto R = cyclicity_report(p, grid);
    CsvTable t;
    t.header = {"s", "I"};
    PolylineSeries ps{"I(s)", R.s_grid, R.values};
    for (std::size_t k = 0; k < R.s_grid.size(); ++k) t.add_row({csv_num(R.s_grid[k]), csv_num(R.values[k])});
    write_csv(c.output_dir / "sdi.csv", t);
    write_svg_polylines(c.output_dir / "sdi.svg", {ps}, "slow divergence integral", "s", "I(s)");
    CommandResult r;
    r.report = {{"params", to_json_value(p)}, {"case", to_string(R.phi_case)}, {"zero_count", R.zero_count},
                {"s_max", R.s_max},           {"phi_root_y0", R.y0},         {"grid", grid}};
    write_json(c.output_dir / "sdi.json", r.report);
    r.lines.push_back(detail::str("sdi: gamma = %.10g, case %s, s_max = %.8g, zero_count = %d", p.gamma,
                                  to_string(R.phi_case), R.s_max, R.zero_count));
    return r;
}

// The canonical system (all coefficients zero): every omega and rho fit is ~0.
inline CheckResult canonical_smoke() {
    CheckResult c{0, "canonical-system smoke", true};
    NormalFormCoefficients nf;
    std::vector<std::pair<double, double>> l1s, lam;
    for (double r : oracle_r_grid()) {
        l1s.push_back({r, l1_blowup(nf, r)});
        lam.push_back({r, hopf_lambda1(nf, r) / r});
    }
    auto f = fit_odd_series(l1s, {1, 3, 5, 7});
    auto g = fit_odd_series(lam, {0, 2, 4, 6});
    const double worst = std::max({std::abs(f.coeff(1)), std::abs(f.coeff(3)), std::abs(g.coeff(0)),
                                   std::abs(g.coeff(2))});
    c.pass = worst < 1e-9;
    c.detail = fmt("max |omega1/16, omega2/32, rho1, rho3 fit| = %.1e", worst);
    c.data = {{"max_abs_fit", worst}};
    return c;
}

inline CommandResult cmd_verify(const RunConfig& c, const std::function<void(const std::string&)>& live = {}) {
    VerifyOptions o;
    o.seed = c.seed;
    o.omega2_perturbation = c.perturb_omega2;
    o.dynamics = !c.skip_dynamics;
    o.sdi = !c.skip_sdi;
    CommandResult r;
    auto emit = [&](const CheckResult& cr) {
        r.lines.push_back(format_line(cr));
        if (live) live(r.lines.back());
    };
    auto results = run_acceptance(o, emit);
    CheckResult smoke;
    try {
        smoke = canonical_smoke();
    } catch (const std::exception& e) {
        smoke = {0, "canonical-system smoke", false, e.what()};
    }
    emit(smoke);
    int failed = 0;
    nlohmann::json arr = nlohmann::json::array();
    for (auto& cr : results) {
        if (cr.id != 0 && !cr.pass) ++failed;
        arr.push_back(to_json_value(cr));
    }
    arr.push_back(to_json_value(smoke));
    r.report = {{"seed", c.seed},
                {"omega2_perturbation", c.perturb_omega2},
                {"dynamics", o.dynamics},
                {"sdi", o.sdi},
                {"failed", failed},
                {"checks", arr}};
    write_json(c.output_dir / "verify.json", r.report);
    std::string tail = std::to_string(failed) + " criteria failed";
    r.lines.push_back(tail);
    if (live) live(tail);
    r.exit_code = failed ? 2 : 0;
    return r;
}

}  // namespace canard
