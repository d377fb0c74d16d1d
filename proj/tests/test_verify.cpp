#include <cmath>
#include <filesystem>

#include "catch_amalgamated.hpp"

#include <canard/cli.hpp>

using namespace canard;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
namespace fs = std::filesystem;

namespace {

RunConfig model_config(const std::string& name, const AlleeParams& p) {
    RunConfig c;
    c.doc = {{"params", to_json_value(p)}};
    c.output_dir = fs::temp_directory_path() / "canard_verify_tests" / name;
    fs::remove_all(c.output_dir);
    return c;
}

}  // namespace

TEST_CASE("omega2 check catches a perturbed reference") {
    CHECK(check_omega2(20240601).pass);
    CHECK_FALSE(check_omega2(20240601, 0.5).pass);
    CHECK(check_omega1(20240601).pass);
}

TEST_CASE("unit-level acceptance checks") {
    CHECK(canonical_smoke().pass);
    CHECK(check_lyapunov_units().pass);
    CHECK(check_degeneracy().pass);
}

TEST_CASE("analyze on the two examples") {
    auto r1 = cmd_analyze(model_config("ex1", example1()));
    CHECK(r1.report["A"].get<double>() < 0);
    CHECK(r1.report["classification"] == "Supercritical");
    auto c2 = model_config("ex2", example2());
    auto r2 = cmd_analyze(c2);
    CHECK(std::abs(r2.report["A"].get<double>()) < 1e-5);
    CHECK(r2.report["classification"] == "DegenerateSubcritical");
    CHECK(read_json(c2.output_dir / "analyze.json") == r2.report);
    CHECK(fs::exists(c2.output_dir / "summary.txt"));
}

TEST_CASE("analyze on raw coefficients") {
    RunConfig c;
    c.output_dir = fs::temp_directory_path() / "canard_verify_tests" / "coeffs";
    c.doc = {{"coefficients", {{"b10", 1.0}, {"c10", 0.5}}}};
    c.eps = 0.01;
    auto r = cmd_analyze(c);
    CHECK(r.report["A"] == 3.0);
    CHECK(r.report["classification"] == "Subcritical");
    CHECK_THAT(r.report["lambda_c"].get<double>() - r.report["lambda_h"].get<double>(),
               WithinAbs(-3.0 * 0.01 / 8, 1e-15));
}

TEST_CASE("a one-point sweep reproduces analyze") {
    auto p = example1();
    auto c = model_config("sweep1", p);
    c.doc["sweep"] = {{"x", "m"}, {"y", "gamma"}, {"x_range", {p.m, p.m}}, {"y_range", {p.gamma, p.gamma}}};
    c.grid = {1};
    cmd_sweep(c);
    auto t = read_csv(c.output_dir / "sweep.csv");
    REQUIRE(t.rows.size() == 1);
    auto a = cmd_analyze(model_config("sweep1_analyze", p)).report;
    for (const char* k : {"A", "omega1", "omega2", "lambda_h", "lambda_c"})
        CHECK(t.number(0, k) == a[k].get<double>());
    CHECK(t.rows[0][t.column("classification")] == a["classification"]);
}

TEST_CASE("sweep rows satisfy the curve gap and bracket m*") {
    AlleeParams p{0.2, 0.1, 0.8, 0.1, 0.4, 0.01};
    auto c = model_config("sweep_grid", p);
    c.doc["sweep"] = {{"x", "m"}, {"y", "gamma"}, {"x_range", {0.05, 0.45}}, {"y_range", {0.1, 1.0}},
                      {"grid", {41, 7}}};
    auto r = cmd_sweep(c);
    CHECK(r.report["valid_rows"] == 41 * 7);
    auto t = read_csv(c.output_dir / "sweep.csv");
    CHECK(t.header == sweep_header());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double gap = t.number(i, "lambda_c") - t.number(i, "lambda_h");
        CHECK_THAT(gap, WithinAbs(-t.number(i, "A") * p.eps / 8, 1e-14));
    }
    int brackets = 0;
    for (std::size_t j = 0; j < 7; ++j)
        for (std::size_t i = 0; i + 1 < 41; ++i) {
            const auto a = j * 41 + i, b = a + 1;
            if (t.number(a, "A") * t.number(b, "A") >= 0) continue;
            ++brackets;
            const double ms = m_star(p.alpha, t.number(a, "y"));
            CHECK(t.number(a, "x") <= ms);
            CHECK(ms <= t.number(b, "x"));
        }
    CHECK(brackets > 0);
    CHECK(fs::exists(c.output_dir / "sweep_signA.svg"));
}

TEST_CASE("sweep marks points outside the model hypotheses") {
    AlleeParams p{0.2, 0.1, 0.8, 0.1, 0.4, 0.01};
    auto c = model_config("sweep_invalid", p);
    c.doc["sweep"] = {{"x", "n"}, {"y", "gamma"}, {"x_range", {0.1, 1.5}}, {"y_range", {0.4, 0.4}}, {"grid", {3, 1}}};
    auto r = cmd_sweep(c);
    CHECK(r.report["valid_rows"] < 3);
    auto t = read_csv(c.output_dir / "sweep.csv");
    CHECK(t.rows.back()[t.column("classification")] == "invalid");
    CHECK(std::isnan(t.number(2, "A")));
}

TEST_CASE("simulate writes a signed-time trajectory") {
    auto p = example1();
    auto c = model_config("sim", p);
    c.doc["simulate"] = {{"initial", {0.2644, 0.0961}}, {"t_max", 20}};
    c.reversed = true;
    auto r = cmd_simulate(c);
    auto t = read_csv(c.output_dir / "trajectory.csv");
    CHECK(t.number(t.rows.size() - 1, "t") == -20);
    CHECK(r.report["t_end"] == -20.0);
    CHECK(t.number(0, "x") == 0.2644);
    c.doc["simulate"].erase("initial");
    CHECK_THROWS_AS(cmd_simulate(c), std::invalid_argument);
}

TEST_CASE("sdi command matches the library report") {
    AlleeParams p{0.1, 0.2, 1.0, 0.1, 0, 0.01};
    auto c = model_config("sdi", p);
    c.doc["gamma_from_beta"] = true;
    c.grid = {12};
    auto r = cmd_sdi(c);
    p.gamma = gamma_star(p.m, p.n, p.alpha, p.beta);
    auto R = cyclicity_report(p, 12);
    auto t = read_csv(c.output_dir / "sdi.csv");
    REQUIRE(t.rows.size() == R.values.size());
    for (std::size_t k = 0; k < R.values.size(); ++k) CHECK(t.number(k, "I") == R.values[k]);
    CHECK(r.report["zero_count"] == R.zero_count);
}
