#include <cmath>
#include <filesystem>
#include <fstream>

#include "catch_amalgamated.hpp"

#include <canard/cli.hpp>
#include <canard/io.hpp>

using namespace canard;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / "canard_io_tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("csv round trip keeps numbers exactly and strings verbatim") {
    auto d = scratch("csv");
    CsvTable t;
    t.header = {"x", "label", "v"};
    t.add_row({csv_num(0.1), "Supercritical", csv_num(-1.0 / 3)});
    t.add_row({csv_num(1e-300), "case 1a", csv_num(std::nan(""))});
    write_csv(d / "t.csv", t);
    auto back = read_csv(d / "t.csv");
    CHECK(back.header == t.header);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.number(0, "x") == 0.1);
    CHECK(back.number(0, "v") == -1.0 / 3);
    CHECK(back.number(1, "x") == 1e-300);
    CHECK(std::isnan(back.number(1, "v")));
    CHECK(back.rows[0][back.column("label")] == "Supercritical");
    CHECK_THROWS_AS(back.column("nope"), std::out_of_range);
    CHECK_THROWS_AS(back.number(0, "label"), std::runtime_error);
}

TEST_CASE("csv header is mandatory and rows must match it") {
    auto d = scratch("csv_bad");
    CsvTable t;
    CHECK_THROWS_AS(write_csv(d / "a.csv", t), std::invalid_argument);
    t.header = {"a", "b"};
    t.add_row({"1"});
    CHECK_THROWS_AS(write_csv(d / "b.csv", t), std::invalid_argument);
    std::ofstream(d / "c.csv") << "a,b\n1,2,3\n";
    CHECK_THROWS_AS(read_csv(d / "c.csv"), std::runtime_error);
    std::ofstream(d / "e.csv").close();
    CHECK_THROWS_AS(read_csv(d / "e.csv"), std::runtime_error);
}

TEST_CASE("json round trip") {
    auto d = scratch("json");
    nlohmann::json j = {{"A", -2.4e-6}, {"case", "1b"}, {"list", {1, 2, 3}}};
    write_json(d / "sub" / "j.json", j);
    CHECK(read_json(d / "sub" / "j.json") == j);
    CHECK_THROWS_AS(read_json(d / "missing.json"), std::runtime_error);
}

TEST_CASE("svg writers produce well-formed files") {
    auto d = scratch("svg");
    write_svg_polylines(d / "p.svg", {{"a", {0, 1, 2}, {0, 1, 4}}, {"b", {0, 2}, {1, NAN}}}, "t", "x", "y");
    auto s = slurp(d / "p.svg");
    CHECK(s.rfind("<svg", 0) == 0);
    CHECK(s.find("</svg>") != std::string::npos);
    CHECK(s.find("<polyline") != std::string::npos);
    write_svg_sign_heatmap(d / "h.svg", {0, 1}, {0, 1}, {{1, -1}, {0, NAN}}, "sign", "x", "y");
    auto h = slurp(d / "h.svg");
    CHECK(h.find("#d62728") != std::string::npos);
    CHECK(h.find("#1f77b4") != std::string::npos);
    CHECK_THROWS_AS(write_svg_polylines(d / "q.svg", {{"a", {NAN}, {NAN}}}, "t", "x", "y"), std::invalid_argument);
}

TEST_CASE("flat config parsing") {
    auto j = parse_flat_config(R"(# model
m = 0.3
n=0.1   # trailing comment
alpha = 0.849561
b10 = 1.5
gamma_from_beta = true
sweep.x = m
sweep.x_range = 0.05, 0.45
sweep.grid = 23, 20
)");
    CHECK(j["params"]["m"] == 0.3);
    CHECK(j["params"]["n"] == 0.1);
    CHECK(j["params"]["alpha"] == 0.849561);
    CHECK(j["coefficients"]["b10"] == 1.5);
    CHECK(j["gamma_from_beta"] == true);
    CHECK(j["sweep"]["x"] == "m");
    CHECK(j["sweep"]["x_range"] == nlohmann::json({0.05, 0.45}));
    CHECK(j["sweep"]["grid"] == nlohmann::json({23, 20}));
    CHECK_THROWS_AS(parse_flat_config("m 0.3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_flat_config(" = 2\n"), std::invalid_argument);
}

TEST_CASE("config files load as json or flat text") {
    auto d = scratch("cfg");
    std::ofstream(d / "a.json") << R"({"params": {"m": 0.2}})";
    std::ofstream(d / "b.cfg") << "m = 0.2\n";
    CHECK(load_config(d / "a.json") == load_config(d / "b.cfg"));
    CHECK_THROWS_AS(load_config(d / "none.cfg"), std::invalid_argument);
}

TEST_CASE("grid strings") {
    CHECK(parse_grid("40") == std::vector<int>{40});
    CHECK(parse_grid("23x20") == std::vector<int>{23, 20});
    CHECK_THROWS(parse_grid("0"));
    CHECK_THROWS(parse_grid("2.5"));
    CHECK_THROWS(parse_grid("1x2x3"));
    CHECK_THROWS(parse_grid("abc"));
}
