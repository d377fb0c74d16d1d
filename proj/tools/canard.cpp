#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "canard/cli.hpp"

using namespace canard;

namespace {

struct Flags {
    std::string config, out = "out", grid;
    std::uint64_t seed = 20240601;
    double eps = 0;
    bool reversed = false, skip_dynamics = false, skip_sdi = false;
    double perturb = 0;
};

void common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "config file (JSON object or key=value lines)");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--eps", f.eps, "override eps");
    sub->add_option("--grid", f.grid, "grid size N or NxM");
    sub->add_flag("--reversed", f.reversed, "integrate in reversed time");
}

RunConfig build(const std::string& command, const Flags& f, CLI::App* sub) {
    RunConfig c;
    c.command = command;
    if (!f.config.empty()) c.doc = load_config(f.config);
    c.output_dir = f.out;
    c.seed = f.seed;
    if (sub->count("--eps")) c.eps = f.eps;
    if (!f.grid.empty()) c.grid = parse_grid(f.grid);
    c.reversed = f.reversed;
    c.perturb_omega2 = f.perturb;
    c.skip_dynamics = f.skip_dynamics;
    c.skip_sdi = f.skip_sdi;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"singular Hopf and canard analysis of slow-fast systems"};
    app.require_subcommand(1);
    Flags f;
    auto* analyze = app.add_subcommand("analyze", "fold, equilibria, A, omega1, omega2, curves and classification");
    auto* sweep = app.add_subcommand("sweep", "grid of model quantities over two parameters");
    auto* simulate = app.add_subcommand("simulate", "integrate the model from an initial point");
    auto* sdi = app.add_subcommand("sdi", "slow divergence integral and zero count");
    auto* verify = app.add_subcommand("verify", "run the oracle and acceptance suite");
    for (auto* s : {analyze, sweep, simulate, sdi, verify}) common(s, f);
    verify->add_option("--perturb-omega2", f.perturb, "relative shift of the omega2 reference (negative control)");
    verify->add_flag("--skip-dynamics", f.skip_dynamics, "skip cycle and invariant-region checks");
    verify->add_flag("--skip-sdi", f.skip_sdi, "skip the slow divergence check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    auto* sub = app.get_subcommands().front();
    const std::string cmd = sub->get_name();
    try {
        RunConfig c = build(cmd, f, sub);
        CommandResult r;
        if (cmd == "analyze") r = cmd_analyze(c);
        else if (cmd == "sweep") r = cmd_sweep(c);
        else if (cmd == "simulate") r = cmd_simulate(c);
        else if (cmd == "sdi") r = cmd_sdi(c);
        else {
            r = cmd_verify(c, [](const std::string& l) { std::cout << l << std::endl; });
            return r.exit_code;
        }
        for (auto& l : r.lines) std::cout << l << '\n';
        return r.exit_code;
    } catch (const BracketInvalid& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const ConditionViolation& e) {
        std::cerr << "invalid parameters: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
}
