// Scenario CLI: run config-driven simulations, list or print the bundled
// scenarios. Exit codes: 0 ok, 2 config error, 3 degeneracy abort,
// 4 solver failure, 5 io error.

#include "westfem/scenario.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"westfem: finite element scenarios for nonlinearly damped Westervelt models"};
    app.require_subcommand(1);

    std::string target;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 0;

    auto* run = app.add_subcommand("run", "run a scenario config file or bundled scenario");
    run->add_option("config", target, "config file path or bundled scenario name")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_option("--seed", seed, "random seed for sampled estimates");
    run->add_option("--threads", threads, "worker threads for study levels");

    auto* list = app.add_subcommand("list", "list bundled scenarios");
    (void)list;

    std::string show_name;
    auto* show = app.add_subcommand("show", "print the config text of a bundled scenario");
    show->add_option("name", show_name, "bundled scenario name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? westfem::kExitConfigError : 0;
    }

    if (app.got_subcommand("list")) {
        for (const auto& s : westfem::bundled_scenarios())
            std::cout << s.name << "  -  " << s.description << "\n";
        return 0;
    }
    if (app.got_subcommand("show")) {
        for (const auto& s : westfem::bundled_scenarios()) {
            if (s.name == show_name) {
                std::cout << s.text;
                return 0;
            }
        }
        std::cerr << "no bundled scenario named '" << show_name << "'\n";
        return westfem::kExitConfigError;
    }

    Eigen::setNbThreads(1);
    westfem::ScenarioConfig cfg;
    try {
        cfg = westfem::resolve_scenario(target);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return westfem::kExitConfigError;
    }

    westfem::ScenarioOverrides ov;
    if (!out_dir.empty()) ov.out_dir = out_dir;
    if (run->count("--seed")) ov.seed = seed;
    if (run->count("--threads")) ov.threads = threads;

    westfem::RunOutcome outcome = westfem::run_scenario(cfg, ov);
    if (outcome.exit_code == westfem::kExitOk) {
        std::cout << "ok: artifacts written to " << (ov.out_dir ? *ov.out_dir : cfg.out_dir) << "\n";
        for (const auto& [key, value] : outcome.metrics) std::cout << "  " << key << " = " << value << "\n";
    } else {
        std::cerr << "error (" << outcome.exit_code << "): " << outcome.message << "\n";
    }
    return outcome.exit_code;
}
