#include "westfem/errors.hpp"
#include "westfem/scenario.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace westfem;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p);
    REQUIRE(is.good());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("bundled scenarios: count, kinds, parseability") {
    const auto& all = bundled_scenarios();
    CHECK(all.size() >= 6);
    std::set<std::string> kinds;
    for (const auto& s : all) {
        ScenarioConfig cfg = parse_scenario(s.text); // throws on malformed text
        kinds.insert(model_kind_name(cfg.kind));
    }
    CHECK(kinds.size() == 5);
}

TEST_CASE("config parsing: values, sections, and strict key validation") {
    ScenarioConfig cfg = parse_scenario(
        "[model]\nkind = PRESSURE_PLAPLACE\n"
        "[mesh]\ndim = 1\nn = 32\nlength = 2\n"
        "[material]\nc2 = 1.5\neps = 1\np = 3\nk = 0.25\nb = 0.5\n"
        "[initial]\nprofile = TENT\namplitude = 0.02\n"
        "[time]\nT = 4\ndt = 0.125\n"
        "[study]\nkind = DECAY\nfit_window = 1 4\n"
        "[output]\ndir = some_dir\nseed = 7\n");
    CHECK(cfg.kind == ModelKind::PressurePLaplace);
    CHECK(cfg.nx == 32);
    CHECK(cfg.lx == doctest::Approx(2.0));
    CHECK(cfg.material.c2 == doctest::Approx(1.5));
    CHECK(cfg.u0_profile == InitialProfile::Tent);
    CHECK(cfg.study == StudyKind::Decay);
    CHECK(cfg.fit_a == doctest::Approx(1.0));
    CHECK(cfg.seed == 7);

    CHECK_THROWS_AS(parse_scenario("[model]\nkind = NO_SUCH_KIND\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("[model]\nknid = PRESSURE_VISCOSITY\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("[nonsense]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("[mesh]\nn 32\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("[model]\nkind = ELASTIC_COUPLED\n[mesh]\ndim = 1\n"), ConfigError);
}

TEST_CASE("run_scenario: linear wave conserves E0 and writes the documented artifacts") {
    ScenarioConfig cfg = resolve_scenario("linear_wave_1d");
    ScenarioOverrides ov;
    ov.out_dir = "scenario_out_linear";
    RunOutcome out = run_scenario(cfg, ov);
    REQUIRE(out.exit_code == kExitOk);

    namespace fs = std::filesystem;
    for (const char* f :
         {"energy.csv", "solve_report.csv", "snapshots.csv", "admissibility.csv", "energy.svg"})
        CHECK(fs::exists(fs::path("scenario_out_linear") / f));

    // E0 drift below 1e-4 relative over the run.
    std::ifstream is("scenario_out_linear/energy.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header.rfind("t,E0,E1,EW1,D_grad,D_q", 0) == 0);
    double first = -1, worst = 0;
    std::string line;
    while (std::getline(is, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double t, e0;
        ls >> t >> e0;
        if (first < 0) first = e0;
        worst = std::max(worst, std::abs(e0 - first) / first);
    }
    CHECK(first > 0);
    CHECK(worst < 1e-4);

    // The SVG is standalone SVG 1.1.
    std::string svg = slurp("scenario_out_linear/energy.svg");
    CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\"") != std::string::npos);
}

TEST_CASE("run_scenario: reproducible CSVs for identical config and seed") {
    ScenarioConfig cfg = resolve_scenario("pressure_fixedpoint_1d");
    cfg.T = 0.125; // shortened copy of the bundled scenario
    ScenarioOverrides a, b;
    a.out_dir = "scenario_out_rep_a";
    a.seed = 42;
    b.out_dir = "scenario_out_rep_b";
    b.seed = 42;
    REQUIRE(run_scenario(cfg, a).exit_code == kExitOk);
    REQUIRE(run_scenario(cfg, b).exit_code == kExitOk);
    for (const char* f : {"energy.csv", "solve_report.csv", "admissibility.csv", "ratios.csv"}) {
        CHECK(slurp(std::filesystem::path("scenario_out_rep_a") / f) ==
              slurp(std::filesystem::path("scenario_out_rep_b") / f));
    }
}

TEST_CASE("run_scenario: elastic box with gradient projection of the initial data") {
    ScenarioConfig cfg = resolve_scenario("elastic_box_3d");
    cfg.T = 0.0625;
    cfg.nx = cfg.ny = cfg.nz = 3;
    cfg.project_initial_gradient = true;
    ScenarioOverrides ov;
    ov.out_dir = "scenario_out_elastic";
    RunOutcome out = run_scenario(cfg, ov);
    CHECK(out.exit_code == kExitOk);
    CHECK(std::filesystem::exists("scenario_out_elastic/energy.csv"));
}

TEST_CASE("run_scenario: degeneracy abort reports time and margin") {
    ScenarioConfig cfg = resolve_scenario("degeneracy_abort_1d");
    ScenarioOverrides ov;
    ov.out_dir = "scenario_out_degen";
    RunOutcome out = run_scenario(cfg, ov);
    CHECK(out.exit_code == kExitDegeneracy);
    CHECK(out.message.find("degeneracy abort at t =") != std::string::npos);
    CHECK(out.message.find("margin =") != std::string::npos);
    CHECK(out.metrics.count("degeneracy_margin") == 1);
}

TEST_CASE("run_scenario: newton failure maps to the solver exit code") {
    ScenarioConfig cfg = resolve_scenario("mms_convergence_1d");
    cfg.study = StudyKind::None;
    cfg.max_newton = 0;
    ScenarioOverrides ov;
    ov.out_dir = "scenario_out_solverfail";
    RunOutcome out = run_scenario(cfg, ov);
    CHECK(out.exit_code == kExitSolverFailure);
}

TEST_CASE("resolve_scenario rejects unknown names") {
    CHECK_THROWS_AS(resolve_scenario("definitely_not_a_scenario"), ConfigError);
}

#ifdef WESTFEM_CLI_PATH
namespace {

int run_cli(const std::string& args, const std::string& log) {
    std::string cmd = std::string(WESTFEM_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

} // namespace

TEST_CASE("cli: list names every bundled scenario and run succeeds end to end") {
    REQUIRE(run_cli("list", "cli_list.log") == 0);
    std::string listing = slurp("cli_list.log");
    int lines = 0;
    for (char c : listing)
        if (c == '\n') ++lines;
    CHECK(lines >= 6);
    for (const auto& s : bundled_scenarios()) CHECK(listing.find(s.name) != std::string::npos);

    CHECK(run_cli("run linear_wave_1d --out cli_run_out --seed 3", "cli_run.log") == 0);
    CHECK(std::filesystem::exists("cli_run_out/energy.csv"));

    CHECK(run_cli("show linear_wave_1d", "cli_show.log") == 0);
    CHECK(slurp("cli_show.log").find("[model]") != std::string::npos);
}

TEST_CASE("cli: malformed config exits with the config code and writes nothing") {
    {
        std::ofstream os("cli_bad_config.cfg");
        os << "[model]\nknid = PRESSURE_VISCOSITY\n";
    }
    std::filesystem::remove_all("cli_bad_out");
    CHECK(run_cli("run cli_bad_config.cfg --out cli_bad_out", "cli_bad.log") == kExitConfigError);
    CHECK(!std::filesystem::exists("cli_bad_out"));

    CHECK(run_cli("run degeneracy_abort_1d --out cli_degen_out", "cli_degen.log") == kExitDegeneracy);
}
#endif
