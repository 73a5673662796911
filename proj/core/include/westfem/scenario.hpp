#ifndef WESTFEM_SCENARIO_HPP
#define WESTFEM_SCENARIO_HPP

#include "westfem/energy.hpp"
#include "westfem/model.hpp"
#include "westfem/stepper.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace westfem {

enum class SolverMode { Monolithic, FixedPoint };
enum class StudyKind { None, SpatialRefinement, Decay };
enum class InitialProfile { None, Sine, SineSquared, Tent, Gaussian, GradientSineSquared, File };
enum class MmsKind { None, SineCos };

// Exit codes of the scenario runner (and the CLI).
enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitDegeneracy = 3,
    kExitSolverFailure = 4,
    kExitIoError = 5,
};

struct ScenarioConfig {
    ModelKind kind = ModelKind::PressureViscosity;

    int dim = 1;
    int nx = 16, ny = 1, nz = 1;
    double lx = 1, ly = 1, lz = 1;

    MaterialValues material;                      // global values
    std::map<Tag, MaterialValues> material_tags;  // per-tag overrides
    bool has_tag_split = false;
    int split_axis = 0;
    double split_at = 0.5;
    Tag tag_left = Tag::Default, tag_right = Tag::Default;

    InitialProfile u0_profile = InitialProfile::Sine;
    double u0_amplitude = 1e-2;
    InitialProfile u1_profile = InitialProfile::None;
    double u1_amplitude = 0;
    std::string initial_file;

    double T = 1, dt = 1.0 / 64;
    SolverMode mode = SolverMode::Monolithic;
    double newton_tol = 1e-10;
    int max_newton = 25;
    int max_outer = 25;
    double fp_tol = 1e-9;
    double degeneracy_floor = 0.05;
    bool project_initial_gradient = false;

    double m_bar = 1, M_bar = 1, kappa = 1;
    int admissibility_samples = 16;

    StudyKind study = StudyKind::None;
    int study_levels = 3;
    double fit_a = 0, fit_b = 0;
    MmsKind mms = MmsKind::None;

    std::string out_dir = "out";
    std::vector<double> snapshot_times;
    std::uint64_t seed = 1;
    int threads = 1;
};

ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario_file(const std::string& path);

struct ScenarioOverrides {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

struct RunOutcome {
    int exit_code = kExitOk;
    std::string message;
    std::map<std::string, double> metrics; // omega, r_squared, rates, jumps, ...
};

// Build mesh + material + model from the config, run the solver (or the
// configured study), and write the CSV/SVG artifacts into out_dir.
RunOutcome run_scenario(const ScenarioConfig& config, const ScenarioOverrides& overrides = {});

// Bundled scenarios (name, one-line description, config text).
struct BundledScenario {
    std::string name;
    std::string description;
    std::string text;
};
const std::vector<BundledScenario>& bundled_scenarios();
// Resolve a path or a bundled name.
ScenarioConfig resolve_scenario(const std::string& path_or_name);

// Helpers shared with tests: nodal interpolation of the initial profiles.
Vec initial_field(const Mesh& mesh, InitialProfile profile, double amplitude, int components);

// Manufactured solution u* = sin(pi x) cos(t) for the 1D pressure form with
// q-viscosity damping: exact interpolant and matching forcing.
double mms_exact(const Point& x, double t);
double mms_forcing(const MaterialValues& mv, const Point& x, double t);

} // namespace westfem

#endif
