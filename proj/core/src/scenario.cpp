// Config-driven scenario runner: flat key = value text with [section]
// headers, bundled scenarios for every model kind, CSV/SVG artifacts, and
// the refinement/decay studies.

#include "westfem/scenario.hpp"

#include "westfem/errors.hpp"
#include "westfem/svg.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

namespace westfem {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

SectionMap parse_ini(const std::string& text) {
    SectionMap out;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            out[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || section.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside a section");
        if (!out[section].insert({key, value}).second)
            throw ConfigError("config: duplicate key '" + key + "' in [" + section + "]");
    }
    return out;
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw ConfigError("config: [" + section + "] " + key + " = '" + v + "' is not a number");
    }
}

int to_int(const std::string& section, const std::string& key, const std::string& v) {
    double d = to_double(section, key, v);
    int i = static_cast<int>(std::llround(d));
    if (d != i) throw ConfigError("config: [" + section + "] " + key + " must be an integer");
    return i;
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: [" + section + "] " + key + " must be true or false");
}

std::vector<double> to_list(const std::string& section, const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::istringstream is(v);
    std::string tok;
    while (is >> tok) out.push_back(to_double(section, key, tok));
    return out;
}

InitialProfile profile_from(const std::string& s) {
    if (s == "NONE") return InitialProfile::None;
    if (s == "SINE") return InitialProfile::Sine;
    if (s == "SINE_SQUARED") return InitialProfile::SineSquared;
    if (s == "TENT") return InitialProfile::Tent;
    if (s == "GAUSSIAN_BUMP") return InitialProfile::Gaussian;
    if (s == "GRADIENT_SINE_SQUARED") return InitialProfile::GradientSineSquared;
    if (s == "FILE") return InitialProfile::File;
    throw ConfigError("config: unknown initial profile '" + s + "'");
}

void apply_material_key(MaterialValues& mv, const std::string& section, const std::string& key,
                        const std::string& value) {
    double d = to_double(section, key, value);
    if (key == "c2") mv.c2 = d;
    else if (key == "b") mv.b = d;
    else if (key == "delta") mv.delta = d;
    else if (key == "k") mv.k = d;
    else if (key == "eps") mv.eps = d;
    else if (key == "p") mv.p = d;
    else if (key == "q") mv.q = d;
    else if (key == "rho") mv.rho = d;
    else if (key == "lambda") mv.lambda = d;
    else if (key == "mu") mv.mu = d;
    else if (key == "b_hat") mv.b_hat = d;
    else throw ConfigError("config: unknown material key '" + key + "'");
}

} // namespace

ScenarioConfig parse_scenario(const std::string& text) {
    SectionMap ini = parse_ini(text);
    ScenarioConfig cfg;

    static const std::set<std::string> known_sections = {
        "model", "mesh", "material", "tags", "initial", "time", "solver", "admissibility",
        "study", "output"};
    for (const auto& [section, kv] : ini) {
        if (known_sections.count(section) || section.rfind("material.", 0) == 0) continue;
        throw ConfigError("config: unknown section [" + section + "]");
    }

    for (const auto& [key, value] : ini["model"]) {
        if (key == "kind") cfg.kind = model_kind_from_name(value);
        else throw ConfigError("config: unknown key '" + key + "' in [model]");
    }
    for (const auto& [key, value] : ini["mesh"]) {
        if (key == "dim") cfg.dim = to_int("mesh", key, value);
        else if (key == "n") cfg.nx = cfg.ny = cfg.nz = to_int("mesh", key, value);
        else if (key == "nx") cfg.nx = to_int("mesh", key, value);
        else if (key == "ny") cfg.ny = to_int("mesh", key, value);
        else if (key == "nz") cfg.nz = to_int("mesh", key, value);
        else if (key == "length") cfg.lx = cfg.ly = cfg.lz = to_double("mesh", key, value);
        else if (key == "lx") cfg.lx = to_double("mesh", key, value);
        else if (key == "ly") cfg.ly = to_double("mesh", key, value);
        else if (key == "lz") cfg.lz = to_double("mesh", key, value);
        else throw ConfigError("config: unknown key '" + key + "' in [mesh]");
    }
    for (const auto& [key, value] : ini["material"]) apply_material_key(cfg.material, "material", key, value);
    for (const auto& [section, kv] : ini) {
        if (section.rfind("material.", 0) != 0) continue;
        Tag tag = tag_from_name(section.substr(9));
        MaterialValues mv = cfg.material;
        for (const auto& [key, value] : kv) apply_material_key(mv, section, key, value);
        cfg.material_tags[tag] = mv;
    }
    if (ini.count("tags")) {
        cfg.has_tag_split = true;
        for (const auto& [key, value] : ini["tags"]) {
            if (key == "split_axis") cfg.split_axis = to_int("tags", key, value);
            else if (key == "split_at") cfg.split_at = to_double("tags", key, value);
            else if (key == "left") cfg.tag_left = tag_from_name(value);
            else if (key == "right") cfg.tag_right = tag_from_name(value);
            else throw ConfigError("config: unknown key '" + key + "' in [tags]");
        }
    }
    for (const auto& [key, value] : ini["initial"]) {
        if (key == "profile") cfg.u0_profile = profile_from(value);
        else if (key == "amplitude") cfg.u0_amplitude = to_double("initial", key, value);
        else if (key == "ut_profile") cfg.u1_profile = profile_from(value);
        else if (key == "ut_amplitude") cfg.u1_amplitude = to_double("initial", key, value);
        else if (key == "file") cfg.initial_file = value;
        else throw ConfigError("config: unknown key '" + key + "' in [initial]");
    }
    for (const auto& [key, value] : ini["time"]) {
        if (key == "T") cfg.T = to_double("time", key, value);
        else if (key == "dt") cfg.dt = to_double("time", key, value);
        else throw ConfigError("config: unknown key '" + key + "' in [time]");
    }
    for (const auto& [key, value] : ini["solver"]) {
        if (key == "mode") {
            if (value == "MONOLITHIC") cfg.mode = SolverMode::Monolithic;
            else if (value == "FIXED_POINT") cfg.mode = SolverMode::FixedPoint;
            else throw ConfigError("config: solver mode must be MONOLITHIC or FIXED_POINT");
        } else if (key == "newton_tol") cfg.newton_tol = to_double("solver", key, value);
        else if (key == "max_newton") cfg.max_newton = to_int("solver", key, value);
        else if (key == "max_outer") cfg.max_outer = to_int("solver", key, value);
        else if (key == "fp_tol") cfg.fp_tol = to_double("solver", key, value);
        else if (key == "degeneracy_floor") cfg.degeneracy_floor = to_double("solver", key, value);
        else if (key == "project_initial_gradient") cfg.project_initial_gradient = to_bool("solver", key, value);
        else throw ConfigError("config: unknown key '" + key + "' in [solver]");
    }
    for (const auto& [key, value] : ini["admissibility"]) {
        if (key == "m_bar") cfg.m_bar = to_double("admissibility", key, value);
        else if (key == "M_bar") cfg.M_bar = to_double("admissibility", key, value);
        else if (key == "kappa") cfg.kappa = to_double("admissibility", key, value);
        else if (key == "samples") cfg.admissibility_samples = to_int("admissibility", key, value);
        else throw ConfigError("config: unknown key '" + key + "' in [admissibility]");
    }
    for (const auto& [key, value] : ini["study"]) {
        if (key == "kind") {
            if (value == "NONE") cfg.study = StudyKind::None;
            else if (value == "SPATIAL_REFINEMENT") cfg.study = StudyKind::SpatialRefinement;
            else if (value == "DECAY") cfg.study = StudyKind::Decay;
            else throw ConfigError("config: unknown study kind '" + value + "'");
        } else if (key == "levels") cfg.study_levels = to_int("study", key, value);
        else if (key == "fit_window") {
            auto w = to_list("study", key, value);
            if (w.size() != 2) throw ConfigError("config: fit_window needs two numbers");
            cfg.fit_a = w[0];
            cfg.fit_b = w[1];
        } else if (key == "mms") {
            if (value == "NONE") cfg.mms = MmsKind::None;
            else if (value == "SINE_COS") cfg.mms = MmsKind::SineCos;
            else throw ConfigError("config: unknown mms kind '" + value + "'");
        } else throw ConfigError("config: unknown key '" + key + "' in [study]");
    }
    for (const auto& [key, value] : ini["output"]) {
        if (key == "dir") cfg.out_dir = value;
        else if (key == "snapshots") cfg.snapshot_times = to_list("output", key, value);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_double("output", key, value));
        else if (key == "threads") cfg.threads = to_int("output", key, value);
        else throw ConfigError("config: unknown key '" + key + "' in [output]");
    }

    if (cfg.dim < 1 || cfg.dim > 3) throw ConfigError("config: dim must be 1, 2 or 3");
    if (cfg.kind == ModelKind::ElasticCoupled && cfg.dim < 2)
        throw ConfigError("config: the elastic model needs dim >= 2");
    if (cfg.mms != MmsKind::None &&
        (cfg.kind != ModelKind::PressureViscosity || cfg.dim != 1))
        throw ConfigError("config: the manufactured solution is defined for the 1D pressure form");
    if (!(cfg.T > 0) || !(cfg.dt > 0)) throw ConfigError("config: T and dt must be positive");
    if (cfg.fit_b <= cfg.fit_a) {
        cfg.fit_a = 0.25 * cfg.T;
        cfg.fit_b = cfg.T;
    }
    return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_scenario(ss.str());
}

double mms_exact(const Point& x, double t) { return std::sin(M_PI * x[0]) * std::cos(t); }

double mms_forcing(const MaterialValues& mv, const Point& x, double t) {
    double s = std::sin(M_PI * x[0]), c = std::cos(M_PI * x[0]);
    double u = s * std::cos(t);
    double ut = -s * std::sin(t);
    double utt = -s * std::cos(t);
    double lap_u = -M_PI * M_PI * u;
    double gut = -M_PI * c * std::sin(t);             // d/dx u_t
    double gut_x = M_PI * M_PI * s * std::sin(t);     // d2/dx2 u_t
    double w_prime = (1 - mv.delta) + mv.delta * mv.q * std::pow(std::abs(gut), mv.q - 1);
    double div_damp = w_prime * gut_x;
    return (1 - 2 * mv.k * u) * utt - mv.c2 * lap_u - mv.b * div_damp - 2 * mv.k * ut * ut;
}

Vec initial_field(const Mesh& mesh, InitialProfile profile, double amplitude, int components) {
    const int n = mesh.node_count();
    Vec f = Vec::Zero(components * n);
    if (profile == InitialProfile::None) return f;

    Point lo{0, 0, 0}, hi{1, 1, 1};
    for (int k = 0; k < mesh.dim; ++k) {
        lo[k] = hi[k] = mesh.nodes[0][k];
        for (const auto& p : mesh.nodes) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    }
    auto rel = [&](const Point& p, int k) { return (p[k] - lo[k]) / (hi[k] - lo[k]); };

    if (profile == InitialProfile::GradientSineSquared) {
        if (components != mesh.dim)
            throw ConfigError("initial: GRADIENT_SINE_SQUARED is for vector fields");
        for (int i = 0; i < n; ++i) {
            const auto& p = mesh.nodes[i];
            for (int c = 0; c < mesh.dim; ++c) {
                double g = amplitude;
                for (int k = 0; k < mesh.dim; ++k) {
                    double s = std::sin(M_PI * rel(p, k));
                    double co = std::cos(M_PI * rel(p, k));
                    double L = hi[k] - lo[k];
                    if (k == c) g *= 2 * M_PI / L * s * co;
                    else g *= s * s;
                }
                f[c * n + i] = g;
            }
        }
        zero_boundary(mesh, f, components);
        return f;
    }

    for (int i = 0; i < n; ++i) {
        const auto& p = mesh.nodes[i];
        double v = amplitude;
        switch (profile) {
            case InitialProfile::Sine:
                for (int k = 0; k < mesh.dim; ++k) v *= std::sin(M_PI * rel(p, k));
                break;
            case InitialProfile::SineSquared:
                for (int k = 0; k < mesh.dim; ++k) {
                    double s = std::sin(M_PI * rel(p, k));
                    v *= s * s;
                }
                break;
            case InitialProfile::Tent:
                for (int k = 0; k < mesh.dim; ++k) v *= 2 * std::min(rel(p, k), 1 - rel(p, k));
                break;
            case InitialProfile::Gaussian: {
                double r2 = 0;
                for (int k = 0; k < mesh.dim; ++k) {
                    double d = rel(p, k) - 0.5;
                    r2 += d * d;
                }
                v *= std::exp(-r2 / 0.02);
                break;
            }
            default: throw ConfigError("initial: unsupported profile here");
        }
        for (int c = 0; c < components; ++c) f[c * n + i] = v;
    }
    zero_boundary(mesh, f, components);
    return f;
}

namespace {

Mesh build_mesh(const ScenarioConfig& cfg, int refine) {
    int s = 1 << refine;
    Mesh m;
    if (cfg.dim == 1) m = interval_mesh(cfg.nx * s, cfg.lx);
    else if (cfg.dim == 2) m = rect_mesh(cfg.nx * s, cfg.ny * s, cfg.lx, cfg.ly);
    else m = box_mesh(cfg.nx * s, cfg.ny * s, cfg.nz * s, cfg.lx, cfg.ly, cfg.lz);
    if (cfg.has_tag_split) {
        m = tag_elements(std::move(m), [&](const Point& c) {
            return c[cfg.split_axis] < cfg.split_at ? cfg.tag_left : cfg.tag_right;
        });
    } else if (cfg.kind == ModelKind::ElasticCoupled) {
        m = tag_elements(std::move(m), [&](const Point&) { return Tag::Fluid; });
    }
    return m;
}

MaterialSpec build_material(const Mesh& mesh, const ScenarioConfig& cfg) {
    if (cfg.material_tags.empty()) return make_material(mesh, cfg.material);
    std::map<Tag, MaterialValues> per_tag;
    for (Tag t : {Tag::Default, Tag::Fluid, Tag::Solid, Tag::Nonlinear}) {
        auto it = cfg.material_tags.find(t);
        per_tag[t] = it != cfg.material_tags.end() ? it->second : cfg.material;
    }
    return make_material(mesh, per_tag);
}

Model build_model(const ScenarioConfig& cfg, int refine) {
    Mesh mesh = build_mesh(cfg, refine);
    MaterialSpec mat = build_material(mesh, cfg);
    ModelOptions opts;
    opts.degeneracy_floor = cfg.degeneracy_floor;
    opts.project_initial_gradient = cfg.project_initial_gradient;
    Model model(cfg.kind, std::move(mesh), std::move(mat), opts);
    if (cfg.mms == MmsKind::SineCos) {
        MaterialValues mv = cfg.material;
        model.forcing = [mv](const Point& x, double t) { return mms_forcing(mv, x, t); };
    }
    return model;
}

State build_initial(const Model& model, const ScenarioConfig& cfg) {
    const Mesh& mesh = model.mesh();
    State s;
    s.t = 0;
    const int comps = model.components();
    if (cfg.u0_profile == InitialProfile::File || cfg.u1_profile == InitialProfile::File) {
        std::ifstream is(cfg.initial_file);
        if (!is) throw ConfigError("initial: cannot read '" + cfg.initial_file + "'");
        s.u = Vec::Zero(model.dofs());
        s.ut = Vec::Zero(model.dofs());
        for (int i = 0; i < model.dofs(); ++i)
            if (!(is >> s.u[i] >> s.ut[i]))
                throw ConfigError("initial: file ended before " + std::to_string(model.dofs()) +
                                  " value pairs");
        zero_boundary(mesh, s.u, comps);
        zero_boundary(mesh, s.ut, comps);
        return s;
    }
    s.u = initial_field(mesh, cfg.u0_profile, cfg.u0_amplitude, comps);
    s.ut = initial_field(mesh, cfg.u1_profile, cfg.u1_amplitude, comps);
    if (model.kind() == ModelKind::ElasticCoupled && model.options().project_initial_gradient) {
        // Replace u by the L2 projection of grad psi, psi from the Poisson solve.
        auto project = [&](const Vec& U) {
            Vec psi = model.poisson().solve_divergence(U);
            const int n = mesh.node_count();
            Vec rhs = Vec::Zero(model.dofs());
            for (int e = 0; e < mesh.element_count(); ++e) {
                Eigen::Vector3d g = element_gradient(mesh, psi, e);
                double vol = mesh.geometry[e].measure;
                for (int v = 0; v <= mesh.dim; ++v)
                    for (int c = 0; c < mesh.dim; ++c)
                        rhs[c * n + mesh.elements[e][v]] += vol / (mesh.dim + 1) * g[c];
            }
            SpMat M = vector_mass_matrix(mesh, Vec(Vec::Ones(mesh.element_count())));
            eliminate_dirichlet(mesh, M, mesh.dim);
            zero_boundary(mesh, rhs, mesh.dim);
            Eigen::SimplicialLDLT<SpMat> ldlt(M);
            return Vec(ldlt.solve(rhs));
        };
        if (s.u.cwiseAbs().maxCoeff() > 0) s.u = project(s.u);
        if (s.ut.cwiseAbs().maxCoeff() > 0) s.ut = project(s.ut);
    }
    return s;
}

void write_solve_report_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os.precision(17);
    os << "step,t,newton_iterations,final_residual,degeneracy_margin\n";
    for (std::size_t i = 0; i < traj.report.steps.size(); ++i) {
        const auto& s = traj.report.steps[i];
        os << i + 1 << ',' << traj.times[i + 1] << ',' << s.newton_iterations << ','
           << s.final_residual << ',' << s.degeneracy_margin << '\n';
    }
}

void write_ratios_csv(const SolveReport& rep, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os.precision(17);
    os << "outer_iteration,update,ratio\n";
    for (std::size_t i = 0; i < rep.fixed_point_updates.size(); ++i) {
        os << i + 1 << ',' << rep.fixed_point_updates[i] << ',';
        if (i >= 1) os << rep.fixed_point_ratios[i - 1];
        os << '\n';
    }
}

void write_admissibility_csv(const AdmissibilityRecord& rec, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os.precision(17);
    os << "m_bar,M_bar,kappa,norm_utt,norm_mid,norm_high,member,embedding_constant,smallness_lhs\n";
    os << rec.m_bar << ',' << rec.M_bar << ',' << rec.kappa << ',' << rec.norm_utt << ','
       << rec.norm_mid << ',' << rec.norm_high << ',' << (rec.member ? 1 : 0) << ','
       << rec.embedding_constant << ',' << rec.smallness_lhs << '\n';
}

void write_snapshots_csv(const Trajectory& traj, const Model& model,
                         const std::vector<double>& wanted, const std::string& path) {
    const Mesh& mesh = model.mesh();
    const int comps = model.components();
    const int n = mesh.node_count();
    std::vector<double> times = wanted;
    if (times.empty()) times = {traj.times.front(), 0.5 * traj.times.back(), traj.times.back()};
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os.precision(17);
    os << "t,node,x,y,z";
    for (int c = 0; c < comps; ++c) os << ",u" << c;
    for (int c = 0; c < comps; ++c) os << ",ut" << c;
    os << '\n';
    for (double tw : times) {
        int best = 0;
        for (int i = 1; i < traj.size(); ++i)
            if (std::abs(traj.times[i] - tw) < std::abs(traj.times[best] - tw)) best = i;
        for (int i = 0; i < n; ++i) {
            os << traj.times[best] << ',' << i << ',' << mesh.nodes[i][0] << ',' << mesh.nodes[i][1]
               << ',' << mesh.nodes[i][2];
            for (int c = 0; c < comps; ++c) os << ',' << traj.u[best][c * n + i];
            for (int c = 0; c < comps; ++c) os << ',' << traj.ut[best][c * n + i];
            os << '\n';
        }
    }
}

double mms_error(const Trajectory& traj, const Model& model) {
    const Mesh& mesh = model.mesh();
    double worst = 0;
    for (int i = 0; i < traj.size(); ++i) {
        Vec exact(mesh.node_count());
        for (int j = 0; j < mesh.node_count(); ++j) exact[j] = mms_exact(mesh.nodes[j], traj.times[i]);
        zero_boundary(mesh, exact);
        worst = std::max(worst, lp_norm(mesh, Vec(traj.u[i] - exact), 2, false));
    }
    return worst;
}

} // namespace

RunOutcome run_scenario(const ScenarioConfig& config, const ScenarioOverrides& overrides) {
    ScenarioConfig cfg = config;
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.threads) cfg.threads = *overrides.threads;

    RunOutcome out;
    namespace fs = std::filesystem;

    StepperOptions sopts;
    sopts.newton_tol = cfg.newton_tol;
    sopts.max_newton_iterations = cfg.max_newton;

    try {
        if (cfg.study == StudyKind::SpatialRefinement && cfg.mms == MmsKind::None &&
            cfg.kind != ModelKind::AcousticCoupled && cfg.kind != ModelKind::ElasticCoupled)
            throw ConfigError("study: spatial refinement needs mms or a coupled model");
        Model model = build_model(cfg, 0);
        State initial = build_initial(model, cfg);

        Trajectory traj;
        if (cfg.mode == SolverMode::Monolithic)
            traj = integrate(model, initial, cfg.T, cfg.dt, sopts);
        else
            traj = fixed_point_outer(model, initial, cfg.T, cfg.dt, cfg.max_outer, cfg.fp_tol, sopts);

        traj.report.admissibility = check_admissibility(traj, model, cfg.m_bar, cfg.M_bar, cfg.kappa,
                                                        cfg.admissibility_samples, cfg.seed);

        std::error_code ec;
        fs::create_directories(cfg.out_dir, ec);
        if (ec) throw std::ios_base::failure("cannot create output directory " + cfg.out_dir);

        double tol_energy = 10 * cfg.newton_tol * model.mesh().node_count();
        EnergyReport erep = energy_report(traj, model, tol_energy);

        if (cfg.study == StudyKind::Decay) {
            auto [omega, r2] = decay_fit(erep.t, erep.EW1, cfg.fit_a, cfg.fit_b);
            erep.decay_omega = omega;
            erep.decay_r2 = r2;
            erep.window_a = cfg.fit_a;
            erep.window_b = cfg.fit_b;
            erep.has_decay_fit = true;
            out.metrics["omega"] = omega;
            out.metrics["r_squared"] = r2;
            std::ofstream os(fs::path(cfg.out_dir) / "study_summary.csv");
            os.precision(17);
            os << "omega,r_squared,window_a,window_b\n"
               << omega << ',' << r2 << ',' << cfg.fit_a << ',' << cfg.fit_b << '\n';
        }

        write_energy_csv(erep, (fs::path(cfg.out_dir) / "energy.csv").string());
        write_solve_report_csv(traj, (fs::path(cfg.out_dir) / "solve_report.csv").string());
        write_admissibility_csv(traj.report.admissibility,
                                (fs::path(cfg.out_dir) / "admissibility.csv").string());
        write_snapshots_csv(traj, model, cfg.snapshot_times,
                            (fs::path(cfg.out_dir) / "snapshots.csv").string());

        SvgSeries e0{"E0", "#1f6fb4", erep.t, erep.E0};
        SvgSeries ew{"EW1", "#b43f1f", erep.t, erep.EW1};
        write_svg_plot((fs::path(cfg.out_dir) / "energy.svg").string(), "energy decay", "t", "energy",
                       {e0, ew}, true);

        if (cfg.mode == SolverMode::FixedPoint) {
            write_ratios_csv(traj.report, (fs::path(cfg.out_dir) / "ratios.csv").string());
            SvgSeries rs{"contraction ratio", "#1f6fb4", {}, {}};
            for (std::size_t i = 0; i < traj.report.fixed_point_ratios.size(); ++i) {
                rs.x.push_back(static_cast<double>(i + 2));
                rs.y.push_back(traj.report.fixed_point_ratios[i]);
            }
            write_svg_plot((fs::path(cfg.out_dir) / "ratios.svg").string(), "fixed-point contraction",
                           "outer iteration", "ratio", {rs}, false);
            out.metrics["fp_converged"] = traj.report.fixed_point_converged ? 1 : 0;
            out.metrics["fp_outer_iterations"] = traj.report.outer_iterations;
            double worst = 0;
            for (double r : traj.report.fixed_point_ratios) worst = std::max(worst, r);
            out.metrics["fp_max_ratio"] = worst;
            out.metrics["fp_final_update"] = traj.report.fixed_point_updates.empty()
                                                 ? 0.0
                                                 : traj.report.fixed_point_updates.back();
        }

        double min_margin = 1;
        for (const auto& s : traj.report.steps) min_margin = std::min(min_margin, s.degeneracy_margin);
        out.metrics["min_degeneracy_margin"] = min_margin;
        out.metrics["member"] = traj.report.admissibility.member ? 1 : 0;
        out.metrics["smallness_lhs"] = traj.report.admissibility.smallness_lhs;

        if (cfg.study == StudyKind::SpatialRefinement) {
            auto run_level = [&](int level) {
                Model lm = build_model(cfg, level);
                State init = build_initial(lm, cfg);
                double ldt = cfg.dt / (1 << level);
                Trajectory lt = integrate(lm, init, cfg.T, ldt, sopts);
                return cfg.mms != MmsKind::None ? mms_error(lt, lm) : interface_jump(lt, lm);
            };
            std::vector<double> values(cfg.study_levels);
            if (cfg.threads > 1) {
                std::vector<std::future<double>> futs;
                for (int l = 0; l < cfg.study_levels; ++l)
                    futs.push_back(std::async(std::launch::async, run_level, l));
                for (int l = 0; l < cfg.study_levels; ++l) values[l] = futs[l].get();
            } else {
                for (int l = 0; l < cfg.study_levels; ++l) values[l] = run_level(l);
            }
            std::ofstream os(fs::path(cfg.out_dir) / "study_summary.csv");
            os.precision(17);
            os << "level,n,dt,value,rate\n";
            for (int l = 0; l < cfg.study_levels; ++l) {
                os << l << ',' << cfg.nx * (1 << l) << ',' << cfg.dt / (1 << l) << ',' << values[l] << ',';
                if (l > 0 && values[l] > 0) {
                    double rate = std::log2(values[l - 1] / values[l]);
                    os << rate;
                    out.metrics["rate_" + std::to_string(l)] = rate;
                }
                os << '\n';
                out.metrics["value_" + std::to_string(l)] = values[l];
            }
        }

        out.exit_code = kExitOk;
        out.message = "ok";
    } catch (const DegeneracyError& e) {
        out.exit_code = kExitDegeneracy;
        std::ostringstream msg;
        msg << "degeneracy abort at t = " << e.time() << ", margin = " << e.margin();
        out.message = msg.str();
        out.metrics["degeneracy_time"] = e.time();
        out.metrics["degeneracy_margin"] = e.margin();
    } catch (const ConfigError& e) {
        out.exit_code = kExitConfigError;
        out.message = e.what();
    } catch (const SolverError& e) {
        out.exit_code = kExitSolverFailure;
        out.message = e.what();
    } catch (const std::ios_base::failure& e) {
        out.exit_code = kExitIoError;
        out.message = e.what();
    }
    return out;
}

const std::vector<BundledScenario>& bundled_scenarios() {
    static const std::vector<BundledScenario> scenarios = {
        {"linear_wave_1d", "undamped linear wave, energy conservation check",
         "[model]\nkind = PRESSURE_VISCOSITY\n"
         "[mesh]\ndim = 1\nn = 64\nlength = 1\n"
         "[material]\nc2 = 1\nb = 0\ndelta = 0\nk = 0\nq = 1\n"
         "[initial]\nprofile = SINE\namplitude = 0.1\n"
         "[time]\nT = 2\ndt = 0.015625\n"
         "[output]\ndir = out_linear_wave_1d\n"},
        {"plaplace_decay_1d", "p-Laplace damping, global run with exponential decay fit",
         "[model]\nkind = PRESSURE_PLAPLACE\n"
         "[mesh]\ndim = 1\nn = 128\nlength = 1\n"
         "[material]\nc2 = 1\nb = 1\nk = 1\neps = 1\np = 3\n"
         "[initial]\nprofile = SINE\namplitude = 0.01\n"
         "[time]\nT = 10\ndt = 0.00390625\n"
         "[study]\nkind = DECAY\nfit_window = 2.5 10\n"
         "[output]\ndir = out_plaplace_decay_1d\n"},
        {"pressure_fixedpoint_1d", "q-viscosity damping solved by the outer fixed-point iteration",
         "[model]\nkind = PRESSURE_VISCOSITY\n"
         "[mesh]\ndim = 1\nn = 64\nlength = 1\n"
         "[material]\nc2 = 1\nb = 1\ndelta = 0.5\nk = 1\nq = 3\n"
         "[initial]\nprofile = SINE\namplitude = 0.001\n"
         "[time]\nT = 0.5\ndt = 0.0078125\n"
         "[solver]\nmode = FIXED_POINT\nmax_outer = 8\nfp_tol = 1e-9\n"
         "[admissibility]\nm_bar = 0.1\nM_bar = 0.1\nkappa = 0.01\n"
         "[output]\ndir = out_pressure_fixedpoint_1d\n"},
        {"potential_viscosity_1d", "velocity potential form with q-viscosity damping",
         "[model]\nkind = POTENTIAL_VISCOSITY\n"
         "[mesh]\ndim = 1\nn = 64\nlength = 1\n"
         "[material]\nc2 = 1\nb = 1\ndelta = 0.5\nk = 0.5\nq = 3\n"
         "[initial]\nprofile = SINE\namplitude = 0.01\n"
         "[time]\nT = 1\ndt = 0.0078125\n"
         "[output]\ndir = out_potential_viscosity_1d\n"},
        {"acoustic_lens_1d", "silicone lens: linear acoustic region inside a nonlinear fluid",
         "[model]\nkind = ACOUSTIC_COUPLED\n"
         "[mesh]\ndim = 1\nn = 64\nlength = 1\n"
         "[tags]\nsplit_axis = 0\nsplit_at = 0.5\nleft = NONLINEAR\nright = DEFAULT\n"
         "[material]\nlambda = 1\nrho = 1\nk = 1\nb = 1\ndelta = 0.5\nq = 3\n"
         "[material.DEFAULT]\nk = 0\nb = 0\ndelta = 0\nlambda = 2\nrho = 0.5\n"
         "[initial]\nprofile = SINE\namplitude = 0.001\n"
         "[time]\nT = 0.5\ndt = 0.0078125\n"
         "[study]\nkind = SPATIAL_REFINEMENT\nlevels = 3\n"
         "[output]\ndir = out_acoustic_lens_1d\n"},
        {"elastic_box_3d", "elastic-acoustic velocity form on a coarse box, fluid everywhere",
         "[model]\nkind = ELASTIC_COUPLED\n"
         "[mesh]\ndim = 3\nn = 4\nlength = 1\n"
         "[material]\nrho = 1\nlambda = 1\nmu = 0\nb_hat = 0.3\nb = 0.001\ndelta = 0.5\nk = 0.2\nq = 3\n"
         "[initial]\nprofile = GRADIENT_SINE_SQUARED\namplitude = 0.01\n"
         "[time]\nT = 0.25\ndt = 0.03125\n"
         "[output]\ndir = out_elastic_box_3d\n"},
        {"mms_convergence_1d", "manufactured-solution convergence study for the pressure form",
         "[model]\nkind = PRESSURE_VISCOSITY\n"
         "[mesh]\ndim = 1\nn = 16\nlength = 1\n"
         "[material]\nc2 = 1\nb = 1\ndelta = 0.5\nk = 0.2\nq = 3\n"
         "[initial]\nprofile = SINE\namplitude = 1\n"
         "[time]\nT = 1\ndt = 0.0625\n"
         "[study]\nkind = SPATIAL_REFINEMENT\nlevels = 3\nmms = SINE_COS\n"
         "[output]\ndir = out_mms_convergence_1d\n"},
        {"degeneracy_abort_1d", "large data driving 1-2ku to the floor; aborts with diagnostics",
         "[model]\nkind = PRESSURE_VISCOSITY\n"
         "[mesh]\ndim = 1\nn = 64\nlength = 1\n"
         "[material]\nc2 = 1\nb = 1\ndelta = 0.5\nk = 1\nq = 3\n"
         "[initial]\nprofile = SINE\namplitude = 0.6\n"
         "[time]\nT = 1\ndt = 0.0078125\n"
         "[output]\ndir = out_degeneracy_abort_1d\n"},
    };
    return scenarios;
}

ScenarioConfig resolve_scenario(const std::string& path_or_name) {
    if (std::filesystem::exists(path_or_name)) return load_scenario_file(path_or_name);
    for (const auto& s : bundled_scenarios())
        if (s.name == path_or_name) return parse_scenario(s.text);
    throw ConfigError("no such scenario file or bundled name: '" + path_or_name + "'");
}

} // namespace westfem
