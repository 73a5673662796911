#include "westfem/energy.hpp"
#include "westfem/errors.hpp"
#include "westfem/scenario.hpp"
#include "westfem/stepper.hpp"

#include <doctest.h>

#include <cmath>

using namespace westfem;

namespace {

Model pressure_model(int n, double c2, double b, double delta, double k, double q) {
    Mesh mesh = interval_mesh(n, 1.0);
    MaterialValues mv;
    mv.c2 = c2;
    mv.b = b;
    mv.delta = delta;
    mv.k = k;
    mv.q = q;
    MaterialSpec mat = make_material(mesh, mv);
    return Model(ModelKind::PressureViscosity, std::move(mesh), std::move(mat));
}

State sine_initial(const Model& model, double amp) {
    State s;
    s.t = 0;
    s.u = initial_field(model.mesh(), InitialProfile::Sine, amp, model.components());
    s.ut = Vec::Zero(model.dofs());
    return s;
}

} // namespace

TEST_CASE("discrete fundamental theorem holds exactly on produced trajectories") {
    Model model = pressure_model(16, 1.0, 1.0, 0.5, 0.5, 3.0);
    Trajectory traj = integrate(model, sine_initial(model, 0.05), 0.25, 1.0 / 32);
    for (int n = 0; n + 1 < traj.size(); ++n) {
        double dt = traj.times[n + 1] - traj.times[n];
        Vec lhs = traj.u[n + 1] - traj.u[n];
        Vec rhs = 0.5 * dt * (traj.ut[n] + traj.ut[n + 1]);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
    }
    // No accepted step sits at or below the degeneracy floor.
    for (const auto& s : traj.report.steps) CHECK(s.degeneracy_margin > 0.05);
}

TEST_CASE("undamped linear wave: midpoint conserves the discrete energy") {
    Model model = pressure_model(32, 1.0, 0.0, 0.0, 0.0, 1.0);
    State init = sine_initial(model, 1.0);
    // One period of the continuous solution is 2/c = 2.
    Trajectory traj = integrate(model, init, 2.0, 1.0 / 64);
    const Mesh& mesh = model.mesh();
    SpMat M = mass_matrix(mesh);
    SpMat K = stiffness_matrix(mesh);
    auto discrete_energy = [&](int i) {
        return 0.5 * traj.ut[i].dot(M * traj.ut[i]) + 0.5 * traj.u[i].dot(K * traj.u[i]);
    };
    double e0 = discrete_energy(0);
    for (int i = 0; i < traj.size(); ++i)
        CHECK(std::abs(discrete_energy(i) - e0) <= 1e-9 * e0);
}

TEST_CASE("linear damping makes the discrete energy nonincreasing") {
    Model model = pressure_model(32, 1.0, 0.5, 0.0, 0.0, 1.0);
    Trajectory traj = integrate(model, sine_initial(model, 1.0), 1.0, 1.0 / 64);
    const Mesh& mesh = model.mesh();
    SpMat M = mass_matrix(mesh);
    SpMat K = stiffness_matrix(mesh);
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < traj.size(); ++i) {
        double e = 0.5 * traj.ut[i].dot(M * traj.ut[i]) + 0.5 * traj.u[i].dot(K * traj.u[i]);
        CHECK(e <= prev * (1 + 1e-12));
        prev = e;
    }
}

TEST_CASE("manufactured-solution convergence at second order in h = dt") {
    MaterialValues mv;
    mv.c2 = 1.0;
    mv.b = 1.0;
    mv.delta = 0.5;
    mv.q = 3.0;
    mv.k = 0.2;
    auto error_at = [&](int n) {
        Mesh mesh = interval_mesh(n, 1.0);
        MaterialSpec mat = make_material(mesh, mv);
        Model model(ModelKind::PressureViscosity, std::move(mesh), std::move(mat));
        model.forcing = [mv](const Point& x, double t) { return mms_forcing(mv, x, t); };
        const Mesh& mref = model.mesh();
        State init;
        init.t = 0;
        init.u = Vec(mref.node_count());
        for (int i = 0; i < mref.node_count(); ++i) init.u[i] = mms_exact(mref.nodes[i], 0.0);
        init.ut = Vec::Zero(mref.node_count());
        zero_boundary(mref, init.u);
        Trajectory traj = integrate(model, init, 1.0, 1.0 / n);
        double worst = 0;
        for (int i = 0; i < traj.size(); ++i) {
            Vec exact(mref.node_count());
            for (int j = 0; j < mref.node_count(); ++j)
                exact[j] = mms_exact(mref.nodes[j], traj.times[i]);
            zero_boundary(mref, exact);
            worst = std::max(worst, lp_norm(mref, Vec(traj.u[i] - exact), 2, false));
        }
        return worst;
    };
    double e16 = error_at(16), e32 = error_at(32), e64 = error_at(64);
    double r1 = std::log2(e16 / e32), r2 = std::log2(e32 / e64);
    CHECK(r1 >= 1.8);
    CHECK(r1 <= 2.2);
    CHECK(r2 >= 1.8);
    CHECK(r2 <= 2.2);
}

TEST_CASE("fixed point: k = 0 reaches the monolithic solution immediately") {
    Model model = pressure_model(16, 1.0, 1.0, 0.5, 0.0, 3.0);
    State init = sine_initial(model, 0.1);
    Trajectory mono = integrate(model, init, 0.25, 1.0 / 32);
    Trajectory fp = fixed_point_outer(model, init, 0.25, 1.0 / 32, 8, 1e-9);
    CHECK(fp.report.fixed_point_converged);
    // The operator is constant: the second sweep repeats the first.
    CHECK(fp.report.outer_iterations <= 2);
    CHECK(triple_norm_difference(model, fp, mono) <= 1e-9);
}

TEST_CASE("fixed point contracts on small data and matches the monolithic run") {
    Model model = pressure_model(32, 1.0, 1.0, 0.5, 1.0, 3.0);
    State init = sine_initial(model, 1e-3);
    Trajectory fp = fixed_point_outer(model, init, 0.25, 1.0 / 64, 8, 1e-10);
    CHECK(fp.report.fixed_point_converged);
    for (double r : fp.report.fixed_point_ratios) CHECK(r < 1.0);
    Trajectory mono = integrate(model, init, 0.25, 1.0 / 64);
    CHECK(triple_norm_difference(model, fp, mono) <= 1e-8);
}

TEST_CASE("newton shows a quadratic tail on strongly nonlinear steps") {
    Model model = pressure_model(24, 1.0, 1.0, 0.9, 1.0, 3.0);
    State init = sine_initial(model, 0.25);
    StepperOptions opts;
    opts.newton_tol = 1e-13;
    Trajectory traj = integrate(model, init, 0.1, 1.0 / 16, opts);
    int checked = 0;
    for (const auto& s : traj.report.steps) {
        const auto& hist = s.residual_history;
        for (std::size_t i = 0; i + 1 < hist.size(); ++i) {
            // Pairs in the asymptotic regime, above the roundoff floor.
            if (hist[i] < 1e-3 && hist[i] > 1e-6) {
                CHECK(hist[i + 1] <= 1e3 * hist[i] * hist[i]);
                ++checked;
            }
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("fixed point handles the potential and elastic frozen problems") {
    // Potential kind: alpha = c^2/(1 - 2k v_t) frozen along the iterate.
    Mesh pmesh = interval_mesh(24, 1.0);
    MaterialValues pv;
    pv.c2 = 1.0;
    pv.b = 1.0;
    pv.delta = 0.5;
    pv.q = 3.0;
    pv.k = 0.5;
    MaterialSpec pmat = make_material(pmesh, pv);
    Model pot(ModelKind::PotentialViscosity, std::move(pmesh), std::move(pmat));
    State pinit = sine_initial(pot, 1e-2);
    Trajectory pfp = fixed_point_outer(pot, pinit, 0.25, 1.0 / 32, 10, 1e-10);
    CHECK(pfp.report.fixed_point_converged);
    Trajectory pmono = integrate(pot, pinit, 0.25, 1.0 / 32);
    CHECK(triple_norm_difference(pot, pfp, pmono) <= 1e-8);

    // Elastic kind: element-wise alpha through the Poisson solve.
    Mesh emesh = tag_elements(rect_mesh(3, 3, 1.0, 1.0), [](const Point&) { return Tag::Fluid; });
    MaterialValues ev;
    ev.rho = 1.0;
    ev.lambda = 1.0;
    ev.mu = 0.0;
    ev.b_hat = 0.3;
    ev.b = 1e-3;
    ev.delta = 0.5;
    ev.q = 3.0;
    ev.k = 0.3;
    MaterialSpec emat = make_material(emesh, ev);
    Model elastic(ModelKind::ElasticCoupled, std::move(emesh), std::move(emat));
    State einit;
    einit.t = 0;
    einit.u = initial_field(elastic.mesh(), InitialProfile::GradientSineSquared, 1e-2, 2);
    einit.ut = Vec::Zero(elastic.dofs());
    Trajectory efp = fixed_point_outer(elastic, einit, 0.125, 1.0 / 32, 10, 1e-10);
    CHECK(efp.report.fixed_point_converged);
    Trajectory emono = integrate(elastic, einit, 0.125, 1.0 / 32);
    CHECK(triple_norm_difference(elastic, efp, emono) <= 1e-8);
}

TEST_CASE("newton non-convergence surfaces as a solver error with a time stamp") {
    Model model = pressure_model(16, 1.0, 1.0, 0.9, 1.0, 3.0);
    State init = sine_initial(model, 0.25);
    StepperOptions opts;
    opts.max_newton_iterations = 0;
    CHECK_THROWS_AS(integrate(model, init, 0.5, 1.0 / 16, opts), SolverError);
}

TEST_CASE("degeneracy abort carries time and margin") {
    Model model = pressure_model(16, 1.0, 1.0, 0.5, 1.0, 3.0);
    State init = sine_initial(model, 0.6); // margin 1 - 1.2 < floor at t = 0
    CHECK_THROWS_AS(integrate(model, init, 1.0, 1.0 / 32), DegeneracyError);
    try {
        integrate(model, init, 1.0, 1.0 / 32);
    } catch (const DegeneracyError& e) {
        CHECK(e.time() == doctest::Approx(0.0));
        CHECK(e.margin() < 0.05);
    }
}

TEST_CASE("admissibility record: zero and scaled trajectories") {
    Model model = pressure_model(16, 1.0, 1.0, 0.5, 1.0, 3.0);
    const int n = model.dofs();
    Trajectory zero;
    for (int i = 0; i <= 4; ++i) {
        zero.times.push_back(0.25 * i);
        zero.u.push_back(Vec::Zero(n));
        zero.ut.push_back(Vec::Zero(n));
    }
    AdmissibilityRecord rec = check_admissibility(zero, model, 1.0, 1.0, 0.5);
    CHECK(rec.member);
    CHECK(rec.norm_utt == 0.0);
    // smallness reduces to 2 k C kappa on the zero trajectory.
    CHECK(rec.smallness_lhs ==
          doctest::Approx(2 * 1.0 * rec.embedding_constant * (0.5 + std::pow(1.0, 3.0 / 4.0) * 1.0)));

    // Homogeneity: scaling the trajectory scales the observed norms.
    Trajectory traj = integrate(model, sine_initial(model, 1e-2), 0.25, 1.0 / 16);
    AdmissibilityRecord r1 = check_admissibility(traj, model, 1.0, 1.0, 0.5);
    Trajectory scaled = traj;
    for (auto& f : scaled.u) f *= 3.0;
    for (auto& f : scaled.ut) f *= 3.0;
    AdmissibilityRecord r3 = check_admissibility(scaled, model, 1.0, 1.0, 0.5);
    CHECK(r3.norm_utt == doctest::Approx(3.0 * r1.norm_utt).epsilon(1e-10));
    CHECK(r3.norm_mid == doctest::Approx(3.0 * r1.norm_mid).epsilon(1e-10));
    CHECK(r3.norm_high == doctest::Approx(3.0 * r1.norm_high).epsilon(1e-10));

    // Zero bounds with a nonzero trajectory: not a member.
    AdmissibilityRecord r0 = check_admissibility(traj, model, 0.0, 0.0, 0.5);
    CHECK(!r0.member);
}

TEST_CASE("degeneracy guard: margins and the a priori bound") {
    Model linear = pressure_model(16, 1.0, 1.0, 0.5, 0.0, 3.0);
    State z{0.0, Vec::Zero(linear.dofs()), Vec::Zero(linear.dofs())};
    GuardReport g = degeneracy_guard(linear, z);
    CHECK(g.margin == 1.0);
    CHECK(g.apriori == 1.0);

    Model model = pressure_model(16, 1.0, 1.0, 0.5, 1.0, 3.0);
    State s = sine_initial(model, 0.1);
    GuardReport g2 = degeneracy_guard(model, s);
    CHECK(g2.margin > 0.05);
    CHECK(g2.margin <= 1.0);
    CHECK(g2.apriori <= 1.0);
}
