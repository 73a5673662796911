#include "westfem/energy.hpp"
#include "westfem/errors.hpp"
#include "westfem/scenario.hpp"

#include <doctest.h>

#include <cmath>

using namespace westfem;

namespace {

Model make(ModelKind kind, int n, const MaterialValues& mv) {
    Mesh mesh = interval_mesh(n, 1.0);
    MaterialSpec mat = make_material(mesh, mv);
    return Model(kind, std::move(mesh), std::move(mat));
}

State sine_state(const Model& model, double amp_u, double amp_ut) {
    State s;
    s.t = 0;
    s.u = initial_field(model.mesh(), InitialProfile::Sine, amp_u, model.components());
    s.ut = initial_field(model.mesh(), InitialProfile::Sine, amp_ut, model.components());
    return s;
}

} // namespace

TEST_CASE("energy functionals on simple states") {
    MaterialValues mv;
    mv.c2 = 2.0;
    mv.b = 1.0;
    mv.k = 0.0;
    mv.eps = 0.0;
    mv.p = 3.0;
    mv.q = 3.0;
    Model model = make(ModelKind::PressureViscosity, 16, mv);
    const int n = model.dofs();

    State zero{0.0, Vec::Zero(n), Vec::Zero(n)};
    CHECK(energy(EnergyKind::E0, model, zero) == 0.0);
    CHECK(energy(EnergyKind::E1, model, zero) == 0.0);
    CHECK(energy(EnergyKind::EW1, model, zero) == 0.0);

    // E0 of (u = 0, ut = phi) equals |phi|_L2^2.
    State kin = sine_state(model, 0.0, 1.0);
    double l2 = lp_norm(model.mesh(), kin.ut, 2, false);
    CHECK(energy(EnergyKind::E0, model, kin) == doctest::Approx(l2 * l2).epsilon(1e-12));

    // EW1 with k = 0, eps = 0 is 1/2 |ut|^2 + c^2/2 |grad u|^2.
    State s = sine_state(model, 0.3, 0.2);
    double expect = 0.5 * std::pow(lp_norm(model.mesh(), s.ut, 2, false), 2) +
                    1.0 * std::pow(lp_norm(model.mesh(), s.u, 2, true), 2);
    CHECK(energy(EnergyKind::EW1, model, s) == doctest::Approx(expect).epsilon(1e-12));

    // Nonpositive weight 1-2ku makes EW1 undefined.
    MaterialValues bad = mv;
    bad.k = 1.0;
    Model bmodel = make(ModelKind::PressureViscosity, 16, bad);
    State sbad = sine_state(bmodel, 0.7, 0.0);
    CHECK_THROWS_AS(energy(EnergyKind::EW1, bmodel, sbad), DegeneracyError);
}

TEST_CASE("decay fit on synthetic data") {
    std::vector<double> t, e, c;
    for (int i = 0; i <= 200; ++i) {
        t.push_back(0.05 * i);
        e.push_back(3.0 * std::exp(-2.0 * 0.05 * i));
        c.push_back(0.7);
    }
    auto [omega, r2] = decay_fit(t, e, 1.0, 9.0);
    CHECK(omega == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(r2 == doctest::Approx(1.0).epsilon(1e-10));

    auto [omega0, r20] = decay_fit(t, c, 1.0, 9.0);
    CHECK(omega0 == doctest::Approx(0.0));
    (void)r20;

    CHECK_THROWS_AS(decay_fit(t, e, 100.0, 101.0), ConfigError);
}

TEST_CASE("enest margin passes on linear damped runs") {
    MaterialValues mv;
    mv.c2 = 1.0;
    mv.b = 1.0;
    mv.delta = 0.5;
    mv.q = 3.0;
    mv.k = 0.0;
    Model model = make(ModelKind::PressureViscosity, 32, mv);
    State init = sine_state(model, 0.5, 0.0);
    Trajectory traj = integrate(model, init, 1.0, 1.0 / 64);
    double tol = 10 * 1e-10 * model.mesh().node_count();
    MarginRecord rec = check_energy_inequality(traj, model, EnergyInequality::EnergyBalance, tol);
    CHECK(rec.pass);
    CHECK(rec.worst_margin >= -tol);

    // The lower- and higher-order measured constants stay finite.
    MarginRecord e0 = check_energy_inequality(traj, model, EnergyInequality::LowerOrder, tol);
    CHECK(e0.pass);
    CHECK(e0.measured_constant > 0);
    MarginRecord e1 = check_energy_inequality(traj, model, EnergyInequality::HigherOrder, tol);
    CHECK(e1.pass);

    // The check rejects a mismatched model kind.
    CHECK_THROWS_AS(check_energy_inequality(traj, model, EnergyInequality::DecayBound, tol), ConfigError);
}

TEST_CASE("p-laplace small data run: energy decay inequality and monotone EW1") {
    MaterialValues mv;
    mv.c2 = 1.0;
    mv.b = 1.0;
    mv.eps = 1.0;
    mv.p = 3.0;
    mv.k = 1.0;
    Model model = make(ModelKind::PressurePLaplace, 64, mv);
    State init = sine_state(model, 1e-2, 0.0);
    Trajectory traj = integrate(model, init, 2.0, 1.0 / 128);
    double tol = 10 * 1e-10 * model.mesh().node_count();

    MarginRecord rec = check_energy_inequality(traj, model, EnergyInequality::DecayBound, tol);
    CHECK(rec.pass);

    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < traj.size(); ++i) {
        double e = energy(EnergyKind::EW1, model, traj.state(i));
        CHECK(e <= prev + tol);
        prev = e;
    }

    // Dissipation accumulators are nondecreasing.
    EnergyReport rep = energy_report(traj, model, tol);
    for (std::size_t i = 1; i < rep.D_grad.size(); ++i) {
        CHECK(rep.D_grad[i] >= rep.D_grad[i - 1]);
        CHECK(rep.D_q[i] >= rep.D_q[i - 1]);
    }
}

TEST_CASE("gradient norm telescoping bound along midpoint trajectories") {
    // |grad u(t)|_{q+1} <= |grad u_0|_{q+1} + sum dt |grad u_t|_{q+1} holds
    // because u_{n+1} - u_n = (dt/2)(ut_n + ut_{n+1}) exactly.
    MaterialValues mv;
    mv.c2 = 1.0;
    mv.b = 1.0;
    mv.delta = 0.5;
    mv.q = 3.0;
    mv.k = 0.5;
    Model model = make(ModelKind::PressureViscosity, 24, mv);
    Trajectory traj = integrate(model, sine_state(model, 0.05, 0.0), 0.5, 1.0 / 32);
    const Mesh& mesh = model.mesh();
    double q1 = 4.0;
    double rhs = lp_norm(mesh, traj.u[0], q1, true);
    for (int i = 1; i < traj.size(); ++i) {
        double dt = traj.times[i] - traj.times[i - 1];
        rhs += dt * lp_norm(mesh, Vec(0.5 * (traj.ut[i - 1] + traj.ut[i])), q1, true);
        CHECK(lp_norm(mesh, traj.u[i], q1, true) <= rhs + 1e-10);
    }
}

TEST_CASE("equipartition residual: zero trajectory, wrong kind, dt refinement") {
    MaterialValues mv;
    mv.c2 = 1.0;
    mv.b = 1.0;
    mv.eps = 1.0;
    mv.p = 3.0;
    mv.k = 1.0;
    Model model = make(ModelKind::PressurePLaplace, 32, mv);

    Trajectory zero;
    for (int i = 0; i <= 4; ++i) {
        zero.times.push_back(0.125 * i);
        zero.u.push_back(Vec::Zero(model.dofs()));
        zero.ut.push_back(Vec::Zero(model.dofs()));
    }
    CHECK(equipartition_residual(zero, model) == 0.0);

    MaterialValues visc = mv;
    visc.eps = 0;
    visc.delta = 0.5;
    visc.q = 3.0;
    CHECK_THROWS_AS(equipartition_residual(zero, make(ModelKind::PressureViscosity, 32, visc)),
                    ConfigError);

    auto residual_at = [&](double dt) {
        Trajectory traj = integrate(model, sine_state(model, 1e-2, 0.0), 1.0, dt);
        return equipartition_residual(traj, model);
    };
    double r1 = residual_at(1.0 / 32);
    double r2 = residual_at(1.0 / 64);
    double r3 = residual_at(1.0 / 128);
    double f1 = r1 / r2, f2 = r2 / r3;
    CHECK(f1 >= 3.0);
    CHECK(f1 <= 5.0);
    CHECK(f2 >= 3.0);
    CHECK(f2 <= 5.0);
}

TEST_CASE("elastic energy check: finite measured constant on a coarse box run") {
    Mesh mesh = tag_elements(box_mesh(3, 3, 3, 1.0, 1.0, 1.0), [](const Point&) { return Tag::Fluid; });
    MaterialValues mv;
    mv.rho = 1.0;
    mv.lambda = 1.0;
    mv.mu = 0.0;
    mv.b_hat = 0.3;
    mv.b = 1e-3;
    mv.delta = 0.5;
    mv.q = 3.0;
    mv.k = 0.2;
    MaterialSpec mat = make_material(mesh, mv);
    Model model(ModelKind::ElasticCoupled, std::move(mesh), std::move(mat));
    State init;
    init.t = 0;
    init.u = initial_field(model.mesh(), InitialProfile::GradientSineSquared, 1e-2, 3);
    init.ut = Vec::Zero(model.dofs());
    Trajectory traj = integrate(model, init, 0.125, 1.0 / 32);
    double tol = 10 * 1e-10 * model.mesh().node_count();
    MarginRecord rec = check_energy_inequality(traj, model, EnergyInequality::ElasticBalance, tol);
    CHECK(rec.pass);
    CHECK(std::isfinite(rec.measured_constant));
    EnergyReport rep = energy_report(traj, model, tol);
    CHECK(rep.margins.count("margin_elastic_balance") == 1);
    for (double e : rep.EW1) CHECK(e >= 0);
}

TEST_CASE("interface jump: zero trajectory and lens refinement") {
    MaterialValues nl;
    nl.lambda = 1.0;
    nl.rho = 1.0;
    nl.k = 1.0;
    nl.b = 1.0;
    nl.delta = 0.5;
    nl.q = 3.0;
    MaterialValues lensmat;
    lensmat.lambda = 2.0;
    lensmat.rho = 0.5;
    lensmat.k = 0.0;
    lensmat.b = 0.0;
    lensmat.delta = 0.0;
    lensmat.q = 3.0;

    auto lens_model = [&](int n) {
        Mesh mesh = tag_elements(interval_mesh(n, 1.0), [](const Point& c) {
            return c[0] < 0.5 ? Tag::Nonlinear : Tag::Default;
        });
        std::map<Tag, MaterialValues> tags{{Tag::Nonlinear, nl}, {Tag::Default, lensmat}};
        MaterialSpec mat = make_material(mesh, tags);
        return Model(ModelKind::AcousticCoupled, std::move(mesh), std::move(mat));
    };

    Model m32 = lens_model(32);
    Trajectory zero;
    for (int i = 0; i <= 2; ++i) {
        zero.times.push_back(0.1 * i);
        zero.u.push_back(Vec::Zero(m32.dofs()));
        zero.ut.push_back(Vec::Zero(m32.dofs()));
    }
    CHECK(interface_jump(zero, m32) == 0.0);

    // Untagged mesh has no interface.
    Model untagged = make(ModelKind::AcousticCoupled, 16, nl);
    Trajectory zu;
    for (int i = 0; i <= 2; ++i) {
        zu.times.push_back(0.1 * i);
        zu.u.push_back(Vec::Zero(untagged.dofs()));
        zu.ut.push_back(Vec::Zero(untagged.dofs()));
    }
    CHECK_THROWS_AS(interface_jump(zu, untagged), ConfigError);

    auto jump_at = [&](int n) {
        Model model = lens_model(n);
        State init;
        init.t = 0;
        init.u = initial_field(model.mesh(), InitialProfile::Sine, 1e-3, 1);
        init.ut = Vec::Zero(model.dofs());
        Trajectory traj = integrate(model, init, 0.25, 1.0 / 64);
        return interface_jump(traj, model);
    };
    double j32 = jump_at(32), j64 = jump_at(64), j128 = jump_at(128);
    CHECK(j64 < j32);
    CHECK(j128 < j64);
}
