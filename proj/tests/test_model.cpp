#include "westfem/errors.hpp"
#include "westfem/model.hpp"
#include "westfem/norms.hpp"
#include "westfem/scenario.hpp"

#include <doctest.h>

#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <random>

using namespace westfem;

namespace {

Vec random_field(const Mesh& mesh, std::uint64_t seed, double amp, int comps) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-amp, amp);
    Vec f(comps * mesh.node_count());
    for (int i = 0; i < f.size(); ++i) f[i] = dist(rng);
    zero_boundary(mesh, f, comps);
    return f;
}

Model make_model(ModelKind kind, int n, const MaterialValues& mv) {
    Mesh mesh;
    if (kind == ModelKind::ElasticCoupled)
        mesh = tag_elements(rect_mesh(n, n, 1.0, 1.0), [](const Point&) { return Tag::Fluid; });
    else
        mesh = interval_mesh(n * n, 1.0);
    MaterialSpec mat = make_material(mesh, mv);
    return Model(kind, std::move(mesh), std::move(mat));
}

MaterialValues defaults_for(ModelKind kind) {
    MaterialValues mv;
    switch (kind) {
        case ModelKind::PressureViscosity:
            mv.c2 = 1.3;
            mv.b = 0.8;
            mv.delta = 0.5;
            mv.q = 3.0;
            mv.k = 0.7;
            break;
        case ModelKind::PressurePLaplace:
            mv.c2 = 1.1;
            mv.b = 0.6;
            mv.eps = 0.9;
            mv.p = 3.0;
            mv.k = 0.5;
            break;
        case ModelKind::PotentialViscosity:
            mv.c2 = 1.2;
            mv.b = 0.7;
            mv.delta = 0.4;
            mv.q = 3.0;
            mv.k = 0.6;
            break;
        case ModelKind::AcousticCoupled:
            mv.lambda = 1.5;
            mv.rho = 0.8;
            mv.b = 0.9;
            mv.delta = 0.5;
            mv.q = 3.0;
            mv.k = 0.4;
            break;
        case ModelKind::ElasticCoupled:
            mv.rho = 1.2;
            mv.lambda = 1.4;
            mv.mu = 0.0;
            mv.b_hat = 0.5;
            mv.b = 0.2;
            mv.delta = 0.5;
            mv.q = 3.0;
            mv.k = 0.3;
            break;
    }
    return mv;
}

// Relative mismatch of one Jacobian block against central differences in a
// random direction. which: 0 = utt, 1 = ut, 2 = u.
double block_fd_error(const Model& model, const State& s, const Vec& utt, const SpMat& J, int which,
                      const Vec& w, double h = 1e-6) {
    auto eval = [&](double sign) {
        State sp = s;
        Vec a = utt;
        if (which == 0) a += sign * h * w;
        if (which == 1) sp.ut += sign * h * w;
        if (which == 2) sp.u += sign * h * w;
        return model.residual(sp, a);
    };
    Vec fd = (eval(1.0) - eval(-1.0)) / (2 * h);
    Vec jw = J * w;
    return (jw - fd).norm() / std::max(1e-10, fd.norm());
}

const ModelKind kAllKinds[] = {ModelKind::PressureViscosity, ModelKind::PressurePLaplace,
                               ModelKind::PotentialViscosity, ModelKind::AcousticCoupled,
                               ModelKind::ElasticCoupled};

} // namespace

TEST_CASE("residual vanishes on the zero state and is affine in utt") {
    for (ModelKind kind : kAllKinds) {
        Model model = make_model(kind, 3, defaults_for(kind));
        Vec zero = Vec::Zero(model.dofs());
        CHECK(model.residual({0.0, zero, zero}, zero).norm() == 0.0);

        State s{0.0, random_field(model.mesh(), 5, 0.05, model.components()),
                random_field(model.mesh(), 6, 0.05, model.components())};
        Vec utt = random_field(model.mesh(), 7, 0.05, model.components());
        Vec lhs = model.residual(s, utt) - model.residual(s, zero);
        Vec rhs = model.jacobians(s, utt).d_utt * utt;
        CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("jacobians match finite differences for every model kind") {
    std::mt19937_64 seeds(123);
    for (ModelKind kind : kAllKinds) {
        Model model = make_model(kind, 3, defaults_for(kind));
        const int trials = 20;
        for (int t = 0; t < trials; ++t) {
            State s{0.0, random_field(model.mesh(), seeds(), 0.05, model.components()),
                    random_field(model.mesh(), seeds(), 0.05, model.components())};
            Vec utt = random_field(model.mesh(), seeds(), 0.05, model.components());
            Vec w = random_field(model.mesh(), seeds(), 1.0, model.components());
            Jacobians J = model.jacobians(s, utt);
            CHECK(block_fd_error(model, s, utt, J.d_utt, 0, w) <= 1e-5);
            CHECK(block_fd_error(model, s, utt, J.d_ut, 1, w) <= 1e-5);
            CHECK(block_fd_error(model, s, utt, J.d_u, 2, w) <= 1e-5);
        }
    }
}

TEST_CASE("k = 0, delta = 0 reduces to the linear strongly damped wave residual") {
    MaterialValues mv;
    mv.c2 = 1.5;
    mv.b = 0.9;
    mv.delta = 0.0;
    mv.q = 3.0;
    mv.k = 0.0;
    Model model = make_model(ModelKind::PressureViscosity, 4, mv);
    const Mesh& mesh = model.mesh();
    State s{0.0, random_field(mesh, 11, 0.5, 1), random_field(mesh, 12, 0.5, 1)};
    Vec utt = random_field(mesh, 13, 0.5, 1);
    Vec r = model.residual(s, utt);
    Vec ref = mass_matrix(mesh) * utt + 1.5 * (stiffness_matrix(mesh) * s.u) +
              0.9 * (stiffness_matrix(mesh) * s.ut);
    CHECK((r - ref).norm() <= 1e-12 * ref.norm());

    Jacobians J = model.jacobians(s, utt);
    CHECK(SpMat(J.d_utt - mass_matrix(mesh)).norm() <= 1e-13);
    CHECK(SpMat(J.d_ut - SpMat(0.9 * stiffness_matrix(mesh))).norm() <= 1e-13);
}

TEST_CASE("acoustic model with constant coefficients reproduces the pressure form") {
    // lambda = 1, rho = 1/c2 makes the residuals equal to machine precision.
    const double c2 = 1.7, b = 0.8, delta = 0.5, k = 0.6, q = 3.0;
    MaterialValues ac;
    ac.lambda = 1.0;
    ac.rho = 1.0 / c2;
    ac.b = b;
    ac.delta = delta;
    ac.q = q;
    ac.k = k;
    Model acoustic = make_model(ModelKind::AcousticCoupled, 4, ac);

    MaterialValues pv;
    pv.c2 = c2;
    pv.b = b;
    pv.delta = delta;
    pv.q = q;
    pv.k = k;
    Model pressure = make_model(ModelKind::PressureViscosity, 4, pv);

    State s{0.0, random_field(acoustic.mesh(), 21, 0.1, 1), random_field(acoustic.mesh(), 22, 0.1, 1)};
    Vec utt = random_field(acoustic.mesh(), 23, 0.1, 1);
    Vec ra = acoustic.residual(s, utt);
    Vec rp = pressure.residual(s, utt);
    CHECK((ra - rp).norm() <= 1e-13 * std::max(1.0, rp.norm()));
}

TEST_CASE("degeneracy margins and the error path") {
    MaterialValues mv = defaults_for(ModelKind::PressureViscosity);
    mv.k = 1.0;
    Model model = make_model(ModelKind::PressureViscosity, 4, mv);
    const Mesh& mesh = model.mesh();
    const int n = mesh.node_count();

    // k = 0 gives margin 1.
    MaterialValues lin = mv;
    lin.k = 0.0;
    Model linear = make_model(ModelKind::PressureViscosity, 4, lin);
    State s0{0.0, Vec::Zero(n), Vec::Zero(n)};
    CHECK(linear.degeneracy_margin(s0) == 1.0);

    // Constant interior value c0: margin = min(1, 1 - 2 k c0).
    Vec u = Vec::Constant(n, 0.3);
    zero_boundary(mesh, u);
    State s{0.0, u, Vec::Zero(n)};
    CHECK(model.degeneracy_margin(s) == doctest::Approx(1 - 2 * 0.3));

    // Margin is bounded below by 1 - 2|k| sup|u|.
    Vec ur = random_field(mesh, 31, 0.4, 1);
    State sr{0.0, ur, Vec::Zero(n)};
    CHECK(model.degeneracy_margin(sr) >=
          1 - 2 * 1.0 * lp_norm(mesh, ur, std::numeric_limits<double>::infinity(), false) - 1e-14);

    // At or below the floor the residual throws, carrying time and margin.
    Vec big = Vec::Constant(n, 0.6);
    zero_boundary(mesh, big);
    State bad{0.25, big, Vec::Zero(n)};
    CHECK(model.degeneracy_margin(bad) < 0.05);
    CHECK_THROWS_AS(model.residual(bad, Vec::Zero(n)), DegeneracyError);
    try {
        model.residual(bad, Vec::Zero(n));
    } catch (const DegeneracyError& e) {
        CHECK(e.time() == doctest::Approx(0.25));
        CHECK(e.margin() == doctest::Approx(1 - 1.2));
    }
}

TEST_CASE("frozen coefficients per model kind") {
    const int n = 4;
    // Pressure kind, v = constant c0: alpha = -2 k c0 so that the frozen
    // mass weight (1 + alpha) equals (1 - 2 k v).
    MaterialValues mv = defaults_for(ModelKind::PressureViscosity);
    Model model = make_model(ModelKind::PressureViscosity, n, mv);
    const int nn = model.mesh().node_count();
    Vec v = Vec::Constant(nn, 0.2);
    State sv{0.0, v, Vec::Constant(nn, 0.1)};
    FrozenCoefficients fc = model.frozen_coefficients(sv);
    for (int i = 0; i < nn; ++i) {
        CHECK(fc.alpha[i] == doctest::Approx(-2 * mv.k * 0.2));
        CHECK(fc.f[i] == doctest::Approx(-2 * mv.k * 0.1));
    }

    // v = 0 or k = 0: alpha = 0 (pressure), c2 (potential), 1 (elastic).
    State z{0.0, Vec::Zero(nn), Vec::Zero(nn)};
    CHECK(model.frozen_coefficients(z).alpha.cwiseAbs().maxCoeff() == 0.0);

    MaterialValues pot = defaults_for(ModelKind::PotentialViscosity);
    Model pmodel = make_model(ModelKind::PotentialViscosity, n, pot);
    State pz{0.0, Vec::Zero(pmodel.dofs()), Vec::Zero(pmodel.dofs())};
    Vec pa = pmodel.frozen_coefficients(pz).alpha;
    CHECK(pa.minCoeff() == doctest::Approx(pot.c2));
    CHECK(pa.maxCoeff() == doctest::Approx(pot.c2));

    MaterialValues el = defaults_for(ModelKind::ElasticCoupled);
    Model emodel = make_model(ModelKind::ElasticCoupled, 3, el);
    State ez{0.0, Vec::Zero(emodel.dofs()), Vec::Zero(emodel.dofs())};
    FrozenCoefficients efc = emodel.frozen_coefficients(ez);
    CHECK(efc.elementwise);
    CHECK(efc.alpha.minCoeff() == doctest::Approx(1.0));
    CHECK(efc.alpha.maxCoeff() == doctest::Approx(1.0));

    // Degenerate frozen state raises.
    Vec vbig = Vec::Constant(nn, 0.8);
    zero_boundary(model.mesh(), vbig);
    CHECK_THROWS_AS(model.frozen_coefficients({0.0, vbig, Vec::Zero(nn)}), DegeneracyError);
}

TEST_CASE("manufactured solution: interpolant residual shrinks at second order") {
    MaterialValues mv;
    mv.c2 = 1.0;
    mv.b = 1.0;
    mv.delta = 0.5;
    mv.q = 3.0;
    mv.k = 0.2;
    auto defect = [&](int n) {
        Mesh mesh = interval_mesh(n, 1.0);
        MaterialSpec mat = make_material(mesh, mv);
        Model model(ModelKind::PressureViscosity, std::move(mesh), std::move(mat));
        model.forcing = [&mv](const Point& x, double t) { return mms_forcing(mv, x, t); };
        const Mesh& mref = model.mesh();
        const double t = 0.3;
        Vec u(mref.node_count()), ut(mref.node_count()), utt(mref.node_count());
        for (int i = 0; i < mref.node_count(); ++i) {
            double x = mref.nodes[i][0];
            u[i] = std::sin(M_PI * x) * std::cos(t);
            ut[i] = -std::sin(M_PI * x) * std::sin(t);
            utt[i] = -std::sin(M_PI * x) * std::cos(t);
        }
        Vec r = model.residual({t, u, ut}, utt);
        zero_boundary(mref, r);
        // Mass-inverse norm has the units of an L2 defect.
        SpMat M = mass_matrix(mref);
        Eigen::SimplicialLDLT<SpMat> ldlt(M);
        Vec z = ldlt.solve(r);
        return std::sqrt(z.dot(r));
    };
    double d16 = defect(16), d32 = defect(32), d64 = defect(64);
    double r1 = std::log2(d16 / d32), r2 = std::log2(d32 / d64);
    CHECK(r1 >= 1.6);
    CHECK(r2 >= 1.7);
    CHECK(r2 <= 2.4);
}
