// Implicit-midpoint time stepping with Newton inner solves, the outer
// fixed-point iteration over the whole time window, admissibility checks
// against the configured Bochner-norm bounds, and the degeneracy guard.

#include "westfem/stepper.hpp"

#include "westfem/errors.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <limits>

namespace westfem {

namespace {

double component_norm(const Mesh& mesh, const Vec& field, int comps, double p, bool of_gradient) {
    const int n = mesh.node_count();
    double s = 0;
    for (int c = 0; c < comps; ++c) {
        double v = lp_norm(mesh, field.segment(c * n, n), p, of_gradient);
        s += v * v;
    }
    return std::sqrt(s);
}

struct StepProblem {
    std::function<Vec(const State&, const Vec&)> residual;
    std::function<Jacobians(const State&, const Vec&)> jacobians;
};

// One implicit-midpoint step: solve R(u_mid, ut_mid, a_mid) = 0 for
// x = ut_{n+1}, with u_mid = u_n + (dt/4)(ut_n + x), ut_mid = (ut_n + x)/2,
// a_mid = (x - ut_n)/dt. The update u_{n+1} = u_n + (dt/2)(ut_n + x) keeps
// the discrete fundamental theorem exact.
StepRecord midpoint_step(const Model& model, const StepProblem& prob, const Vec& u_n, const Vec& ut_n,
                         double t_n, double dt, const StepperOptions& opts, Vec& u_next, Vec& ut_next) {
    const Mesh& mesh = model.mesh();
    const int comps = model.components();
    const double t_mid = t_n + 0.5 * dt;
    const double tol = opts.newton_tol * std::max(1, mesh.element_count());

    auto mid_state = [&](const Vec& x) {
        State s;
        s.t = t_mid;
        s.u = u_n + (dt / 4.0) * (ut_n + x);
        s.ut = 0.5 * (ut_n + x);
        return s;
    };
    auto eval = [&](const Vec& x, State& s, Vec& a) {
        s = mid_state(x);
        a = (x - ut_n) / dt;
        Vec r = prob.residual(s, a);
        zero_boundary_rows(mesh, r, comps);
        return r;
    };

    StepRecord rec;
    Vec x = ut_n;
    State s;
    Vec a;
    Vec r = eval(x, s, a); // degeneracy at the entry state propagates
    double rnorm = r.norm();
    rec.residual_history.push_back(rnorm);

    Eigen::SparseLU<SpMat> lu;
    while (rnorm > tol) {
        if (rec.newton_iterations >= opts.max_newton_iterations)
            throw SolverError(t_mid, "newton: no convergence after " +
                                         std::to_string(opts.max_newton_iterations) + " iterations at t = " +
                                         std::to_string(t_mid) + " (residual " + std::to_string(rnorm) + ")");
        Jacobians J = prob.jacobians(s, a);
        SpMat G = J.d_utt / dt;
        G += 0.5 * J.d_ut;
        G += (dt / 4.0) * J.d_u;
        eliminate_dirichlet(mesh, G, comps);
        G.makeCompressed();
        lu.compute(G);
        if (lu.info() != Eigen::Success) throw SolverError(t_mid, "newton: singular step matrix");
        Vec dx = lu.solve(-r);
        zero_boundary(mesh, dx, comps);

        // Full step first, halving on residual increase; a degenerate trial
        // point counts as an increase.
        double lambda = 1.0;
        Vec x_trial;
        Vec r_trial;
        double rnorm_trial = std::numeric_limits<double>::infinity();
        for (int ls = 0; ls <= opts.max_line_search; ++ls) {
            x_trial = x + lambda * dx;
            try {
                State s_trial;
                Vec a_trial;
                r_trial = eval(x_trial, s_trial, a_trial);
                rnorm_trial = r_trial.norm();
            } catch (const DegeneracyError&) {
                rnorm_trial = std::numeric_limits<double>::infinity();
            }
            if (rnorm_trial < rnorm || ls == opts.max_line_search) break;
            lambda *= 0.5;
        }
        if (!(rnorm_trial < std::numeric_limits<double>::infinity()))
            throw DegeneracyError(t_mid, model.degeneracy_margin(mid_state(x)),
                                  "degeneracy: every Newton trial state at t = " + std::to_string(t_mid) +
                                      " fell below the floor");
        x = x_trial;
        r = eval(x, s, a);
        rnorm = r.norm();
        rec.newton_iterations++;
        rec.residual_history.push_back(rnorm);
    }

    ut_next = x;
    u_next = u_n + (dt / 2.0) * (ut_n + x);
    rec.final_residual = rnorm;
    return rec;
}

Trajectory run_window(const Model& model, const State& initial, double T, double dt,
                      const StepperOptions& opts, const StepProblem& prob) {
    if (!(dt > 0) || !(T > 0)) throw ConfigError("integrate: T and dt must be positive");
    const int nsteps = static_cast<int>(std::llround(T / dt));
    if (nsteps < 1) throw ConfigError("integrate: T/dt below one step");

    Trajectory traj;
    traj.times.reserve(nsteps + 1);
    traj.u.reserve(nsteps + 1);
    traj.ut.reserve(nsteps + 1);

    Vec u0 = initial.u;
    Vec v0 = initial.ut;
    zero_boundary(model.mesh(), u0, model.components());
    zero_boundary(model.mesh(), v0, model.components());

    double margin0 = model.degeneracy_margin({initial.t, u0, v0});
    if (margin0 <= model.degeneracy_floor())
        throw DegeneracyError(initial.t, margin0, "degeneracy: initial state margin " +
                                                      std::to_string(margin0) + " is at or below the floor");

    traj.times.push_back(initial.t);
    traj.u.push_back(u0);
    traj.ut.push_back(v0);

    for (int n = 0; n < nsteps; ++n) {
        double t_n = initial.t + n * dt;
        Vec u_next, ut_next;
        StepRecord rec =
            midpoint_step(model, prob, traj.u.back(), traj.ut.back(), t_n, dt, opts, u_next, ut_next);
        State end_state{t_n + dt, u_next, ut_next};
        rec.degeneracy_margin = model.degeneracy_margin(end_state);
        if (rec.degeneracy_margin <= model.degeneracy_floor())
            throw DegeneracyError(t_n + dt, rec.degeneracy_margin,
                                  "degeneracy: margin " + std::to_string(rec.degeneracy_margin) +
                                      " at t = " + std::to_string(t_n + dt) + " fell to the floor " +
                                      std::to_string(model.degeneracy_floor()));
        traj.times.push_back(t_n + dt);
        traj.u.push_back(std::move(u_next));
        traj.ut.push_back(std::move(ut_next));
        traj.report.steps.push_back(std::move(rec));
    }
    return traj;
}

} // namespace

Trajectory integrate(const Model& model, const State& initial, double T, double dt,
                     const StepperOptions& opts) {
    StepProblem prob;
    prob.residual = [&](const State& s, const Vec& a) { return model.residual(s, a); };
    prob.jacobians = [&](const State& s, const Vec& a) { return model.jacobians(s, a); };
    return run_window(model, initial, T, dt, opts, prob);
}

Trajectory fixed_point_outer(const Model& model, const State& initial, double T, double dt,
                             int max_outer, double tol, const StepperOptions& opts) {
    if (max_outer < 1) throw ConfigError("fixed_point_outer: max_outer must be >= 1");
    const int nsteps = static_cast<int>(std::llround(T / dt));

    // v^0: constant-in-time extension of the initial state.
    Trajectory prev;
    Vec u0 = initial.u;
    Vec v0 = initial.ut;
    zero_boundary(model.mesh(), u0, model.components());
    zero_boundary(model.mesh(), v0, model.components());
    for (int n = 0; n <= nsteps; ++n) {
        prev.times.push_back(initial.t + n * dt);
        prev.u.push_back(u0);
        prev.ut.push_back(v0);
    }

    Trajectory current;
    std::vector<double> updates;
    bool converged = false;
    int outer = 0;
    for (; outer < max_outer; ++outer) {
        const Trajectory& frozen_src = prev;
        StepProblem prob;
        // Freeze the coefficients of the linearized problem along the
        // previous iterate, interpolated at the midpoint of each step.
        auto frozen_at = [&, nsteps](double t) {
            double rel = (t - frozen_src.times.front()) / dt;
            int n = std::min(nsteps - 1, std::max(0, static_cast<int>(std::floor(rel))));
            double w = rel - n;
            State v;
            v.t = t;
            v.u = (1 - w) * frozen_src.u[n] + w * frozen_src.u[n + 1];
            v.ut = (1 - w) * frozen_src.ut[n] + w * frozen_src.ut[n + 1];
            return model.frozen_coefficients(v);
        };
        prob.residual = [&](const State& s, const Vec& a) {
            return model.frozen_residual(frozen_at(s.t), s, a);
        };
        prob.jacobians = [&](const State& s, const Vec& a) {
            (void)a;
            return model.frozen_jacobians(frozen_at(s.t), s);
        };
        current = run_window(model, initial, T, dt, opts, prob);
        double diff = triple_norm_difference(model, current, prev);
        updates.push_back(diff);
        if (diff <= tol) {
            converged = true;
            break;
        }
        prev = current;
    }

    current.report.outer_iterations = std::min(outer + 1, max_outer);
    current.report.fixed_point_updates = updates;
    for (std::size_t i = 1; i < updates.size(); ++i)
        if (updates[i - 1] > 0)
            current.report.fixed_point_ratios.push_back(updates[i] / updates[i - 1]);
    current.report.fixed_point_converged = converged;
    return current;
}

double triple_norm(const Model& model, const Trajectory& traj) {
    const Mesh& mesh = model.mesh();
    const int comps = model.components();
    double sup_ut = 0, sup_gu = 0, int_gut = 0;
    for (int i = 0; i < traj.size(); ++i) {
        sup_ut = std::max(sup_ut, component_norm(mesh, traj.ut[i], comps, 2, false));
        sup_gu = std::max(sup_gu, component_norm(mesh, traj.u[i], comps, 2, true));
    }
    for (int i = 0; i + 1 < traj.size(); ++i) {
        double dt = traj.times[i + 1] - traj.times[i];
        double a = component_norm(mesh, traj.ut[i], comps, 2, true);
        double b = component_norm(mesh, traj.ut[i + 1], comps, 2, true);
        int_gut += 0.5 * dt * (a * a + b * b);
    }
    return sup_ut + sup_gu + std::sqrt(int_gut);
}

double triple_norm_difference(const Model& model, const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size()) throw ConfigError("triple_norm_difference: trajectory sizes differ");
    Trajectory d;
    d.times = a.times;
    d.u.resize(a.size());
    d.ut.resize(a.size());
    for (int i = 0; i < a.size(); ++i) {
        d.u[i] = a.u[i] - b.u[i];
        d.ut[i] = a.ut[i] - b.ut[i];
    }
    return triple_norm(model, d);
}

AdmissibilityRecord check_admissibility(const Trajectory& traj, const Model& model, double m_bar,
                                        double M_bar, double kappa, int embedding_samples,
                                        std::uint64_t seed) {
    const Mesh& mesh = model.mesh();
    const int comps = model.components();
    AdmissibilityRecord rec;
    rec.m_bar = m_bar;
    rec.M_bar = M_bar;
    rec.kappa = kappa;
    const double T = traj.times.back() - traj.times.front();
    const double q = model.material().q[0];
    const double p = model.material().p[0];
    const double kmax = model.material().k.cwiseAbs().maxCoeff();

    // u_tt reconstructed on midpoints, midpoint-rule time integral.
    double utt_sq = 0;
    for (int i = 0; i + 1 < traj.size(); ++i) {
        double dt = traj.times[i + 1] - traj.times[i];
        Vec a = (traj.ut[i + 1] - traj.ut[i]) / dt;
        double n = component_norm(mesh, a, comps, 2, false);
        utt_sq += dt * n * n;
    }
    double utt_norm = std::sqrt(utt_sq);

    auto sup_norm = [&](const std::vector<Vec>& fields, double pn, bool grad) {
        double s = 0;
        for (const auto& f : fields) s = std::max(s, component_norm(mesh, f, comps, pn, grad));
        return s;
    };
    auto lp_time = [&](const std::vector<Vec>& fields, double pn, bool grad, double tp) {
        double integral = 0;
        for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
            double dt = traj.times[i + 1] - traj.times[i];
            double a = component_norm(mesh, fields[i], comps, pn, grad);
            double b = component_norm(mesh, fields[i + 1], comps, pn, grad);
            integral += 0.5 * dt * (std::pow(a, tp) + std::pow(b, tp));
        }
        return std::pow(integral, 1.0 / tp);
    };

    double exponent = q;
    switch (model.kind()) {
        case ModelKind::PressureViscosity:
        case ModelKind::AcousticCoupled:
            rec.norm_utt = utt_norm;
            rec.norm_mid = sup_norm(traj.ut, 2, true);
            rec.norm_high = lp_time(traj.ut, q + 1, true, q + 1);
            break;
        case ModelKind::PotentialViscosity:
            rec.norm_utt = utt_norm;
            rec.norm_mid = sup_norm(traj.ut, 2, true);
            rec.norm_high = sup_norm(traj.ut, q + 1, true);
            break;
        case ModelKind::PressurePLaplace:
            rec.norm_utt = sup_norm(traj.ut, 2, false);
            rec.norm_mid = lp_time(traj.ut, 2, true, 2);
            rec.norm_high = sup_norm(traj.u, p + 1, true);
            exponent = p;
            break;
        case ModelKind::ElasticCoupled: {
            rec.norm_utt = utt_norm;
            double s2 = 0, sq = 0;
            Tag nl = Tag::Nonlinear;
            for (const auto& f : traj.ut) {
                s2 = std::max(s2, voigt_lp_norm(mesh, f, 2));
                sq = std::max(sq, voigt_lp_norm(mesh, f, q + 1, &nl));
            }
            rec.norm_mid = s2;
            rec.norm_high = sq;
            break;
        }
    }
    rec.member = rec.norm_utt <= m_bar && rec.norm_mid <= m_bar && rec.norm_high <= M_bar;

    rec.embedding_constant = embedding_ratio_estimate(mesh, NormSpec::gradient(exponent + 1),
                                                      NormSpec::field_sup(), embedding_samples, seed);
    switch (model.kind()) {
        case ModelKind::PressureViscosity:
        case ModelKind::AcousticCoupled:
            rec.smallness_lhs =
                2 * kmax * rec.embedding_constant * (kappa + std::pow(T, q / (q + 1)) * M_bar);
            break;
        case ModelKind::PressurePLaplace:
            rec.smallness_lhs = 2 * kmax * rec.embedding_constant * M_bar;
            break;
        default: rec.smallness_lhs = 2 * kmax * rec.embedding_constant * M_bar; break;
    }
    return rec;
}

GuardReport degeneracy_guard(const Model& model, const State& s, int embedding_samples,
                             std::uint64_t seed) {
    GuardReport g;
    g.margin = model.degeneracy_margin(s);
    const Mesh& mesh = model.mesh();
    const double kmax = model.material().k.cwiseAbs().maxCoeff();
    if (kmax == 0) {
        g.apriori = 1;
        return g;
    }
    double expo = model.kind() == ModelKind::PressurePLaplace ? model.material().p[0]
                                                              : model.material().q[0];
    double C = embedding_ratio_estimate(mesh, NormSpec::gradient(expo + 1), NormSpec::field_sup(),
                                        embedding_samples, seed);
    double gnorm;
    switch (model.kind()) {
        case ModelKind::PressureViscosity:
        case ModelKind::PressurePLaplace:
        case ModelKind::AcousticCoupled: gnorm = lp_norm(mesh, s.u, expo + 1, true); break;
        case ModelKind::PotentialViscosity: gnorm = lp_norm(mesh, s.ut, expo + 1, true); break;
        case ModelKind::ElasticCoupled: gnorm = voigt_lp_norm(mesh, s.ut, expo + 1); break;
        default: gnorm = 0; break;
    }
    g.apriori = 1 - 2 * kmax * C * gnorm;
    return g;
}

} // namespace westfem
