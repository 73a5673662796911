// Energy functionals, discrete energy-inequality checks, exponential decay
// fits, the equipartition identity residual, and the weak interface-flux
// jump of the coupled models.

#include "westfem/energy.hpp"

#include "westfem/errors.hpp"
#include "westfem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace westfem {

namespace {

Eigen::Vector3d to_eigen(const Point& p) { return {p[0], p[1], p[2]}; }

// int_e w1 w2 dx for P1 fields, exact.
double pair_integral(const Mesh& mesh, int e, const Vec& w1, const Vec& w2) {
    const auto& el = mesh.elements[e];
    double s = 0;
    for (int a = 0; a <= mesh.dim; ++a)
        for (int b = 0; b <= mesh.dim; ++b) {
            std::array<int, 4> pw{0, 0, 0, 0};
            pw[a]++;
            pw[b]++;
            s += w1[el[a]] * w2[el[b]] * simplex_monomial_integral(mesh.dim, pw);
        }
    return mesh.geometry[e].measure * s;
}

// int_e w1 w2 w3 dx for P1 fields, exact.
double triple_integral(const Mesh& mesh, int e, const Vec& w1, const Vec& w2, const Vec& w3) {
    const auto& el = mesh.elements[e];
    double s = 0;
    for (int a = 0; a <= mesh.dim; ++a)
        for (int b = 0; b <= mesh.dim; ++b)
            for (int c = 0; c <= mesh.dim; ++c) {
                std::array<int, 4> pw{0, 0, 0, 0};
                pw[a]++;
                pw[b]++;
                pw[c]++;
                s += w1[el[a]] * w2[el[b]] * w3[el[c]] * simplex_monomial_integral(mesh.dim, pw);
            }
    return mesh.geometry[e].measure * s;
}

// int (1 - 2ku) ut^2 dx, exact.
double weighted_kinetic(const Mesh& mesh, const MaterialSpec& mat, const Vec& u, const Vec& ut,
                        const Vec& scale) {
    double s = 0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        double v = pair_integral(mesh, e, ut, ut);
        if (mat.k[e] != 0) v -= 2 * mat.k[e] * triple_integral(mesh, e, u, ut, ut);
        s += scale[e] * v;
    }
    return s;
}

double grad_sq(const Mesh& mesh, const Vec& field, const Vec& coeff) {
    double s = 0;
    for (int e = 0; e < mesh.element_count(); ++e)
        s += coeff[e] * mesh.geometry[e].measure * element_gradient(mesh, field, e).squaredNorm();
    return s;
}

double grad_pow(const Mesh& mesh, const Vec& field, const Vec& coeff, const Vec& expo) {
    double s = 0;
    for (int e = 0; e < mesh.element_count(); ++e)
        s += coeff[e] * mesh.geometry[e].measure *
             std::pow(element_gradient(mesh, field, e).norm(), expo[e]);
    return s;
}

double vec_l2_sq(const Mesh& mesh, const Vec& field, int comps) {
    const int n = mesh.node_count();
    double s = 0;
    for (int c = 0; c < comps; ++c) {
        double v = lp_norm(mesh, field.segment(c * n, n), 2, false);
        s += v * v;
    }
    return s;
}

State midpoint_state(const Trajectory& traj, int i) {
    State s;
    s.t = 0.5 * (traj.times[i] + traj.times[i + 1]);
    s.u = 0.5 * (traj.u[i] + traj.u[i + 1]);
    s.ut = 0.5 * (traj.ut[i] + traj.ut[i + 1]);
    return s;
}

} // namespace

double energy(EnergyKind kind, const Model& model, const State& s) {
    const Mesh& mesh = model.mesh();
    const MaterialSpec& mat = model.material();
    const Vec ones = Vec::Ones(mesh.element_count());

    if (model.kind() == ModelKind::ElasticCoupled) {
        auto strain_u = voigt_apply(mesh, s.u);
        auto strain_ut = voigt_apply(mesh, s.ut);
        switch (kind) {
            case EnergyKind::E0: {
                double e = vec_l2_sq(mesh, s.ut, mesh.dim);
                for (int el = 0; el < mesh.element_count(); ++el)
                    e += mesh.geometry[el].measure * strain_u[el].squaredNorm();
                return e;
            }
            case EnergyKind::E1: {
                double e = energy(EnergyKind::E0, model, s);
                for (int el = 0; el < mesh.element_count(); ++el) {
                    double r = strain_ut[el].norm();
                    e += mesh.geometry[el].measure * (r * r + std::pow(r, mat.q[el] + 1));
                }
                return e;
            }
            case EnergyKind::EW1: {
                // rho-kinetic plus strain energy with the state coefficient.
                double kin = 0;
                const int n = mesh.node_count();
                for (int c = 0; c < mesh.dim; ++c) {
                    Vec comp = s.ut.segment(c * n, n);
                    for (int el = 0; el < mesh.element_count(); ++el)
                        kin += mat.rho[el] * pair_integral(mesh, el, comp, comp);
                }
                Vec psit = model.poisson().solve_divergence(s.ut);
                double strain = 0;
                for (int el = 0; el < mesh.element_count(); ++el) {
                    double a = 0;
                    for (int v = 0; v <= mesh.dim; ++v)
                        a += 1.0 / (1 - 2 * mat.k[el] * psit[mesh.elements[el][v]]);
                    a /= mesh.dim + 1;
                    strain += a * mesh.geometry[el].measure *
                              strain_u[el].dot(mat.c_voigt(mesh, el) * strain_u[el]);
                }
                return 0.5 * kin + 0.5 * strain;
            }
        }
    }

    switch (kind) {
        case EnergyKind::E0:
            return std::pow(lp_norm(mesh, s.ut, 2, false), 2) + grad_sq(mesh, s.u, ones);
        case EnergyKind::E1:
            return energy(EnergyKind::E0, model, s) + grad_sq(mesh, s.ut, ones) +
                   grad_pow(mesh, s.ut, ones, Vec(mat.q.array() + 1));
        case EnergyKind::EW1: {
            double m = model.degeneracy_margin(s);
            if (model.kind() == ModelKind::PotentialViscosity)
                return 0.5 * std::pow(lp_norm(mesh, s.ut, 2, false), 2) +
                       0.5 * grad_sq(mesh, s.u, mat.c2);
            if (!(m > 0))
                throw DegeneracyError(s.t, m, "EW1 is undefined: the weight 1-2ku is not positive");
            Vec scale = Vec::Ones(mesh.element_count());
            Vec stiff_coeff = mat.c2;
            if (model.kind() == ModelKind::AcousticCoupled) {
                scale = mat.lambda.cwiseInverse();
                stiff_coeff = mat.rho.cwiseInverse();
            }
            double kin = weighted_kinetic(mesh, mat, s.u, s.ut, scale);
            double e = 0.5 * kin + 0.5 * grad_sq(mesh, s.u, stiff_coeff);
            if ((mat.eps.array() != 0).any())
                e += grad_pow(mesh, s.u, Vec(mat.c2.cwiseProduct(mat.eps).cwiseQuotient(Vec(mat.p.array() + 1))),
                              Vec(mat.p.array() + 1));
            return e;
        }
    }
    return 0;
}

namespace {

// Quadratic-form energy of the linearized weak form: half the weighted
// kinetic term plus half the main stiffness form.
double weak_energy(const Model& model, const State& s) {
    const Mesh& mesh = model.mesh();
    const MaterialSpec& mat = model.material();
    Vec scale = Vec::Ones(mesh.element_count());
    Vec stiff = mat.c2;
    if (model.kind() == ModelKind::AcousticCoupled) {
        scale = mat.lambda.cwiseInverse();
        stiff = mat.rho.cwiseInverse();
    }
    return 0.5 * weighted_kinetic(mesh, mat, s.u, s.ut, scale) + 0.5 * grad_sq(mesh, s.u, stiff);
}

double elastic_weak_energy(const Model& model, const State& s) {
    const Mesh& mesh = model.mesh();
    const MaterialSpec& mat = model.material();
    const int n = mesh.node_count();
    double kin = 0;
    for (int c = 0; c < mesh.dim; ++c) {
        Vec comp = s.ut.segment(c * n, n);
        for (int e = 0; e < mesh.element_count(); ++e)
            kin += mat.rho[e] * pair_integral(mesh, e, comp, comp);
    }
    Vec psit = model.poisson().solve_divergence(s.ut);
    auto strain_u = voigt_apply(mesh, s.u);
    double strain = 0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        double a = 0;
        for (int v = 0; v <= mesh.dim; ++v) a += 1.0 / (1 - 2 * mat.k[e] * psit[mesh.elements[e][v]]);
        a /= mesh.dim + 1;
        strain += a * mesh.geometry[e].measure * strain_u[e].dot(mat.c_voigt(mesh, e) * strain_u[e]);
    }
    return 0.5 * kin + 0.5 * strain;
}

} // namespace

MarginRecord check_energy_inequality(const Trajectory& traj, const Model& model, EnergyInequality which,
                                     double tol_energy) {
    const Mesh& mesh = model.mesh();
    const MaterialSpec& mat = model.material();
    const ModelKind kind = model.kind();
    const int N = traj.size();
    if (N < 2) throw ConfigError("check_energy_inequality: trajectory too short");

    MarginRecord rec;
    rec.tolerance = tol_energy;

    auto require_kind = [&](bool ok) {
        if (!ok)
            throw ConfigError(std::string("check_energy_inequality: check does not apply to ") +
                              model_kind_name(kind));
    };

    const Vec ones = Vec::Ones(mesh.element_count());
    const double kmax = mat.k.cwiseAbs().maxCoeff();

    switch (which) {
        case EnergyInequality::EnergyBalance: {
            require_kind(kind == ModelKind::PressureViscosity || kind == ModelKind::AcousticCoupled);
            rec.name = "energy_balance";
            // f - alpha_t/2 = -(k/lambda) u_t along the self-frozen problem.
            Vec fcoeff = mat.k;
            if (kind == ModelKind::AcousticCoupled) fcoeff = mat.k.cwiseQuotient(mat.lambda);
            double bbar = 0;
            for (int i = 0; i < N; ++i) {
                double s = 0;
                for (int e = 0; e < mesh.element_count(); ++e)
                    s += fcoeff[e] * fcoeff[e] * pair_integral(mesh, e, traj.ut[i], traj.ut[i]);
                bbar = std::max(bbar, std::sqrt(s));
            }
            double C14 = embedding_ratio_estimate(mesh, NormSpec::gradient(2), NormSpec::field(4), 16);
            double bhat = std::numeric_limits<double>::infinity();
            for (int e = 0; e < mesh.element_count(); ++e)
                bhat = std::min(bhat, mat.b[e] * (1 - mat.delta[e]));
            bhat = std::max(0.0, bhat - C14 * C14 * bbar); // clamped at zero
            double W0 = weak_energy(model, traj.state(0));
            double D = 0;
            double worst = std::numeric_limits<double>::infinity();
            double cmeas = 0;
            for (int i = 0; i < N; ++i) {
                if (i > 0) {
                    double dt = traj.times[i] - traj.times[i - 1];
                    State m = midpoint_state(traj, i - 1);
                    D += dt * (bhat * grad_sq(mesh, m.ut, ones) +
                               grad_pow(mesh, m.ut, Vec(0.5 * mat.b.cwiseProduct(mat.delta)),
                                        Vec(mat.q.array() + 1)));
                }
                double lhs = weak_energy(model, traj.state(i)) - W0 + D;
                rec.lhs.push_back(lhs);
                rec.rhs.push_back(0.0);
                worst = std::min(worst, -lhs);
                if (W0 > 0) cmeas = std::max(cmeas, (lhs + W0) / W0);
            }
            rec.worst_margin = worst;
            rec.measured_constant = cmeas;
            rec.pass = worst >= -tol_energy;
            break;
        }
        case EnergyInequality::LowerOrder:
        case EnergyInequality::HigherOrder: {
            require_kind(kind != ModelKind::ElasticCoupled);
            const bool high = which == EnergyInequality::HigherOrder;
            rec.name = high ? "higher_order" : "lower_order";
            double c_diss = std::numeric_limits<double>::infinity();
            for (int e = 0; e < mesh.element_count(); ++e)
                c_diss = std::min(c_diss, std::min(mat.b[e] * (1 - mat.delta[e]),
                                                   0.5 * mat.b[e] * mat.delta[e]));
            c_diss = std::max(c_diss, 0.0);
            EnergyKind ek = high ? EnergyKind::E1 : EnergyKind::E0;
            double E_init = energy(ek, model, traj.state(0));
            double fsup = 0;
            if (high)
                for (int i = 0; i < N; ++i)
                    fsup = std::max(fsup, 2 * kmax * lp_norm(mesh, traj.ut[i], 4, false));
            double data = E_init + fsup * fsup;
            double D = 0;
            double cmeas = 0;
            for (int i = 0; i < N; ++i) {
                if (i > 0) {
                    double dt = traj.times[i] - traj.times[i - 1];
                    State m = midpoint_state(traj, i - 1);
                    double d = grad_sq(mesh, m.ut, ones) +
                               grad_pow(mesh, m.ut, ones, Vec(mat.q.array() + 1));
                    if (high) {
                        Vec utt = (traj.ut[i] - traj.ut[i - 1]) / dt;
                        d += vec_l2_sq(mesh, utt, model.components());
                    }
                    D += dt * c_diss * d;
                }
                double lhs = energy(ek, model, traj.state(i)) + D;
                rec.lhs.push_back(lhs);
                rec.rhs.push_back(data);
                if (data > 0) cmeas = std::max(cmeas, lhs / data);
            }
            rec.measured_constant = cmeas;
            rec.worst_margin = 0;
            rec.pass = std::isfinite(cmeas);
            break;
        }
        case EnergyInequality::DecayBound: {
            require_kind(kind == ModelKind::PressurePLaplace);
            rec.name = "decay_bound";
            double alpha_bar = 0;
            for (int i = 0; i < N; ++i)
                for (int e = 0; e < mesh.element_count(); ++e)
                    for (int v = 0; v <= mesh.dim; ++v)
                        alpha_bar = std::max(alpha_bar,
                                             std::abs(2 * mat.k[e] * traj.u[i][mesh.elements[e][v]]));
            double E0v = energy(EnergyKind::EW1, model, traj.state(0));
            double C14 = embedding_ratio_estimate(mesh, NormSpec::gradient(2), NormSpec::field(4), 16);
            double btilde = 0;
            if (alpha_bar < 1) {
                double kappa = std::sqrt(E0v);
                btilde = mat.b.minCoeff() - std::sqrt(2 / (1 - alpha_bar)) * kappa * kmax * C14 * C14;
                btilde = std::max(btilde, 0.0);
            }
            double D = 0;
            double worst = std::numeric_limits<double>::infinity();
            for (int i = 0; i < N; ++i) {
                if (i > 0) {
                    double dt = traj.times[i] - traj.times[i - 1];
                    State m = midpoint_state(traj, i - 1);
                    D += dt * grad_sq(mesh, m.ut, ones);
                }
                double lhs = energy(EnergyKind::EW1, model, traj.state(i)) + btilde * D;
                rec.lhs.push_back(lhs);
                rec.rhs.push_back(E0v);
                worst = std::min(worst, E0v - lhs);
            }
            rec.worst_margin = worst;
            rec.measured_constant = E0v > 0 ? (*std::max_element(rec.lhs.begin(), rec.lhs.end())) / E0v : 0;
            rec.pass = worst >= -tol_energy;
            break;
        }
        case EnergyInequality::ElasticBalance: {
            require_kind(kind == ModelKind::ElasticCoupled);
            rec.name = "elastic_balance";
            double W0 = elastic_weak_energy(model, traj.state(0));
            double D = 0;
            double cmeas = 0;
            double worst = std::numeric_limits<double>::infinity();
            for (int i = 0; i < N; ++i) {
                if (i > 0) {
                    double dt = traj.times[i] - traj.times[i - 1];
                    State m = midpoint_state(traj, i - 1);
                    auto rate = voigt_apply(mesh, m.ut);
                    double d = 0;
                    for (int e = 0; e < mesh.element_count(); ++e) {
                        double r = rate[e].norm();
                        double w = (1 - mat.delta[e]) + mat.delta[e] * std::pow(r, mat.q[e] - 1);
                        d += mesh.geometry[e].measure * w *
                             rate[e].dot(mat.b_voigt(mesh, e) * rate[e]);
                    }
                    D += dt * d;
                }
                double lhs = elastic_weak_energy(model, traj.state(i)) + D;
                rec.lhs.push_back(lhs);
                rec.rhs.push_back(W0);
                worst = std::min(worst, W0 - lhs);
                if (W0 > 0) cmeas = std::max(cmeas, lhs / W0);
            }
            rec.worst_margin = worst;
            rec.measured_constant = cmeas;
            rec.pass = std::isfinite(cmeas);
            break;
        }
    }
    return rec;
}

EnergyReport energy_report(const Trajectory& traj, const Model& model, double tol_energy) {
    const Mesh& mesh = model.mesh();
    const MaterialSpec& mat = model.material();
    EnergyReport rep;
    rep.t = traj.times;
    const Vec ones = Vec::Ones(mesh.element_count());
    double dgrad = 0, dq = 0;
    for (int i = 0; i < traj.size(); ++i) {
        State s = traj.state(i);
        rep.E0.push_back(energy(EnergyKind::E0, model, s));
        rep.E1.push_back(energy(EnergyKind::E1, model, s));
        rep.EW1.push_back(energy(EnergyKind::EW1, model, s));
        if (i > 0) {
            double dt = traj.times[i] - traj.times[i - 1];
            State m = midpoint_state(traj, i - 1);
            if (model.kind() == ModelKind::ElasticCoupled) {
                auto rate = voigt_apply(mesh, m.ut);
                double g2 = 0, gq = 0;
                for (int e = 0; e < mesh.element_count(); ++e) {
                    double r = rate[e].norm();
                    g2 += mesh.geometry[e].measure * r * r;
                    gq += mesh.geometry[e].measure * std::pow(r, mat.q[e] + 1);
                }
                dgrad += dt * g2;
                dq += dt * gq;
            } else {
                dgrad += dt * grad_sq(mesh, m.ut, ones);
                dq += dt * grad_pow(mesh, m.ut, ones, Vec(mat.q.array() + 1));
            }
        }
        rep.D_grad.push_back(dgrad);
        rep.D_q.push_back(dq);
    }

    EnergyInequality which;
    switch (model.kind()) {
        case ModelKind::PressureViscosity:
        case ModelKind::AcousticCoupled: which = EnergyInequality::EnergyBalance; break;
        case ModelKind::PressurePLaplace: which = EnergyInequality::DecayBound; break;
        case ModelKind::ElasticCoupled: which = EnergyInequality::ElasticBalance; break;
        default: which = EnergyInequality::LowerOrder; break;
    }
    MarginRecord mr = check_energy_inequality(traj, model, which, tol_energy);
    std::vector<double> margins(mr.lhs.size());
    for (std::size_t i = 0; i < mr.lhs.size(); ++i) margins[i] = mr.rhs[i] - mr.lhs[i];
    rep.margins["margin_" + mr.name] = margins;
    return rep;
}

std::pair<double, double> decay_fit(const std::vector<double>& t, const std::vector<double>& E,
                                    double ta, double tb) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < ta || t[i] > tb) continue;
        if (!(E[i] > 0)) break; // nonpositive energy truncates the window
        xs.push_back(t[i]);
        ys.push_back(std::log(E[i]));
    }
    if (xs.size() < 2) throw ConfigError("decay_fit: window contains fewer than two usable samples");
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0, ymean = sy / n;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double fit = slope * xs[i] + intercept;
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - ymean) * (ys[i] - ymean);
    }
    double r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return {-slope, r2};
}

double equipartition_residual(const Trajectory& traj, const Model& model) {
    if (model.kind() != ModelKind::PressurePLaplace)
        throw ConfigError("equipartition_residual: defined for the p-Laplace model only");
    const Mesh& mesh = model.mesh();
    const MaterialSpec& mat = model.material();

    // P(t) = int (1-2ku) u u_t, A(t) = int (1-2ku) u_t^2,
    // B(t) = c^2 |grad u|^2 + c^2 eps |grad u|^{p+1}, G(t) = b-weighted |grad u|^2.
    auto P = [&](const State& s) {
        double v = 0;
        for (int e = 0; e < mesh.element_count(); ++e) {
            v += pair_integral(mesh, e, s.u, s.ut);
            if (mat.k[e] != 0) v -= 2 * mat.k[e] * triple_integral(mesh, e, s.u, s.u, s.ut);
        }
        return v;
    };
    auto A = [&](const State& s) {
        return weighted_kinetic(mesh, mat, s.u, s.ut, Vec(Vec::Ones(mesh.element_count())));
    };
    auto B = [&](const State& s) {
        return grad_sq(mesh, s.u, mat.c2) +
               grad_pow(mesh, s.u, Vec(mat.c2.cwiseProduct(mat.eps)), Vec(mat.p.array() + 1));
    };
    auto G = [&](const State& s) { return grad_sq(mesh, s.u, mat.b); };

    double integral = 0;
    std::vector<double> vals(traj.size());
    for (int i = 0; i < traj.size(); ++i) {
        State s = traj.state(i);
        vals[i] = -A(s) + B(s);
    }
    for (int i = 0; i + 1 < traj.size(); ++i)
        integral += 0.5 * (traj.times[i + 1] - traj.times[i]) * (vals[i] + vals[i + 1]);

    State s0 = traj.state(0), sN = traj.state(traj.size() - 1);
    double res = (P(sN) - P(s0)) + integral + 0.5 * (G(sN) - G(s0));
    return std::abs(res);
}

double interface_jump(const Trajectory& traj, const Model& model) {
    const Mesh& mesh = model.mesh();
    const MaterialSpec& mat = model.material();
    if (model.kind() != ModelKind::AcousticCoupled && model.kind() != ModelKind::ElasticCoupled)
        throw ConfigError("interface_jump: defined for the coupled models only");
    auto inodes = interface_nodes(mesh);
    if (inodes.empty()) throw ConfigError("interface_jump: the mesh has no tagged interface");

    Tag first = mesh.element_tags[0];
    auto side_one = [&](int e) { return mesh.element_tags[e] == first; };

    const bool elastic = model.kind() == ModelKind::ElasticCoupled;
    const int comps = model.components();
    const int n = mesh.node_count();

    // Flux part of the residual restricted to one side; for P1 with
    // element-wise coefficients this evaluates the one-sided interface flux
    // integral exactly (element interiors are divergence free).
    auto side_flux = [&](const State& s, bool one) {
        Vec J = Vec::Zero(model.dofs());
        Vec psit;
        if (elastic) psit = model.poisson().solve_divergence(s.ut);
        for (int e = 0; e < mesh.element_count(); ++e) {
            if (side_one(e) != one) continue;
            const auto& el = mesh.elements[e];
            const auto& geo = mesh.geometry[e];
            if (!elastic) {
                Eigen::Vector3d gu = element_gradient(mesh, s.u, e);
                Eigen::Vector3d gut = element_gradient(mesh, s.ut, e);
                double w = (1 - mat.delta[e]) +
                           mat.delta[e] * std::pow(std::sqrt(gut.squaredNorm() + kGradEta * kGradEta),
                                                   mat.q[e] - 1);
                Eigen::Vector3d flux = gu / mat.rho[e] + mat.b[e] * w * gut;
                for (int v = 0; v <= mesh.dim; ++v)
                    J[el[v]] += geo.measure * flux.dot(to_eigen(geo.grad[v]));
            } else {
                double a = 0;
                for (int v = 0; v <= mesh.dim; ++v) a += 1.0 / (1 - 2 * mat.k[e] * psit[el[v]]);
                a /= mesh.dim + 1;
                Eigen::MatrixXd Bm = voigt_element_matrix(mesh, e);
                const int nv = mesh.dim + 1;
                Eigen::VectorXd uloc(mesh.dim * nv), vloc(mesh.dim * nv);
                for (int c = 0; c < mesh.dim; ++c)
                    for (int v = 0; v < nv; ++v) {
                        uloc[c * nv + v] = s.u[c * n + el[v]];
                        vloc[c * nv + v] = s.ut[c * n + el[v]];
                    }
                Eigen::VectorXd strain = Bm * uloc, rate = Bm * vloc;
                double r = std::sqrt(rate.squaredNorm() + kGradEta * kGradEta);
                double w = (1 - mat.delta[e]) + mat.delta[e] * std::pow(r, mat.q[e] - 1);
                Eigen::VectorXd sigma = a * (mat.c_voigt(mesh, e) * strain) +
                                        w * (mat.b_voigt(mesh, e) * rate);
                Eigen::VectorXd lf = geo.measure * (Bm.transpose() * sigma);
                for (int c = 0; c < mesh.dim; ++c)
                    for (int v = 0; v < nv; ++v) J[c * n + el[v]] += lf[c * nv + v];
            }
        }
        return J;
    };

    // Normalize the worst jump by the peak one-sided flux over the whole
    // run, so vanishing local fluxes do not inflate the ratio.
    double jump = 0, mag = 0;
    for (int i = 0; i < traj.size(); ++i) {
        State s = traj.state(i);
        Vec JI = side_flux(s, true);
        Vec JII = side_flux(s, false);
        for (int node : inodes) {
            for (int c = 0; c < comps; ++c) {
                int idx = c * n + node;
                jump = std::max(jump, std::abs(JI[idx] + JII[idx]));
                mag = std::max(mag, std::max(std::abs(JI[idx]), std::abs(JII[idx])));
            }
        }
    }
    return mag > 0 ? jump / mag : 0.0;
}

void write_energy_csv(const EnergyReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os.precision(17);
    os << "t,E0,E1,EW1,D_grad,D_q";
    for (const auto& [name, vals] : report.margins) os << ',' << name;
    os << '\n';
    for (std::size_t i = 0; i < report.t.size(); ++i) {
        os << report.t[i] << ',' << report.E0[i] << ',' << report.E1[i] << ',' << report.EW1[i] << ','
           << report.D_grad[i] << ',' << report.D_q[i];
        for (const auto& [name, vals] : report.margins) os << ',' << vals[i];
        os << '\n';
    }
}

} // namespace westfem
