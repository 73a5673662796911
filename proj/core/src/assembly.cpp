// P1 finite element assembly for all operators of the five formulations:
// weighted mass, stiffness, q-viscosity and p-Laplace damping with exact
// Jacobians, quadratic source, Voigt-notation elasticity, and the Dirichlet
// Poisson solve recovering the Helmholtz scalar potential.

#include "westfem/assembly.hpp"

#include "westfem/errors.hpp"
#include "westfem/quadrature.hpp"

#include <cmath>

namespace westfem {

namespace {

Eigen::Vector3d to_eigen(const Point& p) { return {p[0], p[1], p[2]}; }

double reg_norm(const Eigen::Vector3d& g, double eta) { return std::sqrt(g.squaredNorm() + eta * eta); }

// int phi_a phi_b over an element of unit measure.
double phi_phi(int dim, int a, int b) {
    std::array<int, 4> pw{0, 0, 0, 0};
    pw[a]++;
    pw[b]++;
    return simplex_monomial_integral(dim, pw);
}

// int phi_a phi_b phi_c over an element of unit measure.
double phi3(int dim, int a, int b, int c) {
    std::array<int, 4> pw{0, 0, 0, 0};
    pw[a]++;
    pw[b]++;
    pw[c]++;
    return simplex_monomial_integral(dim, pw);
}

} // namespace

Eigen::Vector3d monotone_flux(const Eigen::Vector3d& g, double q, double eta) {
    return std::pow(reg_norm(g, eta), q - 1) * g;
}

Eigen::Matrix3d monotone_flux_jacobian(const Eigen::Vector3d& g, double q, double eta) {
    double n = reg_norm(g, eta);
    return std::pow(n, q - 1) * Eigen::Matrix3d::Identity() +
           (q - 1) * std::pow(n, q - 3) * g * g.transpose();
}

Eigen::Vector3d element_gradient(const Mesh& mesh, const Vec& field, int e) {
    const auto& el = mesh.elements[e];
    const auto& geo = mesh.geometry[e];
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (int v = 0; v <= mesh.dim; ++v) g += field[el[v]] * to_eigen(geo.grad[v]);
    return g;
}

SpMat mass_matrix(const Mesh& mesh) {
    return mass_matrix_elementwise(mesh, Vec::Ones(mesh.element_count()));
}

SpMat mass_matrix_elementwise(const Mesh& mesh, const Vec& weight) {
    const int nv = mesh.dim + 1;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.element_count() * nv * nv);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        double vol = mesh.geometry[e].measure;
        for (int a = 0; a < nv; ++a)
            for (int b = 0; b < nv; ++b)
                trip.emplace_back(el[a], el[b], weight[e] * vol * phi_phi(mesh.dim, a, b));
    }
    SpMat M(mesh.node_count(), mesh.node_count());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

SpMat mass_matrix_nodal(const Mesh& mesh, const Vec& weight) {
    const int nv = mesh.dim + 1;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.element_count() * nv * nv);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        double vol = mesh.geometry[e].measure;
        for (int a = 0; a < nv; ++a) {
            for (int b = 0; b < nv; ++b) {
                double s = 0;
                for (int c = 0; c < nv; ++c) s += weight[el[c]] * phi3(mesh.dim, a, b, c);
                trip.emplace_back(el[a], el[b], vol * s);
            }
        }
    }
    SpMat M(mesh.node_count(), mesh.node_count());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

SpMat stiffness_matrix(const Mesh& mesh) {
    return stiffness_matrix(mesh, Vec::Ones(mesh.element_count()));
}

SpMat stiffness_matrix(const Mesh& mesh, const Vec& coeff) {
    const int nv = mesh.dim + 1;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.element_count() * nv * nv);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        const auto& geo = mesh.geometry[e];
        for (int a = 0; a < nv; ++a) {
            Eigen::Vector3d ga = to_eigen(geo.grad[a]);
            for (int b = 0; b < nv; ++b)
                trip.emplace_back(el[a], el[b], coeff[e] * geo.measure * ga.dot(to_eigen(geo.grad[b])));
        }
    }
    SpMat K(mesh.node_count(), mesh.node_count());
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

Vec qdamping_residual(const Mesh& mesh, const MaterialSpec& mat, const Vec& v) {
    Vec r = Vec::Zero(mesh.node_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        const auto& geo = mesh.geometry[e];
        Eigen::Vector3d g = element_gradient(mesh, v, e);
        Eigen::Vector3d flux =
            mat.b[e] * ((1 - mat.delta[e]) * g + mat.delta[e] * monotone_flux(g, mat.q[e]));
        for (int a = 0; a <= mesh.dim; ++a) r[el[a]] += geo.measure * flux.dot(to_eigen(geo.grad[a]));
    }
    return r;
}

SpMat qdamping_jacobian(const Mesh& mesh, const MaterialSpec& mat, const Vec& v) {
    const int nv = mesh.dim + 1;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.element_count() * nv * nv);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        const auto& geo = mesh.geometry[e];
        Eigen::Vector3d g = element_gradient(mesh, v, e);
        Eigen::Matrix3d D = mat.b[e] * ((1 - mat.delta[e]) * Eigen::Matrix3d::Identity() +
                                        mat.delta[e] * monotone_flux_jacobian(g, mat.q[e]));
        for (int a = 0; a < nv; ++a) {
            Eigen::Vector3d ga = to_eigen(geo.grad[a]);
            for (int b = 0; b < nv; ++b)
                trip.emplace_back(el[a], el[b], geo.measure * ga.dot(D * to_eigen(geo.grad[b])));
        }
    }
    SpMat J(mesh.node_count(), mesh.node_count());
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

Vec plaplace_residual(const Mesh& mesh, const MaterialSpec& mat, const Vec& u) {
    Vec r = Vec::Zero(mesh.node_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        const auto& geo = mesh.geometry[e];
        Eigen::Vector3d g = element_gradient(mesh, u, e);
        Eigen::Vector3d flux = mat.c2[e] * (g + mat.eps[e] * monotone_flux(g, mat.p[e]));
        for (int a = 0; a <= mesh.dim; ++a) r[el[a]] += geo.measure * flux.dot(to_eigen(geo.grad[a]));
    }
    return r;
}

SpMat plaplace_jacobian(const Mesh& mesh, const MaterialSpec& mat, const Vec& u) {
    const int nv = mesh.dim + 1;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.element_count() * nv * nv);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        const auto& geo = mesh.geometry[e];
        Eigen::Vector3d g = element_gradient(mesh, u, e);
        Eigen::Matrix3d D = mat.c2[e] * (Eigen::Matrix3d::Identity() +
                                         mat.eps[e] * monotone_flux_jacobian(g, mat.p[e]));
        for (int a = 0; a < nv; ++a) {
            Eigen::Vector3d ga = to_eigen(geo.grad[a]);
            for (int b = 0; b < nv; ++b)
                trip.emplace_back(el[a], el[b], geo.measure * ga.dot(D * to_eigen(geo.grad[b])));
        }
    }
    SpMat J(mesh.node_count(), mesh.node_count());
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

Vec quadratic_load(const Mesh& mesh, const Vec& coeff, const Vec& field) {
    const int nv = mesh.dim + 1;
    Vec g = Vec::Zero(mesh.node_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        if (coeff[e] == 0) continue;
        const auto& el = mesh.elements[e];
        double vol = mesh.geometry[e].measure;
        for (int a = 0; a < nv; ++a) {
            double s = 0;
            for (int m = 0; m < nv; ++m)
                for (int n = 0; n < nv; ++n) {
                    std::array<int, 4> pw{0, 0, 0, 0};
                    pw[a]++;
                    pw[m]++;
                    pw[n]++;
                    s += field[el[m]] * field[el[n]] * simplex_monomial_integral(mesh.dim, pw);
                }
            g[el[a]] += coeff[e] * vol * s;
        }
    }
    return g;
}

Vec source_term(const Mesh& mesh, const MaterialSpec& mat, const Vec& ut) {
    return quadratic_load(mesh, 2.0 * mat.k, ut);
}

SpMat triple_mass_matrix(const Mesh& mesh, const Vec& coeff, const Vec& nodal) {
    const int nv = mesh.dim + 1;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.element_count() * nv * nv);
    for (int e = 0; e < mesh.element_count(); ++e) {
        if (coeff[e] == 0) continue;
        const auto& el = mesh.elements[e];
        double vol = mesh.geometry[e].measure;
        for (int a = 0; a < nv; ++a)
            for (int b = 0; b < nv; ++b) {
                double s = 0;
                for (int c = 0; c < nv; ++c) s += nodal[el[c]] * phi3(mesh.dim, a, b, c);
                trip.emplace_back(el[a], el[b], coeff[e] * vol * s);
            }
    }
    SpMat M(mesh.node_count(), mesh.node_count());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

Vec forcing_vector(const Mesh& mesh, const std::function<double(const Point&, double)>& f, double t) {
    const auto& rule = simplex_rule(mesh.dim);
    Vec g = Vec::Zero(mesh.node_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        double vol = mesh.geometry[e].measure;
        for (int qp = 0; qp < rule.npts; ++qp) {
            Point x{0, 0, 0};
            for (int v = 0; v <= mesh.dim; ++v)
                for (int c = 0; c < 3; ++c) x[c] += rule.bary[qp][v] * mesh.nodes[el[v]][c];
            double fv = f(x, t);
            for (int v = 0; v <= mesh.dim; ++v)
                g[el[v]] += vol * rule.weight[qp] * rule.bary[qp][v] * fv;
        }
    }
    return g;
}

Vec alpha_laplace_residual(const Mesh& mesh, const Vec& alpha, const Vec& u) {
    Vec r = Vec::Zero(mesh.node_count());
    const int nv = mesh.dim + 1;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        const auto& geo = mesh.geometry[e];
        Eigen::Vector3d gu = element_gradient(mesh, u, e);
        Eigen::Vector3d galpha = element_gradient(mesh, alpha, e);
        double alpha_mean = 0;
        for (int v = 0; v < nv; ++v) alpha_mean += alpha[el[v]];
        alpha_mean /= nv;
        double adv = galpha.dot(gu);
        for (int a = 0; a < nv; ++a)
            r[el[a]] += geo.measure * (alpha_mean * gu.dot(to_eigen(geo.grad[a])) + adv / nv);
    }
    return r;
}

SpMat alpha_laplace_matrix_u(const Mesh& mesh, const Vec& alpha) {
    const int nv = mesh.dim + 1;
    std::vector<Eigen::Triplet<double>> trip;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        const auto& geo = mesh.geometry[e];
        Eigen::Vector3d galpha = element_gradient(mesh, alpha, e);
        double alpha_mean = 0;
        for (int v = 0; v < nv; ++v) alpha_mean += alpha[el[v]];
        alpha_mean /= nv;
        for (int a = 0; a < nv; ++a) {
            Eigen::Vector3d ga = to_eigen(geo.grad[a]);
            for (int b = 0; b < nv; ++b) {
                Eigen::Vector3d gb = to_eigen(geo.grad[b]);
                trip.emplace_back(el[a], el[b],
                                  geo.measure * (alpha_mean * ga.dot(gb) + galpha.dot(gb) / nv));
            }
        }
    }
    SpMat A(mesh.node_count(), mesh.node_count());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

SpMat alpha_laplace_matrix_alpha(const Mesh& mesh, const Vec& u) {
    const int nv = mesh.dim + 1;
    std::vector<Eigen::Triplet<double>> trip;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        const auto& geo = mesh.geometry[e];
        Eigen::Vector3d gu = element_gradient(mesh, u, e);
        for (int a = 0; a < nv; ++a) {
            Eigen::Vector3d ga = to_eigen(geo.grad[a]);
            for (int b = 0; b < nv; ++b) {
                Eigen::Vector3d gb = to_eigen(geo.grad[b]);
                trip.emplace_back(el[a], el[b],
                                  geo.measure * (gu.dot(ga) / nv + gb.dot(gu) / nv));
            }
        }
    }
    SpMat A(mesh.node_count(), mesh.node_count());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

int vector_dofs(const Mesh& mesh) { return mesh.dim * mesh.node_count(); }

SpMat vector_mass_matrix(const Mesh& mesh, const Vec& rho) {
    const int n = mesh.node_count();
    const int nv = mesh.dim + 1;
    std::vector<Eigen::Triplet<double>> trip;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        double vol = mesh.geometry[e].measure;
        for (int a = 0; a < nv; ++a)
            for (int b = 0; b < nv; ++b) {
                double m = rho[e] * vol * phi_phi(mesh.dim, a, b);
                for (int c = 0; c < mesh.dim; ++c) trip.emplace_back(c * n + el[a], c * n + el[b], m);
            }
    }
    SpMat M(vector_dofs(mesh), vector_dofs(mesh));
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

Eigen::MatrixXd voigt_element_matrix(const Mesh& mesh, int e) {
    const int d = mesh.dim;
    const int nv = d + 1;
    const int rows = d == 3 ? 6 : 3;
    const auto& geo = mesh.geometry[e];
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(rows, d * nv);
    for (int v = 0; v < nv; ++v) {
        Eigen::Vector3d g = to_eigen(geo.grad[v]);
        if (d == 3) {
            B(0, 0 * nv + v) = g[0];
            B(1, 1 * nv + v) = g[1];
            B(2, 2 * nv + v) = g[2];
            B(3, 1 * nv + v) = g[2];
            B(3, 2 * nv + v) = g[1];
            B(4, 0 * nv + v) = g[2];
            B(4, 2 * nv + v) = g[0];
            B(5, 0 * nv + v) = g[1];
            B(5, 1 * nv + v) = g[0];
        } else {
            B(0, 0 * nv + v) = g[0];
            B(1, 1 * nv + v) = g[1];
            B(2, 0 * nv + v) = g[1];
            B(2, 1 * nv + v) = g[0];
        }
    }
    return B;
}

namespace {

Eigen::VectorXd local_vector_dofs(const Mesh& mesh, const Vec& U, int e) {
    const int d = mesh.dim;
    const int nv = d + 1;
    const int n = mesh.node_count();
    Eigen::VectorXd loc(d * nv);
    const auto& el = mesh.elements[e];
    for (int c = 0; c < d; ++c)
        for (int v = 0; v < nv; ++v) loc[c * nv + v] = U[c * n + el[v]];
    return loc;
}

} // namespace

std::vector<Eigen::VectorXd> voigt_apply(const Mesh& mesh, const Vec& U) {
    if (mesh.dim < 2) throw ConfigError("voigt_apply: the elastic model needs dim >= 2");
    std::vector<Eigen::VectorXd> out(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e)
        out[e] = voigt_element_matrix(mesh, e) * local_vector_dofs(mesh, U, e);
    return out;
}

std::pair<Vec, Vec> elastic_residuals(const Mesh& mesh, const MaterialSpec& mat, const Vec& alpha_elem,
                                      const Vec& U, const Vec& Ut) {
    const int d = mesh.dim;
    const int nv = d + 1;
    const int n = mesh.node_count();
    Vec rs = Vec::Zero(vector_dofs(mesh));
    Vec rd = Vec::Zero(vector_dofs(mesh));
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        double vol = mesh.geometry[e].measure;
        Eigen::MatrixXd B = voigt_element_matrix(mesh, e);
        Eigen::VectorXd strain = B * local_vector_dofs(mesh, U, e);
        Eigen::VectorXd rate = B * local_vector_dofs(mesh, Ut, e);
        double nrate = std::sqrt(rate.squaredNorm() + kGradEta * kGradEta);
        double w = (1 - mat.delta[e]) + mat.delta[e] * std::pow(nrate, mat.q[e] - 1);
        Eigen::VectorXd ls = vol * alpha_elem[e] * (B.transpose() * (mat.c_voigt(mesh, e) * strain));
        Eigen::VectorXd ld = vol * w * (B.transpose() * (mat.b_voigt(mesh, e) * rate));
        for (int c = 0; c < d; ++c)
            for (int v = 0; v < nv; ++v) {
                rs[c * n + el[v]] += ls[c * nv + v];
                rd[c * n + el[v]] += ld[c * nv + v];
            }
    }
    return {rs, rd};
}

SpMat elastic_stiffness_matrix(const Mesh& mesh, const MaterialSpec& mat, const Vec& alpha_elem) {
    const int d = mesh.dim;
    const int nv = d + 1;
    const int n = mesh.node_count();
    std::vector<Eigen::Triplet<double>> trip;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        double vol = mesh.geometry[e].measure;
        Eigen::MatrixXd B = voigt_element_matrix(mesh, e);
        Eigen::MatrixXd Ke = vol * alpha_elem[e] * (B.transpose() * mat.c_voigt(mesh, e) * B);
        for (int ca = 0; ca < d; ++ca)
            for (int va = 0; va < nv; ++va)
                for (int cb = 0; cb < d; ++cb)
                    for (int vb = 0; vb < nv; ++vb)
                        trip.emplace_back(ca * n + el[va], cb * n + el[vb], Ke(ca * nv + va, cb * nv + vb));
    }
    SpMat K(vector_dofs(mesh), vector_dofs(mesh));
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

SpMat elastic_damping_jacobian(const Mesh& mesh, const MaterialSpec& mat, const Vec& Ut) {
    const int d = mesh.dim;
    const int nv = d + 1;
    const int n = mesh.node_count();
    std::vector<Eigen::Triplet<double>> trip;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        double vol = mesh.geometry[e].measure;
        Eigen::MatrixXd B = voigt_element_matrix(mesh, e);
        Eigen::VectorXd rate = B * local_vector_dofs(mesh, Ut, e);
        Eigen::MatrixXd bv = mat.b_voigt(mesh, e);
        double nrate = std::sqrt(rate.squaredNorm() + kGradEta * kGradEta);
        double w = (1 - mat.delta[e]) + mat.delta[e] * std::pow(nrate, mat.q[e] - 1);
        // d/d(rate) [ w(|rate|) [b] rate ] = w [b] + delta (q-1)|rate|^(q-3) ([b] rate) rate^T
        Eigen::MatrixXd D = w * bv + mat.delta[e] * (mat.q[e] - 1) * std::pow(nrate, mat.q[e] - 3) *
                                         (bv * rate) * rate.transpose();
        Eigen::MatrixXd Ke = vol * (B.transpose() * D * B);
        for (int ca = 0; ca < d; ++ca)
            for (int va = 0; va < nv; ++va)
                for (int cb = 0; cb < d; ++cb)
                    for (int vb = 0; vb < nv; ++vb)
                        trip.emplace_back(ca * n + el[va], cb * n + el[vb], Ke(ca * nv + va, cb * nv + vb));
    }
    SpMat J(vector_dofs(mesh), vector_dofs(mesh));
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

SpMat elastic_stiffness_dalpha(const Mesh& mesh, const MaterialSpec& mat, const Vec& U) {
    const int d = mesh.dim;
    const int nv = d + 1;
    const int n = mesh.node_count();
    std::vector<Eigen::Triplet<double>> trip;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        double vol = mesh.geometry[e].measure;
        Eigen::MatrixXd B = voigt_element_matrix(mesh, e);
        Eigen::VectorXd col = vol * (B.transpose() * (mat.c_voigt(mesh, e) * (B * local_vector_dofs(mesh, U, e))));
        for (int c = 0; c < d; ++c)
            for (int v = 0; v < nv; ++v) trip.emplace_back(c * n + el[v], e, col[c * nv + v]);
    }
    SpMat A(vector_dofs(mesh), mesh.element_count());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

double voigt_lp_norm(const Mesh& mesh, const Vec& U, double pnorm, const Tag* restrict_tag) {
    auto strains = voigt_apply(mesh, U);
    if (std::isinf(pnorm)) {
        double m = 0;
        for (int e = 0; e < mesh.element_count(); ++e) {
            if (restrict_tag && mesh.element_tags[e] != *restrict_tag) continue;
            m = std::max(m, strains[e].norm());
        }
        return m;
    }
    double s = 0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        if (restrict_tag && mesh.element_tags[e] != *restrict_tag) continue;
        s += mesh.geometry[e].measure * std::pow(strains[e].norm(), pnorm);
    }
    return std::pow(s, 1.0 / pnorm);
}

void zero_boundary(const Mesh& mesh, Vec& v, int components) {
    const int n = mesh.node_count();
    for (int c = 0; c < components; ++c)
        for (int i : mesh.boundary_nodes) v[c * n + i] = 0;
}

void zero_boundary_rows(const Mesh& mesh, Vec& r, int components) { zero_boundary(mesh, r, components); }

void eliminate_dirichlet(const Mesh& mesh, SpMat& A, int components) {
    const int n = mesh.node_count();
    std::vector<char> fixed(components * n, 0);
    for (int c = 0; c < components; ++c)
        for (int i : mesh.boundary_nodes) fixed[c * n + i] = 1;
    for (int col = 0; col < A.outerSize(); ++col) {
        for (SpMat::InnerIterator it(A, col); it; ++it) {
            if (fixed[it.row()] || fixed[it.col()]) it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
        }
    }
    A.prune(0.0);
}

std::vector<int> interior_nodes(const Mesh& mesh) {
    std::vector<int> out;
    for (int i = 0; i < mesh.node_count(); ++i)
        if (!mesh.is_boundary(i)) out.push_back(i);
    return out;
}

SpMat interior_submatrix(const Mesh& mesh, const SpMat& A) {
    auto interior = interior_nodes(mesh);
    std::vector<int> map(mesh.node_count(), -1);
    for (int i = 0; i < static_cast<int>(interior.size()); ++i) map[interior[i]] = i;
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < A.outerSize(); ++col)
        for (SpMat::InnerIterator it(A, col); it; ++it)
            if (map[it.row()] >= 0 && map[it.col()] >= 0)
                trip.emplace_back(map[it.row()], map[it.col()], it.value());
    SpMat S(interior.size(), interior.size());
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
}

PoissonSolver::PoissonSolver(const Mesh& mesh) : mesh_(&mesh) {
    interior_ = interior_nodes(mesh);
    full_to_interior_.assign(mesh.node_count(), -1);
    for (int i = 0; i < static_cast<int>(interior_.size()); ++i) full_to_interior_[interior_[i]] = i;
    SpMat K = interior_submatrix(mesh, stiffness_matrix(mesh));
    factorization_.compute(K);
    if (factorization_.info() != Eigen::Success)
        throw SolverError(0.0, "poisson: factorization of the interior stiffness failed");

    // Weak divergence load: row i holds int phi-gradients against each
    // component block of U.
    const int d = mesh.dim;
    const int n = mesh.node_count();
    const int nv = d + 1;
    std::vector<Eigen::Triplet<double>> trip;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        const auto& geo = mesh.geometry[e];
        double vol = geo.measure;
        for (int a = 0; a < nv; ++a) {
            Eigen::Vector3d ga = to_eigen(geo.grad[a]);
            for (int c = 0; c < d; ++c)
                for (int b = 0; b < nv; ++b)
                    trip.emplace_back(el[a], c * n + el[b], vol * ga[c] / nv);
        }
    }
    div_matrix_.resize(n, d * n);
    div_matrix_.setFromTriplets(trip.begin(), trip.end());
}

Vec PoissonSolver::solve_rhs(const Vec& rhs_full) const {
    Eigen::VectorXd rhs(interior_.size());
    for (int i = 0; i < static_cast<int>(interior_.size()); ++i) rhs[i] = rhs_full[interior_[i]];
    Eigen::VectorXd sol = factorization_.solve(rhs);
    Vec psi = Vec::Zero(mesh_->node_count());
    for (int i = 0; i < static_cast<int>(interior_.size()); ++i) psi[interior_[i]] = sol[i];
    return psi;
}

Vec PoissonSolver::solve_divergence(const Vec& U) const { return solve_rhs(div_matrix_ * U); }

Vec poisson_solve(const Mesh& mesh, const Vec& U) { return PoissonSolver(mesh).solve_divergence(U); }

} // namespace westfem
