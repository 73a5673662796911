// Piecewise-constant material coefficients and the coefficient conditions
// of the coupled models.

#include "westfem/material.hpp"

#include "westfem/errors.hpp"

#include <Eigen/Eigenvalues>

namespace westfem {

namespace {

void fill(Eigen::VectorXd& v, int n, double value) { v = Eigen::VectorXd::Constant(n, value); }

void assign(MaterialSpec& m, int e, const MaterialValues& v) {
    m.c2[e] = v.c2;
    m.b[e] = v.b;
    m.delta[e] = v.delta;
    m.k[e] = v.k;
    m.eps[e] = v.eps;
    m.p[e] = v.p;
    m.q[e] = v.q;
    m.rho[e] = v.rho;
    m.lambda[e] = v.lambda;
    m.mu[e] = v.mu;
    m.b_hat[e] = v.b_hat;
}

MaterialSpec empty_spec(int n) {
    MaterialSpec m;
    fill(m.c2, n, 1);
    fill(m.b, n, 0);
    fill(m.delta, n, 0);
    fill(m.k, n, 0);
    fill(m.eps, n, 0);
    fill(m.p, n, 1);
    fill(m.q, n, 1);
    fill(m.rho, n, 1);
    fill(m.lambda, n, 1);
    fill(m.mu, n, 0);
    fill(m.b_hat, n, 0);
    return m;
}

int voigt_size(int dim) { return dim == 3 ? 6 : 3; }

} // namespace

Eigen::MatrixXd voigt_stiffness(double lambda, double mu, int dim) {
    if (dim == 3) {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(6, 6);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) c(i, j) = lambda;
            c(i, i) = lambda + 2 * mu;
            c(i + 3, i + 3) = mu;
        }
        return c;
    }
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 3);
    c(0, 0) = c(1, 1) = lambda + 2 * mu;
    c(0, 1) = c(1, 0) = lambda;
    c(2, 2) = mu;
    return c;
}

Eigen::MatrixXd voigt_fluid_damping(double b_hat, int dim) {
    int n = voigt_size(dim);
    int nd = dim; // leading normal-strain block
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < nd; ++i)
        for (int j = 0; j < nd; ++j) b(i, j) = b_hat;
    return b;
}

Eigen::MatrixXd MaterialSpec::c_voigt(const Mesh& mesh, int e) const {
    if (!c_voigt_override.empty() && c_voigt_override[e].size() > 0) return c_voigt_override[e];
    return voigt_stiffness(lambda[e], mu[e], mesh.dim);
}

Eigen::MatrixXd MaterialSpec::b_voigt(const Mesh& mesh, int e) const {
    if (!b_voigt_override.empty() && b_voigt_override[e].size() > 0) return b_voigt_override[e];
    int n = voigt_size(mesh.dim);
    return voigt_fluid_damping(b_hat[e], mesh.dim) + b[e] * Eigen::MatrixXd::Identity(n, n);
}

MaterialSpec make_material(const Mesh& mesh, const MaterialValues& global) {
    MaterialSpec m = empty_spec(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) assign(m, e, global);
    validate_ranges(m);
    return m;
}

MaterialSpec make_material(const Mesh& mesh, const std::map<Tag, MaterialValues>& per_tag) {
    MaterialSpec m = empty_spec(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        auto it = per_tag.find(mesh.element_tags[e]);
        if (it == per_tag.end())
            throw ConfigError(std::string("no material values for tag ") + tag_name(mesh.element_tags[e]));
        assign(m, e, it->second);
    }
    validate_ranges(m);
    return m;
}

void validate_ranges(const MaterialSpec& m) {
    for (int e = 0; e < m.element_count(); ++e) {
        if (m.delta[e] < 0 || m.delta[e] > 1) throw ConfigError("material: delta must lie in [0,1]");
        if (m.p[e] < 1) throw ConfigError("material: p must be >= 1");
        if (m.q[e] < 1) throw ConfigError("material: q must be >= 1");
        if (!(m.rho[e] > 0)) throw ConfigError("material: rho must be positive");
        if (m.eps[e] < 0) throw ConfigError("material: eps must be nonnegative");
        if (m.b[e] < 0) throw ConfigError("material: b must be nonnegative");
        if (m.b_hat[e] < 0) throw ConfigError("material: b_hat must be nonnegative");
    }
}

void validate_acoustic(const Mesh& mesh, const MaterialSpec& m) {
    validate_ranges(m);
    (void)mesh;
    for (int e = 0; e < m.element_count(); ++e) {
        if (!(m.lambda[e] > 0)) throw ConfigError("acoustic coefficients: lambda needs a positive floor");
        if (!(m.rho[e] > 0)) throw ConfigError("acoustic coefficients: rho needs a positive floor");
        if (m.nonlinear_element(e)) {
            if (!(m.b[e] > 0))
                throw ConfigError("acoustic coefficients: b must be positive where k != 0 (element " +
                                  std::to_string(e) + ")");
            if (!(m.delta[e] > 0))
                throw ConfigError("acoustic coefficients: delta must be positive where k != 0 (element " +
                                  std::to_string(e) + ")");
        }
    }
}

void validate_elastic(const Mesh& mesh, const MaterialSpec& m) {
    validate_ranges(m);
    if (mesh.dim < 2) throw ConfigError("elastic model needs dim >= 2");
    for (int e = 0; e < m.element_count(); ++e) {
        Eigen::MatrixXd c = m.c_voigt(mesh, e);
        Eigen::MatrixXd b = m.b_voigt(mesh, e);
        double sym_c = (c - c.transpose()).norm();
        double sym_b = (b - b.transpose()).norm();
        if (sym_c > 1e-12 * (1 + c.norm()) || sym_b > 1e-12 * (1 + b.norm()))
            throw ConfigError("elastic coefficients: [c] and [b] must be symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_c(c), es_b(b);
        double cmin = es_c.eigenvalues().minCoeff();
        double bmin = es_b.eigenvalues().minCoeff();
        // The fluid tensor (mu = 0) is rank one, so [c] is only required to
        // be PSD with lambda > 0 there; positive definiteness holds on SOLID.
        if (cmin < -1e-12 * (1 + c.norm()))
            throw ConfigError("elastic coefficients: [c] must be positive semidefinite (element " +
                              std::to_string(e) + ")");
        if (!(m.lambda[e] > 0))
            throw ConfigError("elastic coefficients: lambda needs a positive floor");
        if (!((1 - m.delta[e]) * bmin > 0))
            throw ConfigError("elastic coefficients: (1-delta) lambda_min([b]) must be positive "
                              "everywhere (element " + std::to_string(e) + ")");
        if (m.nonlinear_element(e)) {
            if (!(bmin > 0) || !(m.delta[e] > 0) || !(m.delta[e] < 1))
                throw ConfigError("elastic coefficients: on the nonlinear region [b] must be positive "
                                  "definite and delta in (0,1) (element " + std::to_string(e) + ")");
        }
        Tag t = mesh.element_tags[e];
        if (t == Tag::Fluid && m.mu[e] != 0)
            throw ConfigError("elastic coefficients: mu must vanish on FLUID elements");
        if (t == Tag::Solid) {
            if (!(m.mu[e] > 0))
                throw ConfigError("elastic coefficients: mu must be positive on SOLID elements");
            if (!(cmin > 0))
                throw ConfigError("elastic coefficients: [c] must be positive definite on SOLID "
                                  "elements (element " + std::to_string(e) + ")");
        }
    }
}

} // namespace westfem
