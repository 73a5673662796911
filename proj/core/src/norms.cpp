// Discrete analogs of the auxiliary constants (Poincare-Friedrichs, Sobolev
// embedding ratios, the Young constant) and all spatial/Bochner norms.

#include "westfem/norms.hpp"

#include "westfem/errors.hpp"
#include "westfem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace westfem {

double lp_norm(const Mesh& mesh, const Vec& field, double p, bool of_gradient) {
    if (!(p >= 1)) throw ConfigError("lp_norm: p must be >= 1");
    if (of_gradient) {
        if (std::isinf(p)) {
            double m = 0;
            for (int e = 0; e < mesh.element_count(); ++e)
                m = std::max(m, element_gradient(mesh, field, e).norm());
            return m;
        }
        double s = 0;
        for (int e = 0; e < mesh.element_count(); ++e)
            s += mesh.geometry[e].measure * std::pow(element_gradient(mesh, field, e).norm(), p);
        return std::pow(s, 1.0 / p);
    }
    if (std::isinf(p)) return field.size() ? field.cwiseAbs().maxCoeff() : 0.0;
    const auto& rule = simplex_rule(mesh.dim);
    double s = 0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        double vol = mesh.geometry[e].measure;
        for (int qp = 0; qp < rule.npts; ++qp) {
            double v = 0;
            for (int a = 0; a <= mesh.dim; ++a) v += rule.bary[qp][a] * field[el[a]];
            s += vol * rule.weight[qp] * std::pow(std::abs(v), p);
        }
    }
    return std::pow(s, 1.0 / p);
}

double spatial_norm(const Mesh& mesh, const Vec& field, const NormSpec& spec) {
    switch (spec.spatial) {
        case NormSpec::Spatial::Gradient: return lp_norm(mesh, field, spec.p, true);
        case NormSpec::Spatial::FieldSup:
            return lp_norm(mesh, field, std::numeric_limits<double>::infinity(), false);
        default: return lp_norm(mesh, field, spec.p, false);
    }
}

double poincare_constant(const Mesh& mesh) {
    SpMat K = interior_submatrix(mesh, stiffness_matrix(mesh));
    SpMat M = interior_submatrix(mesh, mass_matrix(mesh));
    if (K.rows() == 0) throw ConfigError("poincare_constant: mesh has no interior nodes");
    Eigen::SimplicialLDLT<SpMat> solver(K);
    if (solver.info() != Eigen::Success)
        throw SolverError(0.0, "poincare_constant: stiffness factorization failed");
    Vec x = Vec::Ones(K.rows());
    double lambda = 0, lambda_old = -1;
    const int max_iters = 10000;
    int it = 0;
    for (; it < max_iters; ++it) {
        Vec y = solver.solve(M * x);
        double ny = std::sqrt(y.dot(M * y));
        y /= ny;
        lambda = y.dot(K * y) / y.dot(M * y);
        if (it > 0 && std::abs(lambda - lambda_old) <= 1e-8 * std::abs(lambda)) {
            x = y;
            break;
        }
        lambda_old = lambda;
        x = y;
    }
    if (it == max_iters)
        throw SolverError(0.0, "poincare_constant: inverse iteration did not converge");
    return 1.0 / std::sqrt(lambda);
}

namespace {

// Piecewise-linear tent over the whole domain, peaked at the center.
Vec tent_candidate(const Mesh& mesh) {
    Point lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < mesh.dim; ++k) {
        lo[k] = hi[k] = mesh.nodes[0][k];
        for (const auto& p : mesh.nodes) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    }
    Vec f(mesh.node_count());
    for (int i = 0; i < mesh.node_count(); ++i) {
        double v = 1;
        for (int k = 0; k < mesh.dim; ++k) {
            const auto& p = mesh.nodes[i];
            v *= std::max(0.0, std::min(p[k] - lo[k], hi[k] - p[k]));
        }
        f[i] = v;
    }
    zero_boundary(mesh, f);
    return f;
}

} // namespace

double embedding_ratio_estimate(const Mesh& mesh, const NormSpec& source, const NormSpec& target,
                                int samples, std::uint64_t seed) {
    if (samples < 1) throw ConfigError("embedding_ratio_estimate: samples must be >= 1");
    double best = 0;
    auto consider = [&](const Vec& f) {
        double s = spatial_norm(mesh, f, source);
        if (s <= 0) return; // degenerate sample, skip
        best = std::max(best, spatial_norm(mesh, f, target) / s);
    };
    consider(tent_candidate(mesh));
    for (int s = 0; s < samples; ++s) {
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (s + 1));
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Vec f(mesh.node_count());
        for (int i = 0; i < mesh.node_count(); ++i) f[i] = dist(rng);
        zero_boundary(mesh, f);
        consider(f);
    }
    return best;
}

YoungConstants young_constant(double eps, double r) {
    if (!(eps > 0)) throw ConfigError("young_constant: eps must be positive");
    if (!(r > 1)) throw ConfigError("young_constant: r must be > 1");
    YoungConstants y{};
    y.nominal = (r - 1) * std::pow(r, r / (r - 1)) * std::pow(eps, -1.0 / (1.0 - r));
    y.sharp = (r - 1) * std::pow(r, -r / (r - 1)) * std::pow(eps, -1.0 / (r - 1));
    return y;
}

bool young_check(double C, double eps, double r, int grid) {
    double rp = r / (r - 1);
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            double a = 10.0 * i / (grid - 1);
            double b = 10.0 * j / (grid - 1);
            double lhs = a * b;
            double rhs = eps * std::pow(a, r) + C * std::pow(b, rp);
            if (lhs > rhs * (1 + 1e-12) + 1e-12) return false;
        }
    }
    return true;
}

double bochner_norm(const Mesh& mesh, const std::vector<double>& times, const std::vector<Vec>& fields,
                    const NormSpec& spec) {
    if (times.empty() || fields.size() != times.size())
        throw ConfigError("bochner_norm: empty or inconsistent trajectory");
    std::vector<double> vals(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) vals[i] = spatial_norm(mesh, fields[i], spec);
    if (spec.temporal == NormSpec::Temporal::Sup) return *std::max_element(vals.begin(), vals.end());
    double integral = 0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        double dt = times[i + 1] - times[i];
        integral += 0.5 * dt * (std::pow(vals[i], spec.time_p) + std::pow(vals[i + 1], spec.time_p));
    }
    return std::pow(integral, 1.0 / spec.time_p);
}

double triple_norm(const Mesh& mesh, const std::vector<double>& times, const std::vector<Vec>& u,
                   const std::vector<Vec>& ut) {
    return bochner_norm(mesh, times, ut, NormSpec::field(2)) +
           bochner_norm(mesh, times, u, NormSpec::gradient(2)) +
           bochner_norm(mesh, times, ut, NormSpec::gradient(2).in_time_lp(2));
}

} // namespace westfem
