// The five formulations behind one residual/Jacobian interface. All
// Jacobians are exact derivatives of the assembled residuals, including the
// k-coupling blocks and, for the elastic model, the chain through the
// Poisson solve defining the coefficient 1/(1 - 2k psi_t).

#include "westfem/model.hpp"

#include "westfem/errors.hpp"

#include <cmath>

namespace westfem {

const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::PressureViscosity: return "PRESSURE_VISCOSITY";
        case ModelKind::PressurePLaplace: return "PRESSURE_PLAPLACE";
        case ModelKind::PotentialViscosity: return "POTENTIAL_VISCOSITY";
        case ModelKind::AcousticCoupled: return "ACOUSTIC_COUPLED";
        case ModelKind::ElasticCoupled: return "ELASTIC_COUPLED";
    }
    return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "PRESSURE_VISCOSITY") return ModelKind::PressureViscosity;
    if (name == "PRESSURE_PLAPLACE") return ModelKind::PressurePLaplace;
    if (name == "POTENTIAL_VISCOSITY") return ModelKind::PotentialViscosity;
    if (name == "ACOUSTIC_COUPLED") return ModelKind::AcousticCoupled;
    if (name == "ELASTIC_COUPLED") return ModelKind::ElasticCoupled;
    throw ConfigError("unknown model kind '" + name + "'");
}

Model::Model(ModelKind kind, Mesh mesh, MaterialSpec mat, ModelOptions opts)
    : kind_(kind), mesh_(std::move(mesh)), mat_(std::move(mat)), opts_(opts) {
    if (mat_.element_count() != mesh_.element_count())
        throw ConfigError("model: material and mesh element counts differ");
    c2_const_ = mat_.c2[0];
    k_const_ = mat_.k[0];
    inv_lambda_ = Vec::Ones(mesh_.element_count());

    switch (kind_) {
        case ModelKind::PressureViscosity:
        case ModelKind::PressurePLaplace:
            validate_ranges(mat_);
            stiff_main_ = stiffness_matrix(mesh_, mat_.c2);
            source_coeff_ = 2.0 * mat_.k;
            break;
        case ModelKind::PotentialViscosity:
            validate_ranges(mat_);
            if ((mat_.c2.array() != mat_.c2[0]).any() || (mat_.k.array() != mat_.k[0]).any())
                throw ConfigError("potential model: c2 and k must be spatially constant");
            source_coeff_ = Vec::Zero(mesh_.element_count());
            break;
        case ModelKind::AcousticCoupled:
            validate_acoustic(mesh_, mat_);
            inv_lambda_ = mat_.lambda.cwiseInverse();
            stiff_main_ = stiffness_matrix(mesh_, Vec(mat_.rho.cwiseInverse()));
            source_coeff_ = 2.0 * mat_.k.cwiseProduct(inv_lambda_);
            break;
        case ModelKind::ElasticCoupled: {
            validate_elastic(mesh_, mat_);
            mass_rho_ = vector_mass_matrix(mesh_, mat_.rho);
            poisson_ = std::make_shared<PoissonSolver>(mesh_);
            // Dense sensitivity d psi / d U; desk-scale meshes keep it small.
            auto interior = interior_nodes(mesh_);
            Eigen::MatrixXd Bfull = Eigen::MatrixXd(poisson_->divergence_matrix());
            Eigen::MatrixXd Bint(interior.size(), vector_dofs(mesh_));
            for (int i = 0; i < static_cast<int>(interior.size()); ++i) Bint.row(i) = Bfull.row(interior[i]);
            Eigen::SimplicialLDLT<SpMat> ldlt(interior_submatrix(mesh_, stiffness_matrix(mesh_)));
            Eigen::MatrixXd Z = ldlt.solve(Bint);
            poisson_sensitivity_ = Eigen::MatrixXd::Zero(mesh_.node_count(), vector_dofs(mesh_));
            for (int i = 0; i < static_cast<int>(interior.size()); ++i)
                poisson_sensitivity_.row(interior[i]) = Z.row(i);
            break;
        }
    }
    if (kind_ != ModelKind::ElasticCoupled) {
        mass_plain_ = mass_matrix(mesh_);
        if (kind_ == ModelKind::PressurePLaplace) stiff_bdamp_ = stiffness_matrix(mesh_, mat_.b);
    }
}

const PoissonSolver& Model::poisson() const {
    if (!poisson_) throw ConfigError("poisson solve is only defined for the elastic model");
    return *poisson_;
}

Vec Model::recover_potential(const Vec& U) const { return poisson().solve_divergence(U); }

void Model::check_margin(double margin, double t) const {
    if (margin <= opts_.degeneracy_floor)
        throw DegeneracyError(t, margin,
                              "degeneracy: margin " + std::to_string(margin) + " at t = " +
                                  std::to_string(t) + " fell to the floor " +
                                  std::to_string(opts_.degeneracy_floor));
}

double Model::degeneracy_margin(const State& s) const {
    double m = 1.0;
    auto scan = [&](const Vec& field) {
        for (int e = 0; e < mesh_.element_count(); ++e)
            for (int v = 0; v <= mesh_.dim; ++v)
                m = std::min(m, 1 - 2 * mat_.k[e] * field[mesh_.elements[e][v]]);
    };
    switch (kind_) {
        case ModelKind::PressureViscosity:
        case ModelKind::PressurePLaplace:
        case ModelKind::AcousticCoupled: scan(s.u); break;
        case ModelKind::PotentialViscosity: scan(s.ut); break;
        case ModelKind::ElasticCoupled: scan(poisson_->solve_divergence(s.ut)); break;
    }
    return m;
}

SpMat Model::weighted_mass(const Vec& u) const {
    // (1/lambda)(1 - 2ku) against phi_i phi_j, exact.
    SpMat M = mass_matrix_elementwise(mesh_, inv_lambda_);
    if (mat_.k.any()) M += triple_mass_matrix(mesh_, Vec(-2.0 * mat_.k.cwiseProduct(inv_lambda_)), u);
    return M;
}

Vec Model::alpha_nodal_from(const Vec& ut) const {
    Vec alpha(mesh_.node_count());
    for (int i = 0; i < mesh_.node_count(); ++i) alpha[i] = c2_const_ / (1 - 2 * k_const_ * ut[i]);
    return alpha;
}

Vec Model::alpha_elem_from(const Vec& ut, double* margin_out) const {
    Vec psit = poisson_->solve_divergence(ut);
    Vec alpha(mesh_.element_count());
    double margin = 1.0;
    const int nv = mesh_.dim + 1;
    for (int e = 0; e < mesh_.element_count(); ++e) {
        double a = 0;
        for (int v = 0; v < nv; ++v) {
            double factor = 1 - 2 * mat_.k[e] * psit[mesh_.elements[e][v]];
            margin = std::min(margin, factor);
            a += 1.0 / factor;
        }
        alpha[e] = a / nv;
    }
    if (margin_out) *margin_out = margin;
    return alpha;
}

Vec Model::residual(const State& s, const Vec& utt) const {
    check_margin(degeneracy_margin(s), s.t);
    Vec r;
    switch (kind_) {
        case ModelKind::PressureViscosity:
        case ModelKind::AcousticCoupled:
            r = weighted_mass(s.u) * utt + stiff_main_ * s.u + qdamping_residual(mesh_, mat_, s.ut) -
                quadratic_load(mesh_, source_coeff_, s.ut);
            break;
        case ModelKind::PressurePLaplace:
            r = weighted_mass(s.u) * utt + plaplace_residual(mesh_, mat_, s.u) + stiff_bdamp_ * s.ut -
                quadratic_load(mesh_, source_coeff_, s.ut);
            break;
        case ModelKind::PotentialViscosity:
            r = mass_plain_ * utt + alpha_laplace_residual(mesh_, alpha_nodal_from(s.ut), s.u) +
                qdamping_residual(mesh_, mat_, s.ut);
            break;
        case ModelKind::ElasticCoupled: {
            Vec alpha = alpha_elem_from(s.ut, nullptr);
            auto [rs, rd] = elastic_residuals(mesh_, mat_, alpha, s.u, s.ut);
            r = mass_rho_ * utt + rs + rd;
            break;
        }
    }
    if (forcing) {
        if (components() != 1) throw ConfigError("forcing is supported for scalar kinds only");
        r -= forcing_vector(mesh_, forcing, s.t);
    }
    return r;
}

Jacobians Model::jacobians(const State& s, const Vec& utt) const {
    check_margin(degeneracy_margin(s), s.t);
    Jacobians J;
    const Vec kcoeff = -2.0 * mat_.k.cwiseProduct(inv_lambda_);
    switch (kind_) {
        case ModelKind::PressureViscosity:
        case ModelKind::AcousticCoupled:
            J.d_utt = weighted_mass(s.u);
            J.d_ut = qdamping_jacobian(mesh_, mat_, s.ut) -
                     2.0 * triple_mass_matrix(mesh_, source_coeff_, s.ut);
            J.d_u = stiff_main_ + triple_mass_matrix(mesh_, kcoeff, utt);
            break;
        case ModelKind::PressurePLaplace:
            J.d_utt = weighted_mass(s.u);
            J.d_ut = stiff_bdamp_ - 2.0 * triple_mass_matrix(mesh_, source_coeff_, s.ut);
            J.d_u = plaplace_jacobian(mesh_, mat_, s.u) + triple_mass_matrix(mesh_, kcoeff, utt);
            break;
        case ModelKind::PotentialViscosity: {
            J.d_utt = mass_plain_;
            Vec alpha = alpha_nodal_from(s.ut);
            J.d_u = alpha_laplace_matrix_u(mesh_, alpha);
            Vec dalpha(mesh_.node_count());
            for (int i = 0; i < mesh_.node_count(); ++i) {
                double f = 1 - 2 * k_const_ * s.ut[i];
                dalpha[i] = 2 * k_const_ * c2_const_ / (f * f);
            }
            SpMat A_alpha = alpha_laplace_matrix_alpha(mesh_, s.u);
            J.d_ut = qdamping_jacobian(mesh_, mat_, s.ut) + SpMat(A_alpha * dalpha.asDiagonal());
            break;
        }
        case ModelKind::ElasticCoupled: {
            J.d_utt = mass_rho_;
            Vec psit = poisson_->solve_divergence(s.ut);
            Vec alpha = alpha_elem_from(s.ut, nullptr);
            J.d_u = elastic_stiffness_matrix(mesh_, mat_, alpha);
            // d alpha_e / d psit at the element vertices, then the dense
            // chain through the Poisson sensitivity.
            const int nv = mesh_.dim + 1;
            std::vector<Eigen::Triplet<double>> trip;
            for (int e = 0; e < mesh_.element_count(); ++e) {
                if (mat_.k[e] == 0) continue;
                for (int v = 0; v < nv; ++v) {
                    int node = mesh_.elements[e][v];
                    double f = 1 - 2 * mat_.k[e] * psit[node];
                    trip.emplace_back(e, node, 2 * mat_.k[e] / (f * f) / nv);
                }
            }
            SpMat dAlpha(mesh_.element_count(), mesh_.node_count());
            dAlpha.setFromTriplets(trip.begin(), trip.end());
            SpMat S_dalpha = elastic_stiffness_dalpha(mesh_, mat_, s.u);
            J.d_ut = elastic_damping_jacobian(mesh_, mat_, s.ut);
            if (dAlpha.nonZeros() > 0) {
                Eigen::MatrixXd coupling = (S_dalpha * dAlpha) * poisson_sensitivity_;
                J.d_ut += coupling.sparseView(1.0, 0.0);
            }
            break;
        }
    }
    return J;
}

FrozenCoefficients Model::frozen_coefficients(const State& v) const {
    FrozenCoefficients fc;
    fc.v = v.u;
    fc.vt = v.ut;
    switch (kind_) {
        case ModelKind::PressureViscosity:
        case ModelKind::PressurePLaplace:
        case ModelKind::AcousticCoupled: {
            // Linearized mass weight (1 + alpha) = (1 - 2kv); the quadratic
            // source is carried by f u_t with f = -2k v_t.
            fc.alpha = Vec(mesh_.node_count());
            fc.f = Vec(mesh_.node_count());
            Vec knode = Vec::Zero(mesh_.node_count());
            Vec cnt = Vec::Zero(mesh_.node_count());
            for (int e = 0; e < mesh_.element_count(); ++e)
                for (int w = 0; w <= mesh_.dim; ++w) {
                    knode[mesh_.elements[e][w]] += mat_.k[e];
                    cnt[mesh_.elements[e][w]] += 1;
                }
            for (int i = 0; i < mesh_.node_count(); ++i) {
                double k = knode[i] / cnt[i];
                fc.alpha[i] = -2 * k * v.u[i];
                fc.f[i] = -2 * k * v.ut[i];
            }
            double margin = degeneracy_margin(v);
            if (margin <= opts_.degeneracy_floor)
                throw DegeneracyError(v.t, margin, "frozen coefficients degenerate at t = " +
                                                       std::to_string(v.t));
            break;
        }
        case ModelKind::PotentialViscosity: {
            double margin = degeneracy_margin(v);
            if (margin <= opts_.degeneracy_floor)
                throw DegeneracyError(v.t, margin, "frozen coefficients degenerate at t = " +
                                                       std::to_string(v.t));
            fc.alpha = alpha_nodal_from(v.ut);
            break;
        }
        case ModelKind::ElasticCoupled: {
            double margin = 0;
            fc.alpha = alpha_elem_from(v.ut, &margin);
            fc.elementwise = true;
            if (margin <= opts_.degeneracy_floor)
                throw DegeneracyError(v.t, margin, "frozen coefficients degenerate at t = " +
                                                       std::to_string(v.t));
            break;
        }
    }
    return fc;
}

Vec Model::frozen_residual(const FrozenCoefficients& fc, const State& s, const Vec& utt) const {
    Vec r;
    switch (kind_) {
        case ModelKind::PressureViscosity:
        case ModelKind::AcousticCoupled:
            r = weighted_mass(fc.v) * utt + stiff_main_ * s.u + qdamping_residual(mesh_, mat_, s.ut) +
                triple_mass_matrix(mesh_, Vec(-source_coeff_), fc.vt) * s.ut;
            break;
        case ModelKind::PressurePLaplace:
            r = weighted_mass(fc.v) * utt + plaplace_residual(mesh_, mat_, s.u) + stiff_bdamp_ * s.ut +
                triple_mass_matrix(mesh_, Vec(-source_coeff_), fc.vt) * s.ut;
            break;
        case ModelKind::PotentialViscosity:
            r = mass_plain_ * utt + alpha_laplace_residual(mesh_, fc.alpha, s.u) +
                qdamping_residual(mesh_, mat_, s.ut);
            break;
        case ModelKind::ElasticCoupled: {
            auto [rs, rd] = elastic_residuals(mesh_, mat_, fc.alpha, s.u, s.ut);
            r = mass_rho_ * utt + rs + rd;
            break;
        }
    }
    if (forcing && components() == 1) r -= forcing_vector(mesh_, forcing, s.t);
    return r;
}

Jacobians Model::frozen_jacobians(const FrozenCoefficients& fc, const State& s) const {
    Jacobians J;
    switch (kind_) {
        case ModelKind::PressureViscosity:
        case ModelKind::AcousticCoupled:
            J.d_utt = weighted_mass(fc.v);
            J.d_ut = qdamping_jacobian(mesh_, mat_, s.ut) +
                     triple_mass_matrix(mesh_, Vec(-source_coeff_), fc.vt);
            J.d_u = stiff_main_;
            break;
        case ModelKind::PressurePLaplace:
            J.d_utt = weighted_mass(fc.v);
            J.d_ut = stiff_bdamp_ + triple_mass_matrix(mesh_, Vec(-source_coeff_), fc.vt);
            J.d_u = plaplace_jacobian(mesh_, mat_, s.u);
            break;
        case ModelKind::PotentialViscosity:
            J.d_utt = mass_plain_;
            J.d_u = alpha_laplace_matrix_u(mesh_, fc.alpha);
            J.d_ut = qdamping_jacobian(mesh_, mat_, s.ut);
            break;
        case ModelKind::ElasticCoupled:
            J.d_utt = mass_rho_;
            J.d_u = elastic_stiffness_matrix(mesh_, mat_, fc.alpha);
            J.d_ut = elastic_damping_jacobian(mesh_, mat_, s.ut);
            break;
    }
    return J;
}

} // namespace westfem
