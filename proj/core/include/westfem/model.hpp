#ifndef WESTFEM_MODEL_HPP
#define WESTFEM_MODEL_HPP

#include "westfem/assembly.hpp"
#include "westfem/material.hpp"
#include "westfem/mesh.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace westfem {

enum class ModelKind {
    PressureViscosity, // (1-2ku) u_tt - c^2 Lap u - b div(((1-d)+d|grad u_t|^(q-1)) grad u_t) = 2k u_t^2
    PressurePLaplace,  // (1-2ku) u_tt - c^2 div(grad u + eps |grad u|^(p-1) grad u) - b Lap u_t = 2k u_t^2
    PotentialViscosity, // u_tt - c^2/(1-2k u_t) Lap u - b div(((1-d)+d|grad u_t|^(q-1)) grad u_t) = 0
    AcousticCoupled,    // piecewise coefficients, pressure form
    ElasticCoupled      // rho u_tt - B^T a [c] B u - B^T ((1-d)+d|B u_t|^(q-1)) [b] B u_t = 0
};

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

struct State {
    double t = 0;
    Vec u;
    Vec ut;
};

struct Jacobians {
    SpMat d_utt; // effective mass
    SpMat d_ut;  // effective damping
    SpMat d_u;   // effective stiffness
};

// Coefficients of the linearized problem, frozen from an outer iterate v.
// The frozen state itself is kept so assembly can reuse the exact
// element-wise quadrature of the monolithic paths.
struct FrozenCoefficients {
    Vec alpha; // nodal (scalar kinds) or per element (elastic)
    Vec f;     // nodal reaction coefficient, empty if absent
    Vec v, vt; // frozen state
    bool elementwise = false;
};

struct ModelOptions {
    double degeneracy_floor = 0.05;
    // Elastic initial data may be projected onto discrete gradient fields
    // (u = grad psi with psi from the Poisson solve).
    bool project_initial_gradient = false;
};

// One of the five formulations as a residual/Jacobian provider over the
// state (u, u_t). Immutable; evaluations are pure.
class Model {
public:
    Model(ModelKind kind, Mesh mesh, MaterialSpec mat, ModelOptions opts = {});

    ModelKind kind() const { return kind_; }
    const Mesh& mesh() const { return mesh_; }
    const MaterialSpec& material() const { return mat_; }
    const ModelOptions& options() const { return opts_; }
    int components() const { return kind_ == ModelKind::ElasticCoupled ? mesh_.dim : 1; }
    int dofs() const { return components() * mesh_.node_count(); }

    // Weak-form residual R(u, u_t, u_tt); R = 0 characterizes the discrete
    // solution. Throws DegeneracyError when the factor in front of u_tt
    // drops to the configured floor.
    Vec residual(const State& s, const Vec& utt) const;
    // Exact partial derivatives of the residual at (s, utt); utt enters the
    // d_u block through the product rule on (1-2ku) u_tt.
    Jacobians jacobians(const State& s, const Vec& utt) const;

    // min over elements and vertices of (1-2ku) resp. (1-2k u_t) or
    // (1-2k psi_t); never throws.
    double degeneracy_margin(const State& s) const;

    FrozenCoefficients frozen_coefficients(const State& v) const;
    Vec frozen_residual(const FrozenCoefficients& fc, const State& s, const Vec& utt) const;
    Jacobians frozen_jacobians(const FrozenCoefficients& fc, const State& s) const;

    double degeneracy_floor() const { return opts_.degeneracy_floor; }

    // Elastic only: scalar potential psi of the Helmholtz decomposition.
    Vec recover_potential(const Vec& U) const;
    const PoissonSolver& poisson() const;

    // Representative wave speed squared / nonlinearity for single-medium
    // kinds (validated constant across elements where required).
    double c2_constant() const { return c2_const_; }
    double k_constant() const { return k_const_; }

    // Optional manufactured-solution forcing, tested into the residual as
    // -int g(x,t) phi_i. Scalar kinds only.
    std::function<double(const Point&, double)> forcing;

private:
    Vec scalar_mass_apply_weight(const Vec& u) const; // element coeff for (1-2ku)/lambda
    SpMat weighted_mass(const Vec& u) const;
    Vec alpha_nodal_from(const Vec& ut) const;
    Vec alpha_elem_from(const Vec& ut, double* margin_out) const;
    void check_margin(double margin, double t) const;

    ModelKind kind_;
    Mesh mesh_;
    MaterialSpec mat_;
    ModelOptions opts_;
    double c2_const_ = 1.0, k_const_ = 0.0;

    SpMat stiff_main_;  // c^2- or 1/rho-weighted stiffness (scalar kinds)
    SpMat stiff_bdamp_; // b-weighted stiffness (p-Laplace kind)
    SpMat mass_plain_;
    Vec inv_lambda_;    // per-element 1/lambda (acoustic) or ones
    Vec source_coeff_;  // per-element 2k/lambda (pressure/acoustic kinds)
    SpMat mass_rho_;    // elastic vector mass
    std::shared_ptr<PoissonSolver> poisson_;
    Eigen::MatrixXd poisson_sensitivity_; // d psi / d U, full node rows
};

} // namespace westfem

#endif
