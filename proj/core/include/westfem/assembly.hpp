#ifndef WESTFEM_ASSEMBLY_HPP
#define WESTFEM_ASSEMBLY_HPP

#include "westfem/material.hpp"
#include "westfem/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <utility>
#include <vector>

namespace westfem {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// Gradient-norm regularization: |g|_reg = sqrt(|g|^2 + eta^2) replaces |g|
// inside the |g|^(q-1) and |g|^(q-3) factors. Removes the singularity of the
// damping Jacobian at g = 0 for q < 3; perturbs residuals by O(eta^(q-1)).
inline constexpr double kGradEta = 1e-10;

// F(g) = |g|^(q-1) g and its exact derivative
// F'(g) = |g|^(q-1) I + (q-1)|g|^(q-3) g g^T, both with the regularized norm.
Eigen::Vector3d monotone_flux(const Eigen::Vector3d& g, double q, double eta = kGradEta);
Eigen::Matrix3d monotone_flux_jacobian(const Eigen::Vector3d& g, double q, double eta = kGradEta);

// Element-constant gradient of a P1 field.
Eigen::Vector3d element_gradient(const Mesh& mesh, const Vec& field, int e);

// --- scalar P1 operators -------------------------------------------------

SpMat mass_matrix(const Mesh& mesh);
SpMat mass_matrix_elementwise(const Mesh& mesh, const Vec& weight);
// P1-interpolated nodal weight; the cubic integrals are evaluated in closed
// form, so the result is exact.
SpMat mass_matrix_nodal(const Mesh& mesh, const Vec& weight);

SpMat stiffness_matrix(const Mesh& mesh);
SpMat stiffness_matrix(const Mesh& mesh, const Vec& coeff);

// r_i = int b ((1-delta) + delta |grad v|^(q-1)) grad v . grad phi_i
Vec qdamping_residual(const Mesh& mesh, const MaterialSpec& mat, const Vec& v);
SpMat qdamping_jacobian(const Mesh& mesh, const MaterialSpec& mat, const Vec& v);

// r_i = int c2 (grad u + eps |grad u|^(p-1) grad u) . grad phi_i
Vec plaplace_residual(const Mesh& mesh, const MaterialSpec& mat, const Vec& u);
SpMat plaplace_jacobian(const Mesh& mesh, const MaterialSpec& mat, const Vec& u);

// g_i = int 2 k (ut)^2 phi_i, exact for the P1-squared integrand.
Vec source_term(const Mesh& mesh, const MaterialSpec& mat, const Vec& ut);
// Same with an explicit element coefficient in place of 2k.
Vec quadratic_load(const Mesh& mesh, const Vec& coeff, const Vec& field);

// M_ij = int coeff_e * w(x) * phi_i phi_j with a P1 nodal field w; exact.
// Carries the k-coupling blocks of the Jacobians and the f u_t term of the
// linearized problems.
SpMat triple_mass_matrix(const Mesh& mesh, const Vec& coeff, const Vec& nodal);

// Load vector int f(x,t) phi_i by simplex quadrature.
Vec forcing_vector(const Mesh& mesh, const std::function<double(const Point&, double)>& f, double t);

// Weak form of the non-divergence operator -alpha Laplace(u) with a P1
// coefficient field: R_i = int alpha grad u . grad phi_i + int (grad alpha .
// grad u) phi_i. R is bilinear in (alpha, u); both partial matrices are
// assembled exactly.
Vec alpha_laplace_residual(const Mesh& mesh, const Vec& alpha, const Vec& u);
SpMat alpha_laplace_matrix_u(const Mesh& mesh, const Vec& alpha);
SpMat alpha_laplace_matrix_alpha(const Mesh& mesh, const Vec& u);

// --- vector P1 operators (component-major blocks) ------------------------

int vector_dofs(const Mesh& mesh);
SpMat vector_mass_matrix(const Mesh& mesh, const Vec& rho);

// Per-element Voigt strain of a vector field (6 entries in 3D, 3 in 2D).
std::vector<Eigen::VectorXd> voigt_apply(const Mesh& mesh, const Vec& U);

// Local strain-displacement matrix of one element; columns ordered
// comp*(dim+1) + vertex to match the global component-major layout.
Eigen::MatrixXd voigt_element_matrix(const Mesh& mesh, int e);

// Weak stiffness int alpha (B phi)^T [c] (B U) and damping
// int ((1-delta) + delta |B Ut|^(q-1)) (B phi)^T [b] (B Ut).
std::pair<Vec, Vec> elastic_residuals(const Mesh& mesh, const MaterialSpec& mat, const Vec& alpha_elem,
                                      const Vec& U, const Vec& Ut);
SpMat elastic_stiffness_matrix(const Mesh& mesh, const MaterialSpec& mat, const Vec& alpha_elem);
SpMat elastic_damping_jacobian(const Mesh& mesh, const MaterialSpec& mat, const Vec& Ut);
// d(stiffness residual)/d(alpha_e), one sparse column per element.
SpMat elastic_stiffness_dalpha(const Mesh& mesh, const MaterialSpec& mat, const Vec& U);

// Lp norm of the per-element Voigt strain; exact (strain is element
// constant). restrict_tag: only elements with this tag (or all if nullptr).
double voigt_lp_norm(const Mesh& mesh, const Vec& U, double pnorm, const Tag* restrict_tag = nullptr);

// --- Dirichlet handling ---------------------------------------------------

void zero_boundary(const Mesh& mesh, Vec& v, int components = 1);
// Replaces boundary rows and columns by identity.
void eliminate_dirichlet(const Mesh& mesh, SpMat& A, int components = 1);
void zero_boundary_rows(const Mesh& mesh, Vec& r, int components = 1);
std::vector<int> interior_nodes(const Mesh& mesh);
SpMat interior_submatrix(const Mesh& mesh, const SpMat& A);

// --- Poisson solve for the Helmholtz scalar potential ---------------------

// -Laplace(psi) = -div U with psi = 0 on the boundary; the weak right-hand
// side is int U . grad phi_i. The interior factorization is cached.
class PoissonSolver {
public:
    explicit PoissonSolver(const Mesh& mesh);
    Vec solve_divergence(const Vec& U) const; // full-length psi, zeros on boundary
    Vec solve_rhs(const Vec& rhs_full) const; // rhs in full numbering
    // Sparse map U -> weak divergence load (node_count x vector_dofs).
    const SpMat& divergence_matrix() const { return div_matrix_; }
    const Mesh& mesh() const { return *mesh_; }

private:
    const Mesh* mesh_;
    std::vector<int> interior_;
    std::vector<int> full_to_interior_;
    Eigen::SimplicialLDLT<SpMat> factorization_;
    SpMat div_matrix_;
};

Vec poisson_solve(const Mesh& mesh, const Vec& U);

} // namespace westfem

#endif
