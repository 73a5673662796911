#ifndef WESTFEM_MATERIAL_HPP
#define WESTFEM_MATERIAL_HPP

#include "westfem/mesh.hpp"

#include <Eigen/Dense>

#include <map>
#include <vector>

namespace westfem {

// One coefficient set; used globally or per tag.
struct MaterialValues {
    double c2 = 1.0;    // wave speed squared
    double b = 0.0;     // sound diffusivity (linear strong damping)
    double delta = 0.0; // blend between linear and q-type strong damping, in [0,1]
    double k = 0.0;     // acoustic nonlinearity (k or k~), any sign
    double eps = 0.0;   // p-Laplace damping weight, >= 0
    double p = 1.0;     // p-Laplace exponent, >= 1
    double q = 1.0;     // q-viscosity exponent, >= 1
    double rho = 1.0;   // mass density, > 0
    double lambda = 1.0; // first Lame parameter / bulk modulus, > 0
    double mu = 0.0;     // shear modulus; 0 on FLUID, > 0 on SOLID
    double b_hat = 0.0;  // fluid entry of the Voigt damping tensor [b]
};

// Element-wise constant coefficients. The Voigt tensors [c] and [b] are
// constructed lazily for the elastic model: [c] from (lambda, mu), [b] as
// the fluid pattern b_hat * e e^T plus b * I so that [b] stays uniformly
// positive definite (the fluid pattern alone is rank one). Arbitrary
// symmetric positive semidefinite overrides are accepted on SOLID elements.
struct MaterialSpec {
    Eigen::VectorXd c2, b, delta, k, eps, p, q, rho, lambda, mu, b_hat;
    std::vector<Eigen::MatrixXd> c_voigt_override; // empty or per element
    std::vector<Eigen::MatrixXd> b_voigt_override;

    int element_count() const { return static_cast<int>(c2.size()); }
    bool nonlinear_element(int e) const { return k[e] != 0.0; }

    Eigen::MatrixXd c_voigt(const Mesh& mesh, int e) const;
    Eigen::MatrixXd b_voigt(const Mesh& mesh, int e) const;
};

MaterialSpec make_material(const Mesh& mesh, const MaterialValues& global);
MaterialSpec make_material(const Mesh& mesh, const std::map<Tag, MaterialValues>& per_tag);

// Voigt stiffness from the Lame parameters: 6x6 in 3D, 3x3 plane strain in 2D.
Eigen::MatrixXd voigt_stiffness(double lambda, double mu, int dim);
// Fluid damping pattern b_hat * e e^T with e = (1,..,1,0,..,0)^T.
Eigen::MatrixXd voigt_fluid_damping(double b_hat, int dim);

// Coefficient conditions of the acoustic-acoustic coupled model: positive
// floors on lambda and rho everywhere; b and delta bounded away from zero
// wherever k != 0. Throws ConfigError on violation.
void validate_acoustic(const Mesh& mesh, const MaterialSpec& mat);

// Coefficient conditions of the elastic-acoustic model: [c], [b] symmetric
// PSD with [c] eigenvalues in positive bounds, (1-delta) lambda_min([b])
// positive everywhere, and on the nonlinear region delta in (0,1) bounds and
// lambda_min([b]) positive; mu = 0 on FLUID, mu > 0 on SOLID.
void validate_elastic(const Mesh& mesh, const MaterialSpec& mat);

// Basic range checks shared by all models (delta in [0,1], exponents >= 1,
// rho > 0, eps >= 0).
void validate_ranges(const MaterialSpec& mat);

} // namespace westfem

#endif
