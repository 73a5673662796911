#ifndef WESTFEM_NORMS_HPP
#define WESTFEM_NORMS_HPP

#include "westfem/assembly.hpp"
#include "westfem/mesh.hpp"

#include <cstdint>
#include <vector>

namespace westfem {

// Spatial norm of a P1 field or of its (element-constant) gradient,
// combined with a temporal norm over a uniform grid.
struct NormSpec {
    enum class Spatial { Field, Gradient, FieldSup } spatial = Spatial::Field;
    double p = 2; // spatial exponent, ignored for FieldSup
    enum class Temporal { Sup, Integral } temporal = Temporal::Sup;
    double time_p = 2; // temporal exponent for Integral

    static NormSpec field(double p_) { return {Spatial::Field, p_, Temporal::Sup, 2}; }
    static NormSpec gradient(double p_) { return {Spatial::Gradient, p_, Temporal::Sup, 2}; }
    static NormSpec field_sup() { return {Spatial::FieldSup, 2, Temporal::Sup, 2}; }
    NormSpec in_time_sup() const {
        NormSpec s = *this;
        s.temporal = Temporal::Sup;
        return s;
    }
    NormSpec in_time_lp(double tp) const {
        NormSpec s = *this;
        s.temporal = Temporal::Integral;
        s.time_p = tp;
        return s;
    }
};

// Lp norm (p >= 1 or infinity). Gradient norms are exact; field norms use
// simplex quadrature, with the sup norm taken over nodal values (P1 extrema
// sit at the vertices).
double lp_norm(const Mesh& mesh, const Vec& field, double p, bool of_gradient);
double spatial_norm(const Mesh& mesh, const Vec& field, const NormSpec& spec);

// Discrete Poincare-Friedrichs constant: 1/sqrt(lambda_1) for the smallest
// eigenvalue of K x = lambda M x on the Dirichlet-eliminated pair, computed
// by inverse power iteration to 1e-8 relative.
double poincare_constant(const Mesh& mesh);

// Lower bound on the discrete embedding constant sup target/source over
// Dirichlet-zero fields: max over `samples` random fields plus a
// deterministic tent centered in the domain.
double embedding_ratio_estimate(const Mesh& mesh, const NormSpec& source, const NormSpec& target,
                                int samples, std::uint64_t seed = 1);

struct YoungConstants {
    double nominal; // (r-1) r^(r/(r-1)) eps^(-1/(1-r)); fails for small eps
    double sharp; // (r-1) r^(-r/(r-1)) eps^(-1/(r-1)), the sharp constant
};
YoungConstants young_constant(double eps, double r);
// Grid check of a b <= eps a^r + C b^(r/(r-1)) over (a,b) in [0,10]^2.
bool young_check(double C, double eps, double r, int grid = 101);

// Temporal norms over a uniform grid: sup exact on the grid, integrals by
// the trapezoid rule.
double bochner_norm(const Mesh& mesh, const std::vector<double>& times, const std::vector<Vec>& fields,
                    const NormSpec& spec);

// |||v||| = sup_t |v_t|_L2 + sup_t |grad v|_L2 + (int |grad v_t|_L2^2)^(1/2)
double triple_norm(const Mesh& mesh, const std::vector<double>& times, const std::vector<Vec>& u,
                   const std::vector<Vec>& ut);

} // namespace westfem

#endif
