#ifndef WESTFEM_QUADRATURE_HPP
#define WESTFEM_QUADRATURE_HPP

#include <array>

namespace westfem {

// Simplex quadrature in barycentric coordinates; weights sum to one, so
// integrals are weight * value * element measure. Polynomial terms of the
// weak forms are integrated exactly elsewhere (see simplex_monomial_integral);
// these rules serve the non-polynomial integrands (norm powers, forcing).
struct QuadRule {
    int npts;
    std::array<std::array<double, 4>, 8> bary;
    std::array<double, 8> weight;
};

// Degree of exactness: 5 in 1D (3-point Gauss), 4 in 2D (6-point Dunavant),
// 3 in 3D (8-point, two symmetric orbits).
const QuadRule& simplex_rule(int dim);

// Exact integral of a product of barycentric powers over a unit-measure
// simplex: integral of prod lambda_i^{a_i} = d! * prod(a_i!) / (d + sum a_i)!.
double simplex_monomial_integral(int dim, const std::array<int, 4>& powers);

} // namespace westfem

#endif
