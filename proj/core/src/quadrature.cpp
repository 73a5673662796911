#include "westfem/quadrature.hpp"

#include <cmath>

namespace westfem {

namespace {

QuadRule make_interval_rule() {
    QuadRule r{};
    r.npts = 3;
    const double s = std::sqrt(3.0 / 5.0);
    const double x[3] = {0.5 * (1 - s), 0.5, 0.5 * (1 + s)};
    const double w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    for (int i = 0; i < 3; ++i) {
        r.bary[i] = {1 - x[i], x[i], 0, 0};
        r.weight[i] = w[i];
    }
    return r;
}

QuadRule make_triangle_rule() {
    // Dunavant degree 4, positive weights.
    QuadRule r{};
    r.npts = 6;
    const double a1 = 0.108103018168070, b1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.816847572980459, b2 = 0.091576213509771, w2 = 0.109951743655322;
    int n = 0;
    auto orbit = [&](double a, double b, double w) {
        r.bary[n] = {a, b, b, 0};
        r.weight[n++] = w;
        r.bary[n] = {b, a, b, 0};
        r.weight[n++] = w;
        r.bary[n] = {b, b, a, 0};
        r.weight[n++] = w;
    };
    orbit(a1, b1, w1);
    orbit(a2, b2, w2);
    return r;
}

QuadRule make_tet_rule() {
    // Two symmetric 4-point orbits, degree 3, positive weights.
    QuadRule r{};
    r.npts = 8;
    const double a1 = 0.3277213249498343, w1 = 0.14825454908437205;
    const double a2 = 0.10197275616196387, w2 = 0.10174545091562794;
    int n = 0;
    auto orbit = [&](double a, double w) {
        for (int lead = 0; lead < 4; ++lead) {
            std::array<double, 4> p{a, a, a, a};
            p[lead] = 1 - 3 * a;
            r.bary[n] = p;
            r.weight[n++] = w;
        }
    };
    orbit(a1, w1);
    orbit(a2, w2);
    return r;
}

} // namespace

const QuadRule& simplex_rule(int dim) {
    static const QuadRule r1 = make_interval_rule();
    static const QuadRule r2 = make_triangle_rule();
    static const QuadRule r3 = make_tet_rule();
    return dim == 1 ? r1 : dim == 2 ? r2 : r3;
}

double simplex_monomial_integral(int dim, const std::array<int, 4>& powers) {
    auto fact = [](int n) {
        double f = 1;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    double num = fact(dim);
    int total = 0;
    for (int i = 0; i <= dim; ++i) {
        num *= fact(powers[i]);
        total += powers[i];
    }
    return num / fact(total + dim);
}

} // namespace westfem
