#ifndef WESTFEM_ENERGY_HPP
#define WESTFEM_ENERGY_HPP

#include "westfem/model.hpp"
#include "westfem/stepper.hpp"

#include <map>
#include <string>
#include <vector>

namespace westfem {

enum class EnergyKind {
    E0,  // |u_t|_L2^2 + |grad u|_L2^2
    E1,  // E0 + |grad u_t|_L2^2 + |grad u_t|_{Lq+1}^{q+1}
    EW1, // 1/2 |sqrt(1-2ku) u_t|_L2^2 + c^2/2 |grad u|_L2^2 + c^2 eps/(p+1) |grad u|_{Lp+1}^{p+1}
};

// Evaluate one energy functional; for the elastic model gradients are
// replaced by Voigt strains and EW1 by the rho-kinetic + strain energy.
// EW1 throws DegeneracyError when the weight 1-2ku is not positive.
double energy(EnergyKind kind, const Model& model, const State& s);

enum class EnergyInequality {
    EnergyBalance,  // first-order balance of the linearized weak form
    HigherOrder,    // adds u_tt and grad u_t dissipation, measured constant
    LowerOrder,     // E0-level estimate, measured constant
    DecayBound,     // E[u](t) + b~ int |grad u_t|^2 <= E[u](0)
    ElasticBalance, // coupled elastic estimate, measured constant
};

struct MarginRecord {
    std::string name;
    std::vector<double> lhs, rhs; // per time level
    double worst_margin = 0;      // min over levels of rhs - lhs
    double measured_constant = 0; // smallest C making lhs <= C * data hold
    double tolerance = 0;
    bool pass = false;
};

// Discrete analogs of the energy estimates. Dissipation integrals are
// accumulated from midpoint states so that the k = 0 identities hold to
// solver precision; margins are interpreted at O(dt^2) otherwise.
MarginRecord check_energy_inequality(const Trajectory& traj, const Model& model, EnergyInequality which,
                                     double tol_energy);

struct EnergyReport {
    std::vector<double> t, E0, E1, EW1, D_grad, D_q;
    std::map<std::string, std::vector<double>> margins;
    double decay_omega = 0, decay_r2 = 0;
    double window_a = 0, window_b = 0;
    bool has_decay_fit = false;
};

EnergyReport energy_report(const Trajectory& traj, const Model& model, double tol_energy);

// Least-squares line through (t, log E) on [ta, tb]; omega = -slope.
// Nonpositive energies truncate the window.
std::pair<double, double> decay_fit(const std::vector<double>& t, const std::vector<double>& E,
                                    double ta, double tb);

// Trapezoid-in-time residual of the identity obtained by testing the
// p-Laplace equation with u itself.
double equipartition_residual(const Trajectory& traj, const Model& model);

// Max over interface hat functions and time levels of the one-sided weak
// flux jump, normalized by the flux magnitude. Coupled models only.
double interface_jump(const Trajectory& traj, const Model& model);

void write_energy_csv(const EnergyReport& report, const std::string& path);

} // namespace westfem

#endif
