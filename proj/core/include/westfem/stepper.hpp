#ifndef WESTFEM_STEPPER_HPP
#define WESTFEM_STEPPER_HPP

#include "westfem/model.hpp"
#include "westfem/norms.hpp"

#include <cstdint>
#include <vector>

namespace westfem {

struct StepperOptions {
    double newton_tol = 1e-10; // absolute residual 2-norm, scaled by element count
    int max_newton_iterations = 25;
    int max_line_search = 8;
};

struct StepRecord {
    int newton_iterations = 0;
    double final_residual = 0;
    double degeneracy_margin = 1;
    std::vector<double> residual_history;
};

struct AdmissibilityRecord {
    double m_bar = 0, M_bar = 0, kappa = 0;
    // Observed Bochner norms; the exact norm triple depends on the model
    // kind (see check_admissibility).
    double norm_utt = 0;
    double norm_mid = 0;
    double norm_high = 0;
    double embedding_constant = 0; // lower-bound estimate on the mesh
    double smallness_lhs = 0;
    bool member = false;
};

struct SolveReport {
    std::vector<StepRecord> steps;
    std::vector<double> fixed_point_updates; // |||v^{m+1} - v^m|||
    std::vector<double> fixed_point_ratios;  // successive update quotients
    int outer_iterations = 0;
    bool fixed_point_converged = true;
    AdmissibilityRecord admissibility{};
};

// Time-indexed sequence of (u, u_t) states on a uniform grid. Produced
// trajectories satisfy u_{n+1} - u_n = (dt/2)(ut_n + ut_{n+1}) exactly.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> u;
    std::vector<Vec> ut;
    SolveReport report;

    int size() const { return static_cast<int>(times.size()); }
    State state(int i) const { return {times[i], u[i], ut[i]}; }
};

// Implicit midpoint with a Newton solve per step.
Trajectory integrate(const Model& model, const State& initial, double T, double dt,
                     const StepperOptions& opts = {});

// Outer fixed-point iteration: freeze the quasilinear coefficients along the
// previous iterate, solve the linearized problem over the whole window by
// implicit midpoint, repeat until the triple-norm update drops below tol.
// Non-convergence is reported, not thrown.
Trajectory fixed_point_outer(const Model& model, const State& initial, double T, double dt,
                             int max_outer, double tol, const StepperOptions& opts = {});

AdmissibilityRecord check_admissibility(const Trajectory& traj, const Model& model, double m_bar,
                                        double M_bar, double kappa, int embedding_samples = 16,
                                        std::uint64_t seed = 1);

struct GuardReport {
    double margin = 1;  // min over evaluation points of the degeneracy factor
    double apriori = 1; // bound via the damping-induced gradient norm chain
};
GuardReport degeneracy_guard(const Model& model, const State& s, int embedding_samples = 8,
                             std::uint64_t seed = 1);

double triple_norm(const Model& model, const Trajectory& traj);
double triple_norm_difference(const Model& model, const Trajectory& a, const Trajectory& b);

} // namespace westfem

#endif
