// Microbenchmarks for the assembly and solve kernels.

#include "westfem/assembly.hpp"
#include "westfem/norms.hpp"
#include "westfem/scenario.hpp"
#include "westfem/stepper.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace westfem;

namespace {

Vec random_field(const Mesh& mesh, int comps) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-0.05, 0.05);
    Vec f(comps * mesh.node_count());
    for (int i = 0; i < f.size(); ++i) f[i] = dist(rng);
    zero_boundary(mesh, f, comps);
    return f;
}

void bm_mass_matrix_2d(benchmark::State& state) {
    Mesh mesh = rect_mesh(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 1, 1);
    for (auto _ : state) benchmark::DoNotOptimize(mass_matrix(mesh));
    state.SetItemsProcessed(state.iterations() * mesh.element_count());
}
BENCHMARK(bm_mass_matrix_2d)->Arg(16)->Arg(32)->Arg(64);

void bm_qdamping_jacobian_2d(benchmark::State& state) {
    Mesh mesh = rect_mesh(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 1, 1);
    MaterialValues mv;
    mv.b = 1;
    mv.delta = 0.5;
    mv.q = 3;
    MaterialSpec mat = make_material(mesh, mv);
    Vec v = random_field(mesh, 1);
    for (auto _ : state) benchmark::DoNotOptimize(qdamping_jacobian(mesh, mat, v));
    state.SetItemsProcessed(state.iterations() * mesh.element_count());
}
BENCHMARK(bm_qdamping_jacobian_2d)->Arg(16)->Arg(32)->Arg(64);

void bm_poisson_solve_3d(benchmark::State& state) {
    Mesh mesh = box_mesh(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)),
                         static_cast<int>(state.range(0)), 1, 1, 1);
    PoissonSolver solver(mesh);
    Vec U = random_field(mesh, 3);
    for (auto _ : state) benchmark::DoNotOptimize(solver.solve_divergence(U));
}
BENCHMARK(bm_poisson_solve_3d)->Arg(4)->Arg(8);

void bm_midpoint_step_1d(benchmark::State& state) {
    Mesh mesh = interval_mesh(static_cast<int>(state.range(0)), 1.0);
    MaterialValues mv;
    mv.c2 = 1;
    mv.b = 1;
    mv.delta = 0.5;
    mv.q = 3;
    mv.k = 1;
    MaterialSpec mat = make_material(mesh, mv);
    Model model(ModelKind::PressureViscosity, std::move(mesh), std::move(mat));
    State init;
    init.t = 0;
    init.u = initial_field(model.mesh(), InitialProfile::Sine, 1e-2, 1);
    init.ut = Vec::Zero(model.dofs());
    const double dt = 1.0 / 128;
    for (auto _ : state) benchmark::DoNotOptimize(integrate(model, init, 4 * dt, dt));
    state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(bm_midpoint_step_1d)->Arg(64)->Arg(256);

void bm_poincare_constant(benchmark::State& state) {
    Mesh mesh = rect_mesh(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 1, 1);
    for (auto _ : state) benchmark::DoNotOptimize(poincare_constant(mesh));
}
BENCHMARK(bm_poincare_constant)->Arg(16)->Arg(32);

} // namespace

BENCHMARK_MAIN();
