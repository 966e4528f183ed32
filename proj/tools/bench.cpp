// Compares the serial reference kernels against their OpenMP variants on
// large grids and prints a speedup table.

#include "odeident/jets.hpp"
#include "odeident/models.hpp"
#include "odeident/ode.hpp"
#include "odeident/timeselect.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

using namespace odeident;

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    auto dt = std::chrono::steady_clock::now() - start;
    return std::chrono::duration<double, std::milli>(dt).count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
    f();  // warm-up: thread pool, allocator arenas, page faults
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, ms_since(t0));
    }
    return best;
}

void row(const char* kernel, long size, double serial_ms, double omp_ms) {
    std::printf("%-18s %10ld %12.1f %12.1f %9.2fx\n", kernel, size, serial_ms, omp_ms,
                serial_ms / omp_ms);
}

}  // namespace

int main(int argc, char** argv) {
    long grid_n = argc > 1 ? std::atol(argv[1]) : 1000000;
    int reps = argc > 2 ? std::atoi(argv[2]) : 3;

    std::printf("threads: %d, grid: %ld, reps: %d (best-of)\n\n", omp_get_max_threads(), grid_n,
                reps);
    std::printf("%-18s %10s %12s %12s %9s\n", "kernel", "size", "serial[ms]", "openmp[ms]",
                "speedup");

    models::ModelBundle lv = models::make_lotka_volterra();
    Vec theta(4), x0(2);
    theta << 2.0 / 3.0, 4.0 / 3.0, 1.0, 1.0;
    x0 << 1.0, 2.0;
    ode::Trajectory traj = ode::integrate(lv.spec, x0, theta, 0.0, 10.0);
    std::vector<double> grid = jets::uniform_grid(0.0, 10.0, static_cast<int>(grid_n));

    std::vector<OutputJet> jets_out;
    double serial = time_best_of(reps, [&] {
        jets_out = jets::analytic_jets(lv.spec, traj, theta, grid, jets::Exec::serial);
    });
    double parallel = time_best_of(reps, [&] {
        jets_out = jets::analytic_jets(lv.spec, traj, theta, grid, jets::Exec::openmp);
    });
    row("analytic_jets", grid_n, serial, parallel);

    {
        jets::SampleTable table;
        table.t.resize(grid_n);
        table.y.resize(grid_n, 2);
        double dt = 1e-4;
        for (long i = 0; i < grid_n; ++i) {
            double t = i * dt;
            table.t[i] = t;
            table.y(i, 0) = std::sin(t);
            table.y(i, 1) = std::cos(0.7 * t);
        }
        std::vector<int> orders = {1, 1};
        std::vector<OutputJet> numeric;
        serial = time_best_of(
            reps, [&] { numeric = jets::numeric_jets(table, orders, 5, jets::Exec::serial); });
        parallel = time_best_of(
            reps, [&] { numeric = jets::numeric_jets(table, orders, 5, jets::Exec::openmp); });
        row("numeric_jets", grid_n, serial, parallel);
    }

    {
        SigmaStore store(2);
        timeselect::BasisEvaluation ev;
        serial = time_best_of(reps, [&] {
            ev = timeselect::evaluate_basis(lv.blocks[0], jets_out, store, jets::Exec::serial);
        });
        parallel = time_best_of(reps, [&] {
            ev = timeselect::evaluate_basis(lv.blocks[0], jets_out, store, jets::Exec::openmp);
        });
        row("evaluate_basis", grid_n, serial, parallel);
    }

    return 0;
}
