#pragma once

#include <span>
#include <utility>
#include <vector>

#include "capfield/geometry.hpp"

namespace capfield {

// Discrete potential V(x,y) on a quadrant grid, row-major like GridSpec.
struct Field {
    GridSpec grid;
    std::vector<double> values;

    double at(int ix, int iy) const { return values[static_cast<std::size_t>(grid.index(ix, iy))]; }
    double& at(int ix, int iy) { return values[static_cast<std::size_t>(grid.index(ix, iy))]; }
};

struct SolverConfig {
    double omega = 1.8;        // relaxation factor, 0 < omega < 2
    double tol = 1e-8;         // max-abs update per full sweep
    long max_iters = 100000;

    void validate() const;
};

struct SolveReport {
    long iterations = 0;
    double final_update = 0.0;
    bool converged = false;
};

// Successive over-relaxation on the 5-point Laplace stencil. Sweeps are
// lexicographic row-major with in-place (Gauss-Seidel style) updates, so the
// result is deterministic. Neumann nodes use ghost-node mirroring
// (V[-1] = V[1]); Dirichlet nodes are pinned. Non-convergence within
// max_iters is reported, not thrown.
std::pair<Field, SolveReport> solve_sor(const CapacitorSpec& spec, const GridSpec& grid,
                                        const SolverConfig& cfg = {});
std::pair<Field, SolveReport> solve_sor(const CapacitorSpec& spec, const GridSpec& grid,
                                        std::span<const NodeClass> classes,
                                        const SolverConfig& cfg);

// Assembles the same 5-point system (mirror closure included) as a dense
// linear system and solves it by Gaussian elimination with partial pivoting.
// Independent oracle for solve_sor; guarded to N <= 10000.
Field solve_direct(const CapacitorSpec& spec, const GridSpec& grid);
Field solve_direct(const CapacitorSpec& spec, const GridSpec& grid,
                   std::span<const NodeClass> classes);

// Max over Interior nodes of the absolute 5-point Laplacian
// |(E + W - 2C)/hx^2 + (N + S - 2C)/hy^2|; on square grids this is the
// familiar |E+W+N+S-4C|/h^2.
double laplacian_residual(const Field& field, std::span<const NodeClass> classes);

// Discrete integral of the potential over the quadrant: sum of node values
// times a per-node cell area (a/2)/nx * (b/2)/ny, i.e. N equal cells tiling
// the quadrant with boundary nodes weighted like any other. A uniform field
// of 1 integrates to exactly the quadrant area.
double field_volume(const Field& field);

}  // namespace capfield
