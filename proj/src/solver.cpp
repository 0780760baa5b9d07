#include "capfield/solver.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace capfield {

void SolverConfig::validate() const {
    if (!(omega > 0.0) || !(omega < 2.0)) {
        throw std::invalid_argument("SolverConfig: omega must lie in (0, 2), got " +
                                    std::to_string(omega));
    }
    if (!(tol > 0.0)) {
        throw std::invalid_argument("SolverConfig: tol must be positive");
    }
    if (max_iters < 1) {
        throw std::invalid_argument("SolverConfig: max_iters must be at least 1");
    }
}

namespace {

void check_classes(const GridSpec& grid, std::span<const NodeClass> classes) {
    if (static_cast<int>(classes.size()) != grid.node_count()) {
        throw std::invalid_argument("solver: class array does not match grid");
    }
}

Field pinned_field(const CapacitorSpec& spec, const GridSpec& grid,
                   std::span<const NodeClass> classes) {
    Field f{grid, std::vector<double>(static_cast<std::size_t>(grid.node_count()), 0.0)};
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (is_dirichlet(classes[i])) {
            f.values[i] = dirichlet_value(classes[i], spec);
        }
    }
    return f;
}

}  // namespace

std::pair<Field, SolveReport> solve_sor(const CapacitorSpec& spec, const GridSpec& grid,
                                        const SolverConfig& cfg) {
    return solve_sor(spec, grid, classify_nodes(spec, grid), cfg);
}

std::pair<Field, SolveReport> solve_sor(const CapacitorSpec& spec, const GridSpec& grid,
                                        std::span<const NodeClass> classes,
                                        const SolverConfig& cfg) {
    grid.validate();
    cfg.validate();
    check_classes(grid, classes);

    Field f = pinned_field(spec, grid, classes);
    std::vector<double>& v = f.values;

    const int nx = grid.nx;
    const int ny = grid.ny;
    const double cx = 1.0 / (grid.hx * grid.hx);
    const double cy = 1.0 / (grid.hy * grid.hy);
    const double denom = 2.0 * (cx + cy);

    SolveReport report;
    for (long sweep = 1; sweep <= cfg.max_iters; ++sweep) {
        double max_change = 0.0;
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const int i = iy * nx + ix;
                if (is_dirichlet(classes[static_cast<std::size_t>(i)])) continue;

                // Mirror closure at the symmetry planes: the missing
                // neighbor equals the opposite one.
                const double west = ix > 0 ? v[static_cast<std::size_t>(i - 1)]
                                           : v[static_cast<std::size_t>(i + 1)];
                const double east = ix < nx - 1 ? v[static_cast<std::size_t>(i + 1)]
                                                : v[static_cast<std::size_t>(i - 1)];
                const double south = iy > 0 ? v[static_cast<std::size_t>(i - nx)]
                                            : v[static_cast<std::size_t>(i + nx)];
                const double north = iy < ny - 1 ? v[static_cast<std::size_t>(i + nx)]
                                                 : v[static_cast<std::size_t>(i - nx)];

                const double gauss_seidel = (cx * (west + east) + cy * (south + north)) / denom;
                const double old = v[static_cast<std::size_t>(i)];
                const double updated = old + cfg.omega * (gauss_seidel - old);
                const double change = std::abs(updated - old);
                if (change > max_change) max_change = change;
                v[static_cast<std::size_t>(i)] = updated;
            }
        }
        report.iterations = sweep;
        report.final_update = max_change;
        if (max_change <= cfg.tol) {
            report.converged = true;
            break;
        }
    }
    return {std::move(f), report};
}

Field solve_direct(const CapacitorSpec& spec, const GridSpec& grid) {
    return solve_direct(spec, grid, classify_nodes(spec, grid));
}

Field solve_direct(const CapacitorSpec& spec, const GridSpec& grid,
                   std::span<const NodeClass> classes) {
    grid.validate();
    check_classes(grid, classes);

    const int n = grid.node_count();
    if (n > 10000) {
        throw std::invalid_argument("solve_direct: dense solve guarded to N <= 10000");
    }

    bool any_dirichlet = false;
    for (NodeClass c : classes) {
        if (is_dirichlet(c)) { any_dirichlet = true; break; }
    }
    if (!any_dirichlet) {
        throw std::runtime_error("solve_direct: singular system, no Dirichlet node present");
    }

    const int nx = grid.nx;
    const int ny = grid.ny;
    const double cx = 1.0 / (grid.hx * grid.hx);
    const double cy = 1.0 / (grid.hy * grid.hy);
    const double denom = 2.0 * (cx + cy);

    const std::size_t nn = static_cast<std::size_t>(n);
    std::vector<double> a(nn * nn, 0.0);
    std::vector<double> rhs(nn, 0.0);

    // Rows are normalized by the stencil diagonal so all entries are O(1):
    // -V[i] + (cx*(W+E) + cy*(S+N))/denom = 0 at unknowns, V[i] = value at
    // Dirichlet nodes.
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const std::size_t i = static_cast<std::size_t>(iy * nx + ix);
            const NodeClass c = classes[i];
            if (is_dirichlet(c)) {
                a[i * nn + i] = 1.0;
                rhs[i] = dirichlet_value(c, spec);
                continue;
            }
            a[i * nn + i] = -1.0;
            const int west = ix > 0 ? iy * nx + ix - 1 : iy * nx + ix + 1;
            const int east = ix < nx - 1 ? iy * nx + ix + 1 : iy * nx + ix - 1;
            const int south = iy > 0 ? (iy - 1) * nx + ix : (iy + 1) * nx + ix;
            const int north = iy < ny - 1 ? (iy + 1) * nx + ix : (iy - 1) * nx + ix;
            a[i * nn + static_cast<std::size_t>(west)] += cx / denom;
            a[i * nn + static_cast<std::size_t>(east)] += cx / denom;
            a[i * nn + static_cast<std::size_t>(south)] += cy / denom;
            a[i * nn + static_cast<std::size_t>(north)] += cy / denom;
        }
    }

    // Gaussian elimination with partial pivoting, in place.
    std::vector<std::size_t> perm(nn);
    for (std::size_t i = 0; i < nn; ++i) perm[i] = i;
    for (std::size_t col = 0; col < nn; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a[perm[col] * nn + col]);
        for (std::size_t r = col + 1; r < nn; ++r) {
            const double cand = std::abs(a[perm[r] * nn + col]);
            if (cand > best) { best = cand; pivot = r; }
        }
        if (best < 1e-14) {
            throw std::runtime_error("solve_direct: singular system at column " +
                                     std::to_string(col));
        }
        std::swap(perm[col], perm[pivot]);
        const std::size_t prow = perm[col];
        const double diag = a[prow * nn + col];
        for (std::size_t r = col + 1; r < nn; ++r) {
            const std::size_t row = perm[r];
            const double factor = a[row * nn + col] / diag;
            if (factor == 0.0) continue;
            a[row * nn + col] = 0.0;
            for (std::size_t k = col + 1; k < nn; ++k) {
                a[row * nn + k] -= factor * a[prow * nn + k];
            }
            rhs[row] -= factor * rhs[prow];
        }
    }

    std::vector<double> x(nn, 0.0);
    for (std::size_t ri = nn; ri-- > 0;) {
        const std::size_t row = perm[ri];
        double acc = rhs[row];
        for (std::size_t k = ri + 1; k < nn; ++k) {
            acc -= a[row * nn + k] * x[k];
        }
        x[ri] = acc / a[row * nn + ri];
    }

    Field f{grid, std::move(x)};
    return f;
}

double laplacian_residual(const Field& field, std::span<const NodeClass> classes) {
    const GridSpec& grid = field.grid;
    check_classes(grid, classes);
    const double cx = 1.0 / (grid.hx * grid.hx);
    const double cy = 1.0 / (grid.hy * grid.hy);

    double worst = 0.0;
    for (int iy = 1; iy < grid.ny - 1; ++iy) {
        for (int ix = 1; ix < grid.nx - 1; ++ix) {
            const std::size_t i = static_cast<std::size_t>(grid.index(ix, iy));
            if (classes[i] != NodeClass::Interior) continue;
            const double c = field.values[i];
            const double r = cx * (field.values[i - 1] + field.values[i + 1] - 2.0 * c) +
                             cy * (field.values[i - static_cast<std::size_t>(grid.nx)] +
                                   field.values[i + static_cast<std::size_t>(grid.nx)] - 2.0 * c);
            const double mag = std::abs(r);
            if (mag > worst) worst = mag;
        }
    }
    return worst;
}

double field_volume(const Field& field) {
    const GridSpec& g = field.grid;
    // Per-node cell so that nx*ny cells tile the quadrant exactly.
    const double cell = (g.hx * (g.nx - 1) / g.nx) * (g.hy * (g.ny - 1) / g.ny);
    double sum = 0.0;
    for (double v : field.values) sum += v;
    return sum * cell;
}

}  // namespace capfield
