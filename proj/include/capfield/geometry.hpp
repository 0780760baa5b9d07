#pragma once

#include <vector>

namespace capfield {

// Rectangular coaxial capacitor reduced to its first quadrant.
// The inner plate is the Dirichlet segment y = 0, 0 <= x <= d/2 held at
// potential v0; the outer conductor edges x = a/2 and y = b/2 are grounded.
// x = 0 and the remainder of y = 0 are symmetry planes (zero normal
// derivative).
struct CapacitorSpec {
    double a = 2.0;   // outer width
    double b = 2.0;   // outer height
    double d = 0.5;   // inner-plate length, must satisfy 0 < d < a
    double v0 = 1.0;  // inner-plate potential

    CapacitorSpec with_d(double new_d) const {
        CapacitorSpec s = *this;
        s.d = new_d;
        return s;
    }

    void validate() const;
};

// Uniform node grid over the quadrant x in [0, a/2], y in [0, b/2].
// Flattening is row-major with y outer, x inner: index = iy*nx + ix.
// This order is fixed project-wide (solver fields, dataset records,
// network input vectors all use it).
struct GridSpec {
    int nx = 41;
    int ny = 41;
    double hx = 0.05 / 2.0;  // (a/2)/(nx-1)
    double hy = 0.05 / 2.0;  // (b/2)/(ny-1)

    static GridSpec make(const CapacitorSpec& spec, int nx, int ny);

    int node_count() const { return nx * ny; }
    int index(int ix, int iy) const { return iy * nx + ix; }
    double x(int ix) const { return ix * hx; }
    double y(int iy) const { return iy * hy; }

    void validate() const;
};

enum class NodeClass : unsigned char {
    InnerPlate,  // Dirichlet v0
    OuterWall,   // Dirichlet 0
    SymmetryX,   // Neumann dV/dx = 0 on x = 0
    SymmetryY,   // Neumann dV/dy = 0 on y = 0 beyond the plate
    Interior,
};

inline bool is_dirichlet(NodeClass c) {
    return c == NodeClass::InnerPlate || c == NodeClass::OuterWall;
}

double dirichlet_value(NodeClass c, const CapacitorSpec& spec);

// One class per node, row-major. Corner precedence: Dirichlet > Neumann >
// Interior, so the origin is always InnerPlate and the far corners are
// OuterWall.
std::vector<NodeClass> classify_nodes(const CapacitorSpec& spec, const GridSpec& grid);

}  // namespace capfield
