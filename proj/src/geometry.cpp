#include "capfield/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace capfield {

namespace {
// Absolute slack for the plate membership test x <= d/2. Node coordinates
// are products ix*hx and pick up one ulp of noise; without the slack a node
// nominally at x = d/2 can fall off the plate.
constexpr double kPlateTol = 1e-9;
}  // namespace

void CapacitorSpec::validate() const {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("CapacitorSpec: a and b must be positive");
    }
    if (!std::isfinite(v0)) {
        throw std::invalid_argument("CapacitorSpec: v0 must be finite");
    }
    if (!(d > 0.0) || !(d < a)) {
        throw std::invalid_argument("CapacitorSpec: d must satisfy 0 < d < a, got d=" +
                                    std::to_string(d));
    }
}

GridSpec GridSpec::make(const CapacitorSpec& spec, int nx, int ny) {
    if (!(spec.a > 0.0) || !(spec.b > 0.0)) {
        throw std::invalid_argument("GridSpec: spec extents must be positive");
    }
    GridSpec g;
    g.nx = nx;
    g.ny = ny;
    g.hx = (spec.a / 2.0) / (nx - 1);
    g.hy = (spec.b / 2.0) / (ny - 1);
    g.validate();
    return g;
}

void GridSpec::validate() const {
    if (nx < 3 || ny < 3) {
        throw std::invalid_argument("GridSpec: need at least 3 nodes per axis");
    }
    if (!(hx > 0.0) || !(hy > 0.0)) {
        throw std::invalid_argument("GridSpec: spacings must be positive");
    }
}

double dirichlet_value(NodeClass c, const CapacitorSpec& spec) {
    switch (c) {
        case NodeClass::InnerPlate: return spec.v0;
        case NodeClass::OuterWall: return 0.0;
        default:
            throw std::invalid_argument("dirichlet_value: node is not Dirichlet");
    }
}

std::vector<NodeClass> classify_nodes(const CapacitorSpec& spec, const GridSpec& grid) {
    spec.validate();
    grid.validate();

    const double half_plate = spec.d / 2.0;
    std::vector<NodeClass> cls(static_cast<std::size_t>(grid.node_count()));

    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            NodeClass c;
            // The plate never reaches the outer wall (d < a), so the corner
            // node at x = a/2, y = 0 is always wall.
            const bool on_plate =
                iy == 0 && ix != grid.nx - 1 && grid.x(ix) <= half_plate + kPlateTol;
            if (on_plate) {
                c = NodeClass::InnerPlate;
            } else if (ix == grid.nx - 1 || iy == grid.ny - 1) {
                c = NodeClass::OuterWall;
            } else if (ix == 0) {
                c = NodeClass::SymmetryX;
            } else if (iy == 0) {
                c = NodeClass::SymmetryY;
            } else {
                c = NodeClass::Interior;
            }
            cls[static_cast<std::size_t>(grid.index(ix, iy))] = c;
        }
    }
    return cls;
}

}  // namespace capfield
