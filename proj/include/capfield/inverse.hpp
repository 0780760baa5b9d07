#pragma once

#include <span>
#include <vector>

#include "capfield/dataset.hpp"
#include "capfield/net.hpp"

namespace capfield {

// Linear map from feature vectors (latent codes or raw fields) to the
// boundary parameter d. With includes_bias the last coefficient is an
// intercept applied to an implicit constant-1 feature.
struct RegressionModel {
    std::vector<double> phi;
    bool includes_bias = false;

    int feature_dim() const {
        return static_cast<int>(phi.size()) - (includes_bias ? 1 : 0);
    }
    double predict(std::span<const double> features) const;
};

struct InverseResult {
    std::vector<double> z_hat;
    double objective = 0.0;  // |z_hat . phi - d| after projection
    double init_d = 0.0;
};

// Minimum-norm least squares: normal equations for tall systems, the dual
// (Gram) form for wide ones, with a 1e-10 ridge retry if elimination hits a
// degenerate pivot.
RegressionModel fit_regression(const std::vector<std::vector<double>>& features,
                               std::span<const double> labels, bool includes_bias = false);

// The deliberately offset starting guess: d_init = d_true + offset when
// d_true <= 0.5, else d_true - offset, kept inside (0, a).
double initial_estimate_d(double d_true, double offset, const CapacitorSpec& spec);

// Fresh SOR solution at the offset d; latent pipelines encode it afterwards.
Field initial_estimate(const CapacitorSpec& spec, const GridSpec& grid,
                       const SolverConfig& solver_cfg, double d_true, double offset = 0.2);

// Closest point to x0 on the hyperplane {x : x.phi = d}:
// x_hat = x0 - ((x0.phi - d)/|phi|^2) phi. Exact minimizer, no iteration.
InverseResult invert_to_hyperplane(std::span<const double> x0, const RegressionModel& model,
                                   double d);

// Decoder forward pass on a latent point, unscaled to physical units.
std::vector<double> reconstruct_latent(std::span<const double> z_hat, const Mlp& decoder,
                                       const ScaleTransform& scale);

// Raw-field regression fitted on the supervised samples (p = N features).
RegressionModel fit_raw_regression(const Dataset& ds);

// Full raw-space pipeline: offset initial estimate projected onto the
// raw-field hyperplane for d. No encoder or decoder involved; the result is
// a physical field vector.
std::vector<double> inverse_raw_space(const Dataset& ds, const SolverConfig& solver_cfg, double d,
                                      double offset = 0.2);

}  // namespace capfield
