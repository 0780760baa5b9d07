#include "capfield/inverse.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace capfield {

namespace {

// Dense GEPP solve for the small normal/Gram systems; A is k x k row-major
// and consumed in place. Returns false on a degenerate pivot so the caller
// can retry with a ridge.
bool try_solve_linear(std::vector<double>& a, std::vector<double>& b, int k) {
    const std::size_t n = static_cast<std::size_t>(k);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double cand = std::abs(a[r * n + col]);
            if (cand > best) { best = cand; pivot = r; }
        }
        if (best < 1e-13) return false;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r * n + col] / a[col * n + col];
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
            b[r] -= factor * b[col];
        }
    }
    for (std::size_t ri = n; ri-- > 0;) {
        double acc = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) acc -= a[ri * n + c] * b[c];
        b[ri] = acc / a[ri * n + ri];
    }
    return true;
}

std::vector<double> solve_with_ridge(std::vector<double> a, std::vector<double> b, int k) {
    std::vector<double> a_try = a;
    std::vector<double> b_try = b;
    if (try_solve_linear(a_try, b_try, k)) return b_try;
    // Rank-deficient: retry with a tiny ridge on the diagonal.
    for (int i = 0; i < k; ++i) a[static_cast<std::size_t>(i) * k + i] += 1e-10;
    if (!try_solve_linear(a, b, k)) {
        throw std::runtime_error("fit_regression: system is singular even with ridge");
    }
    return b;
}

}  // namespace

double RegressionModel::predict(std::span<const double> features) const {
    const int p = feature_dim();
    if (static_cast<int>(features.size()) != p) {
        throw std::invalid_argument("RegressionModel: feature length mismatch");
    }
    double acc = includes_bias ? phi.back() : 0.0;
    for (int i = 0; i < p; ++i) acc += phi[static_cast<std::size_t>(i)] * features[static_cast<std::size_t>(i)];
    return acc;
}

RegressionModel fit_regression(const std::vector<std::vector<double>>& features,
                               std::span<const double> labels, bool includes_bias) {
    const int m = static_cast<int>(features.size());
    if (m < 1 || labels.size() != features.size()) {
        throw std::invalid_argument("fit_regression: need m >= 1 rows with matching labels");
    }
    const int p_raw = static_cast<int>(features.front().size());
    if (p_raw < 1) throw std::invalid_argument("fit_regression: need p >= 1 features");
    for (const auto& row : features) {
        if (static_cast<int>(row.size()) != p_raw) {
            throw std::invalid_argument("fit_regression: ragged feature matrix");
        }
    }
    bool any_nonzero = false;
    for (const auto& row : features) {
        for (double v : row) {
            if (v != 0.0) { any_nonzero = true; break; }
        }
        if (any_nonzero) break;
    }
    if (!any_nonzero) {
        throw std::invalid_argument("fit_regression: all-zero feature matrix");
    }

    const int p = p_raw + (includes_bias ? 1 : 0);
    auto feat = [&](int row, int col) -> double {
        return col < p_raw ? features[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)]
                           : 1.0;
    };

    RegressionModel model;
    model.includes_bias = includes_bias;
    if (p <= m) {
        // Normal equations: (A^T A) phi = A^T y.
        std::vector<double> gram(static_cast<std::size_t>(p) * p, 0.0);
        std::vector<double> rhs(static_cast<std::size_t>(p), 0.0);
        for (int r = 0; r < m; ++r) {
            for (int i = 0; i < p; ++i) {
                const double fi = feat(r, i);
                rhs[static_cast<std::size_t>(i)] += fi * labels[static_cast<std::size_t>(r)];
                for (int j = 0; j < p; ++j) {
                    gram[static_cast<std::size_t>(i) * p + j] += fi * feat(r, j);
                }
            }
        }
        model.phi = solve_with_ridge(std::move(gram), std::move(rhs), p);
    } else {
        // Wide system: minimum-norm solution phi = A^T (A A^T)^{-1} y.
        std::vector<double> gram(static_cast<std::size_t>(m) * m, 0.0);
        for (int r = 0; r < m; ++r) {
            for (int s = r; s < m; ++s) {
                double acc = 0.0;
                for (int i = 0; i < p; ++i) acc += feat(r, i) * feat(s, i);
                gram[static_cast<std::size_t>(r) * m + s] = acc;
                gram[static_cast<std::size_t>(s) * m + r] = acc;
            }
        }
        std::vector<double> y(labels.begin(), labels.end());
        const std::vector<double> alpha = solve_with_ridge(std::move(gram), std::move(y), m);
        model.phi.assign(static_cast<std::size_t>(p), 0.0);
        for (int i = 0; i < p; ++i) {
            double acc = 0.0;
            for (int r = 0; r < m; ++r) acc += feat(r, i) * alpha[static_cast<std::size_t>(r)];
            model.phi[static_cast<std::size_t>(i)] = acc;
        }
    }
    return model;
}

double initial_estimate_d(double d_true, double offset, const CapacitorSpec& spec) {
    const double d_init = d_true <= 0.5 ? d_true + offset : d_true - offset;
    if (!(d_init > 0.0) || !(d_init < spec.a)) {
        throw std::invalid_argument("initial_estimate: offset d=" + std::to_string(d_init) +
                                    " falls outside (0, a)");
    }
    return d_init;
}

Field initial_estimate(const CapacitorSpec& spec, const GridSpec& grid,
                       const SolverConfig& solver_cfg, double d_true, double offset) {
    const double d_init = initial_estimate_d(d_true, offset, spec);
    auto [field, report] = solve_sor(spec.with_d(d_init), grid, solver_cfg);
    if (!report.converged) {
        throw std::runtime_error("initial_estimate: SOR did not converge for d=" +
                                 std::to_string(d_init));
    }
    return std::move(field);
}

InverseResult invert_to_hyperplane(std::span<const double> x0, const RegressionModel& model,
                                   double d) {
    const int p = model.feature_dim();
    if (static_cast<int>(x0.size()) != p) {
        throw std::invalid_argument("invert_to_hyperplane: x0 length mismatch");
    }
    double norm2 = 0.0;
    for (int i = 0; i < p; ++i) {
        norm2 += model.phi[static_cast<std::size_t>(i)] * model.phi[static_cast<std::size_t>(i)];
    }
    if (!(norm2 > 0.0)) {
        throw std::invalid_argument("invert_to_hyperplane: degenerate model, phi = 0");
    }

    const double excess = model.predict(x0) - d;
    InverseResult result;
    result.z_hat.assign(x0.begin(), x0.end());
    const double step = excess / norm2;
    for (int i = 0; i < p; ++i) {
        result.z_hat[static_cast<std::size_t>(i)] -= step * model.phi[static_cast<std::size_t>(i)];
    }
    result.objective = std::abs(model.predict(result.z_hat) - d);
    return result;
}

std::vector<double> reconstruct_latent(std::span<const double> z_hat, const Mlp& decoder,
                                       const ScaleTransform& scale) {
    return scale.invert(forward(decoder, z_hat));
}

RegressionModel fit_raw_regression(const Dataset& ds) {
    std::vector<std::vector<double>> feats;
    std::vector<double> labels;
    for (int i = 0; i < ds.size(); ++i) {
        if (!ds.supervised[static_cast<std::size_t>(i)]) continue;
        feats.push_back(ds.samples[static_cast<std::size_t>(i)].field.values);
        labels.push_back(ds.samples[static_cast<std::size_t>(i)].d);
    }
    if (feats.empty()) {
        throw std::invalid_argument("fit_raw_regression: no supervised samples");
    }
    return fit_regression(feats, labels);
}

std::vector<double> inverse_raw_space(const Dataset& ds, const SolverConfig& solver_cfg, double d,
                                      double offset) {
    const RegressionModel model = fit_raw_regression(ds);
    const Field x0 = initial_estimate(ds.spec, ds.grid, solver_cfg, d, offset);
    InverseResult r = invert_to_hyperplane(x0.values, model, d);
    r.init_d = initial_estimate_d(d, offset, ds.spec);
    return std::move(r.z_hat);
}

}  // namespace capfield
