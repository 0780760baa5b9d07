#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "capfield/inverse.hpp"
#include "capfield/prng.hpp"

using namespace capfield;

namespace {

const CapacitorSpec kSpec{2.0, 2.0, 0.5, 1.0};

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

TEST_CASE("regression on orthonormal rows recovers the labels") {
    const std::vector<std::vector<double>> feats{{1.0, 0.0}, {0.0, 1.0}};
    const std::vector<double> labels{0.3, 0.7};
    const RegressionModel model = fit_regression(feats, labels);
    REQUIRE(model.phi.size() == 2);
    CHECK(model.phi[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(model.phi[1] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("single-cell regression") {
    const RegressionModel model = fit_regression({{2.0}}, std::vector<double>{1.0});
    CHECK(model.phi[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("10x4 full-rank system matches the pseudoinverse") {
    // Fixed matrix and labels; expected phi frozen from an independent
    // least-squares solve.
    const std::vector<std::vector<double>> feats{
        {0.859232, -0.367249, -0.632162, -0.590879},
        {0.135450, 0.191089, 0.929029, 0.306354},
        {0.497813, 0.307140, 0.495430, 0.922613},
        {-0.983223, -0.787111, -0.402593, 0.312822},
        {0.619625, 0.744352, 0.929295, 0.447371},
        {0.284951, 0.434907, -0.064802, -0.348831},
        {-0.120711, 0.459378, 0.988029, 0.353747},
        {0.581645, -0.658171, -0.946301, 0.600740},
        {0.807445, -0.950648, -0.016505, 0.052510},
        {0.192732, -0.896085, 0.790179, 0.456532},
    };
    const std::vector<double> labels{0.754680, 0.500178, 0.748152, 0.176775, 0.275160,
                                     0.306975, 0.474485, 0.467499, 0.667608, 0.242442};
    const RegressionModel model = fit_regression(feats, labels);
    const std::vector<double> expect{0.526242444698669, -0.186221795584451, 0.097467940915630,
                                     0.296744673298907};
    REQUIRE(model.phi.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(model.phi[i] == doctest::Approx(expect[i]).epsilon(1e-8));
    }

    // Residual orthogonal to the column space.
    for (int j = 0; j < 4; ++j) {
        double acc = 0.0;
        for (int r = 0; r < 10; ++r) {
            acc += feats[r][j] * (model.predict(feats[r]) - labels[r]);
        }
        CHECK(std::abs(acc) < 1e-8);
    }
}

TEST_CASE("tall full-rank systems reproduce their training labels") {
    Prng rng(11);
    std::vector<std::vector<double>> feats(12, std::vector<double>(3));
    std::vector<double> labels(12);
    std::vector<double> true_phi{0.4, -1.1, 0.25};
    for (int r = 0; r < 12; ++r) {
        for (int c = 0; c < 3; ++c) feats[r][c] = rng.uniform(-1.0, 1.0);
        labels[r] = dot(feats[r], true_phi);
    }
    const RegressionModel model = fit_regression(feats, labels);
    for (int r = 0; r < 12; ++r) {
        CHECK(std::abs(model.predict(feats[r]) - labels[r]) <= 1e-6);
    }
}

TEST_CASE("wide systems yield the minimum-norm interpolant") {
    Prng rng(13);
    std::vector<std::vector<double>> feats(3, std::vector<double>(10));
    std::vector<double> labels(3);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 10; ++c) feats[r][c] = rng.uniform(-1.0, 1.0);
        labels[r] = rng.uniform(0.1, 0.9);
    }
    const RegressionModel model = fit_regression(feats, labels);
    for (int r = 0; r < 3; ++r) {
        CHECK(std::abs(model.predict(feats[r]) - labels[r]) <= 1e-8);
    }
    // Minimum-norm solutions live in the row space: phi = A^T alpha, so any
    // perturbation orthogonal to the rows that still interpolates is longer.
    // Spot-check by comparing against phi + a random row-space-orthogonal v.
    std::vector<double> v(10);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    // Project v off the rows (Gram-Schmidt against the 3 rows).
    for (int r = 0; r < 3; ++r) {
        const double coef = dot(v, feats[r]) / dot(feats[r], feats[r]);
        for (int c = 0; c < 10; ++c) v[c] -= coef * feats[r][c];
    }
    std::vector<double> longer = model.phi;
    for (int c = 0; c < 10; ++c) longer[c] += v[c];
    CHECK(norm(model.phi) <= norm(longer) + 1e-12);
}

TEST_CASE("all-zero feature matrix is rejected") {
    const std::vector<std::vector<double>> feats{{0.0, 0.0}, {0.0, 0.0}};
    CHECK_THROWS_AS(fit_regression(feats, std::vector<double>{0.1, 0.2}),
                    std::invalid_argument);
}

TEST_CASE("initial estimate rule: +0.2 below the midpoint, -0.2 above") {
    CHECK(initial_estimate_d(0.3, 0.2, kSpec) == doctest::Approx(0.5));
    CHECK(initial_estimate_d(0.5, 0.2, kSpec) == doctest::Approx(0.7));
    CHECK(initial_estimate_d(0.8, 0.2, kSpec) == doctest::Approx(0.6));
    CHECK_THROWS_AS(initial_estimate_d(1.9, -0.2, kSpec), std::invalid_argument);
}

TEST_CASE("initial estimate returns the SOR field at the offset d") {
    const GridSpec grid = GridSpec::make(kSpec, 9, 9);
    const SolverConfig solver;
    const Field est = initial_estimate(kSpec, grid, solver, 0.3, 0.2);
    const auto [direct, report] = solve_sor(kSpec.with_d(0.5), grid, solver);
    REQUIRE(report.converged);
    CHECK(est.values == direct.values);
}

TEST_CASE("hyperplane projection basics") {
    RegressionModel model;
    model.phi = {1.0, 0.0};
    const InverseResult r = invert_to_hyperplane(std::vector<double>{0.0, 0.0}, model, 0.5);
    CHECK(r.z_hat[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.z_hat[1] == 0.0);
    CHECK(r.objective <= 1e-10);

    // Fixed point: x0 already on the hyperplane.
    const InverseResult r2 = invert_to_hyperplane(r.z_hat, model, 0.5);
    CHECK(r2.z_hat == r.z_hat);

    RegressionModel degenerate;
    degenerate.phi = {0.0, 0.0};
    CHECK_THROWS_AS(invert_to_hyperplane(std::vector<double>{1.0, 1.0}, degenerate, 0.5),
                    std::invalid_argument);
}

TEST_CASE("projection is the closest point on the hyperplane") {
    Prng rng(21);
    RegressionModel model;
    model.phi.resize(8);
    std::vector<double> x0(8);
    for (double& v : model.phi) v = rng.uniform(-1.0, 1.0);
    for (double& v : x0) v = rng.uniform(-2.0, 2.0);
    const double d = rng.uniform(0.1, 0.9);

    const InverseResult r = invert_to_hyperplane(x0, model, d);
    CHECK(std::abs(dot(r.z_hat, model.phi) - d) <= 1e-10);

    std::vector<double> diff(8);
    for (int i = 0; i < 8; ++i) diff[i] = r.z_hat[i] - x0[i];
    const double best = norm(diff);

    for (int trial = 0; trial < 1000; ++trial) {
        // Random point on the hyperplane: project a random draw.
        std::vector<double> y(8);
        for (double& v : y) v = rng.uniform(-3.0, 3.0);
        const InverseResult yr = invert_to_hyperplane(y, model, d);
        for (int i = 0; i < 8; ++i) diff[i] = yr.z_hat[i] - x0[i];
        CHECK(best <= norm(diff) + 1e-9);
    }
}

TEST_CASE("projection idempotence and scale invariance") {
    Prng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        RegressionModel model;
        model.phi.resize(6);
        std::vector<double> x0(6);
        for (double& v : model.phi) v = rng.uniform(-1.0, 1.0);
        for (double& v : x0) v = rng.uniform(-2.0, 2.0);
        const double d = rng.uniform(0.1, 0.9);

        const InverseResult once = invert_to_hyperplane(x0, model, d);
        const InverseResult twice = invert_to_hyperplane(once.z_hat, model, d);
        for (int i = 0; i < 6; ++i) {
            CHECK(std::abs(twice.z_hat[i] - once.z_hat[i]) <= 1e-12);
        }

        // Scaling phi and d together leaves the hyperplane unchanged.
        RegressionModel scaled = model;
        const double c = 3.7;
        for (double& v : scaled.phi) v *= c;
        const InverseResult r_scaled = invert_to_hyperplane(x0, scaled, c * d);
        for (int i = 0; i < 6; ++i) {
            CHECK(r_scaled.z_hat[i] == doctest::Approx(once.z_hat[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("reconstruct_latent unscales the decoder output") {
    Prng rng(41);
    const std::vector<int> sizes{3, 5, 4};
    const std::vector<Activation> acts{Activation::Tanh, Activation::Tanh};
    const Mlp dec = init_xavier(sizes, acts, rng);
    const ScaleTransform scale;
    const std::vector<double> z{0.1, -0.2, 0.3};
    const std::vector<double> rec = reconstruct_latent(z, dec, scale);
    const std::vector<double> direct = forward(dec, z);
    REQUIRE(rec.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(rec[i] == doctest::Approx(direct[i] / 0.9).epsilon(1e-12));
    }

    Mlp zero_dec = dec;
    for (Layer& l : zero_dec.layers) {
        for (double& w : l.w) w = 0.0;
    }
    for (double v : reconstruct_latent(z, zero_dec, scale)) CHECK(v == 0.0);
}

TEST_CASE("raw-space projection lands exactly on the hyperplane") {
    const GridSpec grid = GridSpec::make(kSpec, 9, 9);
    const SolverConfig solver;
    std::vector<double> dv;
    for (int i = 0; i < 12; ++i) dv.push_back(0.15 + 0.05 * i);
    Dataset ds = generate_dataset(kSpec, grid, dv, solver, 0);
    ds = split_supervised(std::move(ds), 6, 5);

    const RegressionModel raw = fit_raw_regression(ds);
    const double d = 0.5;
    const std::vector<double> v_hat = inverse_raw_space(ds, solver, d, 0.2);
    CHECK(std::abs(raw.predict(v_hat) - d) <= 1e-10);

    Dataset unsup = ds;
    unsup.supervised.assign(unsup.supervised.size(), 0);
    CHECK_THROWS_AS(fit_raw_regression(unsup), std::invalid_argument);
}
