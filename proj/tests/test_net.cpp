#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "capfield/binio.hpp"
#include "capfield/net.hpp"

using namespace capfield;

namespace {

Mlp make_net(std::initializer_list<int> sizes, std::initializer_list<Activation> acts,
             std::uint64_t seed) {
    Prng rng(seed);
    return init_xavier(std::vector<int>(sizes), std::vector<Activation>(acts), rng);
}

Mlp zeroed(Mlp net) {
    for (Layer& l : net.layers) {
        for (double& w : l.w) w = 0.0;
        for (double& b : l.b) b = 0.0;
    }
    return net;
}

// Scalar loss f(params) = sum(forward(x))^2-ish probe used by the finite
// difference check: L = 0.5 * sum(out .* out).
double probe_loss(const Mlp& net, const std::vector<double>& x) {
    const std::vector<double> out = forward(net, x);
    double l = 0.0;
    for (double v : out) l += 0.5 * v * v;
    return l;
}

}  // namespace

TEST_CASE("all-zero tanh network maps anything to zero") {
    const Mlp net = zeroed(make_net({3, 4, 2}, {Activation::Tanh, Activation::Tanh}, 1));
    const std::vector<double> out = forward(net, std::vector<double>{0.3, -0.7, 2.0});
    REQUIRE(out.size() == 2);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
}

TEST_CASE("identity layer with unit weights passes the input through") {
    Mlp net;
    net.layers.push_back(Layer{3, 3, Activation::Identity,
                               {1, 0, 0, 0, 1, 0, 0, 0, 1},
                               {0, 0, 0}});
    const std::vector<double> x{0.5, -1.25, 3.0};
    CHECK(forward(net, x) == x);
}

TEST_CASE("2-2-1 tanh composition matches the hand-computed value") {
    Mlp net;
    net.layers.push_back(Layer{2, 2, Activation::Tanh, {0.3, -0.2, 0.1, 0.4}, {0.05, -0.1}});
    net.layers.push_back(Layer{2, 1, Activation::Tanh, {0.7, -0.5}, {0.2}});

    Tape tape;
    const std::vector<double> out = forward(net, std::vector<double>{0.4, -0.3}, tape);
    CHECK(tape.acts[1][0] == doctest::Approx(0.22602835227867091).epsilon(1e-12));
    CHECK(tape.acts[1][1] == doctest::Approx(-0.17808086811733018).epsilon(1e-12));
    CHECK(out[0] == doctest::Approx(0.41964435210098278).epsilon(1e-12));
}

TEST_CASE("dimension mismatches are rejected") {
    const Mlp net = make_net({3, 2}, {Activation::Tanh}, 1);
    CHECK_THROWS_AS(forward(net, std::vector<double>{1.0, 2.0}), std::invalid_argument);

    Tape tape;
    forward(net, std::vector<double>{1.0, 2.0, 3.0}, tape);
    MlpGrad grad = MlpGrad::zeros_like(net);
    CHECK_THROWS_AS(backward_accumulate(net, tape, std::vector<double>{1.0, 2.0, 3.0}, grad),
                    std::invalid_argument);
}

TEST_CASE("zero output gradient produces zero parameter gradients") {
    const Mlp net = make_net({4, 3, 2}, {Activation::Tanh, Activation::Tanh}, 7);
    Tape tape;
    forward(net, std::vector<double>{0.1, 0.2, 0.3, 0.4}, tape);
    const MlpGrad grad = backward(net, tape, std::vector<double>{0.0, 0.0});
    for (const auto& layer : grad.w) {
        for (double g : layer) CHECK(g == 0.0);
    }
    for (const auto& layer : grad.b) {
        for (double g : layer) CHECK(g == 0.0);
    }
}

TEST_CASE("backward is linear in the output gradient") {
    const Mlp net = make_net({4, 3, 2}, {Activation::Tanh, Activation::Tanh}, 7);
    Tape tape;
    forward(net, std::vector<double>{0.1, -0.2, 0.3, 0.4}, tape);
    const std::vector<double> og{0.7, -1.3};
    const std::vector<double> og2{1.4, -2.6};
    const MlpGrad g1 = backward(net, tape, og);
    const MlpGrad g2 = backward(net, tape, og2);
    for (std::size_t li = 0; li < g1.w.size(); ++li) {
        for (std::size_t i = 0; i < g1.w[li].size(); ++i) {
            CHECK(g2.w[li][i] == doctest::Approx(2.0 * g1.w[li][i]).epsilon(1e-13));
        }
        for (std::size_t i = 0; i < g1.b[li].size(); ++i) {
            CHECK(g2.b[li][i] == doctest::Approx(2.0 * g1.b[li][i]).epsilon(1e-13));
        }
    }
}

TEST_CASE("backprop matches central finite differences on a random 3-layer net") {
    Mlp net = make_net({5, 7, 6, 3}, {Activation::Tanh, Activation::Tanh, Activation::Identity},
                       99);
    Prng rng(123);
    std::vector<double> x(5);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);

    // Analytic gradient of probe_loss: output grad = out.
    Tape tape;
    const std::vector<double> out = forward(net, x, tape);
    std::vector<double> og = out;
    const MlpGrad grad = backward(net, tape, og);

    const double h = 1e-5;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        Layer& l = net.layers[li];
        for (std::size_t i = 0; i < l.w.size(); ++i) {
            const double keep = l.w[i];
            l.w[i] = keep + h;
            const double up = probe_loss(net, x);
            l.w[i] = keep - h;
            const double dn = probe_loss(net, x);
            l.w[i] = keep;
            const double fd = (up - dn) / (2.0 * h);
            const double an = grad.w[li][i];
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
            CAPTURE(li);
            CAPTURE(i);
            CHECK(rel < 1e-4);
        }
        for (std::size_t i = 0; i < l.b.size(); ++i) {
            const double keep = l.b[i];
            l.b[i] = keep + h;
            const double up = probe_loss(net, x);
            l.b[i] = keep - h;
            const double dn = probe_loss(net, x);
            l.b[i] = keep;
            const double fd = (up - dn) / (2.0 * h);
            const double an = grad.b[li][i];
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("mse_loss basics and brute-force oracle") {
    {
        const std::vector<double> p{1.0, 2.0};
        auto [loss, grad] = mse_loss(p, p);
        CHECK(loss == 0.0);
        CHECK(grad == std::vector<double>{0.0, 0.0});
    }
    {
        auto [loss, grad] = mse_loss(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 0.0});
        CHECK(loss == 1.0);
        CHECK(grad == std::vector<double>{2.0, 0.0});
    }
    {
        Prng rng(5);
        std::vector<double> p(10), t(10);
        for (double& v : p) v = rng.uniform(-2.0, 2.0);
        for (double& v : t) v = rng.uniform(-2.0, 2.0);
        auto [loss, grad] = mse_loss(p, t);
        double expect = 0.0;
        for (int i = 0; i < 10; ++i) expect += (p[i] - t[i]) * (p[i] - t[i]);
        CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK_THROWS_AS(mse_loss(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                    std::invalid_argument);
}

TEST_CASE("adam: zero gradients leave parameters unchanged but advance the step") {
    Mlp net = make_net({2, 2}, {Activation::Tanh}, 3);
    const Mlp before = net;
    AdamState st = AdamState::for_net(net, AdamConfig{});
    adam_step(net, MlpGrad::zeros_like(net), st);
    CHECK(st.step == 1);
    CHECK(net.layers[0].w == before.layers[0].w);
    CHECK(net.layers[0].b == before.layers[0].b);
}

TEST_CASE("adam: first step moves a unit-gradient parameter by about lr") {
    Mlp net;
    net.layers.push_back(Layer{1, 1, Activation::Identity, {1.0}, {0.0}});
    AdamState st = AdamState::for_net(net, AdamConfig{0.001, 0.9, 0.999, 1e-8});
    MlpGrad g = MlpGrad::zeros_like(net);
    g.w[0][0] = 1.0;
    adam_step(net, g, st);
    CHECK(net.layers[0].w[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-7));
    CHECK(net.layers[0].b[0] == 0.0);
}

TEST_CASE("adam: 100 descent steps on p^2 from p=1") {
    Mlp net;
    net.layers.push_back(Layer{1, 1, Activation::Identity, {1.0}, {0.0}});
    AdamState st = AdamState::for_net(net, AdamConfig{0.01, 0.9, 0.999, 1e-8});
    MlpGrad g = MlpGrad::zeros_like(net);
    for (int i = 0; i < 100; ++i) {
        g.w[0][0] = 2.0 * net.layers[0].w[0];
        adam_step(net, g, st);
    }
    CHECK(std::abs(net.layers[0].w[0]) < 0.9);
    // Frozen from an independent scalar run of the same schedule.
    CHECK(net.layers[0].w[0] == doctest::Approx(0.22444604523187908).epsilon(1e-10));
}

TEST_CASE("adam rejects non-finite gradients") {
    Mlp net = make_net({2, 2}, {Activation::Tanh}, 3);
    AdamState st = AdamState::for_net(net, AdamConfig{});
    MlpGrad g = MlpGrad::zeros_like(net);
    g.w[0][1] = std::nan("");
    CHECK_THROWS_AS(adam_step(net, g, st), std::runtime_error);
}

TEST_CASE("xavier init: deterministic, bounded, zero biases") {
    const Mlp a = make_net({10, 20, 5}, {Activation::Tanh, Activation::Tanh}, 17);
    const Mlp b = make_net({10, 20, 5}, {Activation::Tanh, Activation::Tanh}, 17);
    for (std::size_t li = 0; li < a.layers.size(); ++li) {
        CHECK(a.layers[li].w == b.layers[li].w);
        const double s =
            std::sqrt(6.0 / (a.layers[li].in + a.layers[li].out));
        for (double w : a.layers[li].w) CHECK(std::abs(w) <= s);
        for (double bias : a.layers[li].b) CHECK(bias == 0.0);
    }

    const Mlp c = make_net({10, 20, 5}, {Activation::Tanh, Activation::Tanh}, 18);
    CHECK(a.layers[0].w != c.layers[0].w);
}

TEST_CASE("xavier init: sample mean of a 100x100 layer is near zero") {
    const Mlp net = make_net({100, 100}, {Activation::Tanh}, 1);
    double mean = 0.0;
    for (double w : net.layers[0].w) mean += w;
    mean /= static_cast<double>(net.layers[0].w.size());
    CHECK(std::abs(mean) < 0.01);
}

TEST_CASE("xavier init rejects zero-size layers") {
    Prng rng(1);
    const std::vector<int> sizes{4, 0, 2};
    const std::vector<Activation> acts{Activation::Tanh, Activation::Tanh};
    CHECK_THROWS_AS(init_xavier(sizes, acts, rng), std::invalid_argument);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    const Mlp net = make_net({6, 4, 2}, {Activation::Tanh, Activation::Identity}, 33);
    const auto path = std::filesystem::temp_directory_path() / "capfield_net_rt.capm";
    save_mlp(net, path);
    const Mlp loaded = load_mlp(path);
    REQUIRE(loaded.layers.size() == net.layers.size());
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        CHECK(loaded.layers[li].in == net.layers[li].in);
        CHECK(loaded.layers[li].out == net.layers[li].out);
        CHECK(loaded.layers[li].act == net.layers[li].act);
        CHECK(loaded.layers[li].w == net.layers[li].w);
        CHECK(loaded.layers[li].b == net.layers[li].b);
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects corrupted files") {
    const Mlp net = make_net({3, 2}, {Activation::Tanh}, 1);
    const auto path = std::filesystem::temp_directory_path() / "capfield_net_bad.capm";
    save_mlp(net, path);

    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(load_mlp(path), binio::IoError);
    std::filesystem::remove(path);
}

TEST_CASE("compose chains two networks") {
    const Mlp a = make_net({3, 4}, {Activation::Tanh}, 1);
    const Mlp b = make_net({4, 2}, {Activation::Identity}, 2);
    const Mlp chain = compose(a, b);
    const std::vector<double> x{0.1, 0.2, 0.3};
    CHECK(forward(chain, x) == forward(b, forward(a, x)));

    const Mlp bad = make_net({5, 2}, {Activation::Identity}, 3);
    CHECK_THROWS_AS(compose(a, bad), std::invalid_argument);
}
