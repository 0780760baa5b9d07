#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "capfield/prng.hpp"

namespace capfield {

enum class Activation : unsigned char {
    Tanh = 0,
    Identity = 1,
};

struct Layer {
    int in = 0;
    int out = 0;
    Activation act = Activation::Tanh;
    std::vector<double> w;  // out x in, row-major
    std::vector<double> b;  // out
};

// Plain dense network. Layers chain: layer l input size equals layer l-1
// output size. Value semantics throughout; training code owns its copies.
struct Mlp {
    std::vector<Layer> layers;

    int input_size() const { return layers.empty() ? 0 : layers.front().in; }
    int output_size() const { return layers.empty() ? 0 : layers.back().out; }
    std::size_t param_count() const;
    void validate() const;
};

// Activations recorded by forward: acts[0] is the input, acts[l+1] the
// output of layer l. Enough to backpropagate (tanh' = 1 - a^2 needs only the
// post-activation value).
struct Tape {
    std::vector<std::vector<double>> acts;
};

std::vector<double> forward(const Mlp& net, std::span<const double> x);
std::vector<double> forward(const Mlp& net, std::span<const double> x, Tape& tape);

// Parameter gradients shaped like the network.
struct MlpGrad {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    static MlpGrad zeros_like(const Mlp& net);
    void reset();
    bool all_finite() const;
};

// Backpropagates output_grad through the tape, accumulating (+=) parameter
// gradients into grad. If input_grad is non-null it receives d(loss)/d(input),
// which is how composed networks chain.
void backward_accumulate(const Mlp& net, const Tape& tape, std::span<const double> output_grad,
                         MlpGrad& grad, std::vector<double>* input_grad = nullptr);

// Convenience wrapper returning fresh gradients.
MlpGrad backward(const Mlp& net, const Tape& tape, std::span<const double> output_grad,
                 std::vector<double>* input_grad = nullptr);

// Sum-of-squares loss: loss = sum (pred-target)^2, grad = 2 (pred-target).
std::pair<double, std::vector<double>> mse_loss(std::span<const double> pred,
                                                std::span<const double> target);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    long step = 0;
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;

    static AdamState for_net(const Mlp& net, const AdamConfig& cfg);
};

// Standard Adam update with bias correction. Rejects non-finite gradients so
// a diverging training run fails at the step that produced it.
void adam_step(Mlp& net, const MlpGrad& grad, AdamState& state);

// Xavier/Glorot uniform init: weights on [-s, s] with s = sqrt(6/(fan_in +
// fan_out)), biases zero. sizes = {in, h1, ..., out}; acts has one entry per
// layer.
Mlp init_xavier(std::span<const int> sizes, std::span<const Activation> acts, Prng& rng);

// Concatenates two networks into one (first's output feeds second's input);
// dimensions must chain.
Mlp compose(const Mlp& first, const Mlp& second);

// Model checkpoint format (little-endian): magic "CAPM", version u32,
// layer count u32, then per layer: in u32, out u32, activation u8,
// out x in f64 weights, out f64 biases.
void save_mlp(const Mlp& net, const std::filesystem::path& path);
Mlp load_mlp(const std::filesystem::path& path);

}  // namespace capfield
