#include "capfield/net.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "capfield/binio.hpp"

namespace capfield {

using binio::IoError;
using binio::IoErrorCode;

namespace {
constexpr char kMagic[4] = {'C', 'A', 'P', 'M'};
constexpr std::uint32_t kVersion = 1;

double activate(Activation act, double z) {
    return act == Activation::Tanh ? std::tanh(z) : z;
}

// Derivative from the post-activation value.
double activate_grad(Activation act, double a) {
    return act == Activation::Tanh ? 1.0 - a * a : 1.0;
}
}  // namespace

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.w.size() + l.b.size();
    return n;
}

void Mlp::validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (l.in < 1 || l.out < 1) {
            throw std::invalid_argument("Mlp: layer sizes must be positive");
        }
        if (l.w.size() != static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out) ||
            l.b.size() != static_cast<std::size_t>(l.out)) {
            throw std::invalid_argument("Mlp: parameter storage does not match layer shape");
        }
        if (i > 0 && layers[i - 1].out != l.in) {
            throw std::invalid_argument("Mlp: layer dimensions do not chain at layer " +
                                        std::to_string(i));
        }
    }
}

std::vector<double> forward(const Mlp& net, std::span<const double> x) {
    Tape tape;
    return forward(net, x, tape);
}

std::vector<double> forward(const Mlp& net, std::span<const double> x, Tape& tape) {
    if (net.layers.empty()) {
        throw std::invalid_argument("forward: empty network");
    }
    if (static_cast<int>(x.size()) != net.input_size()) {
        throw std::invalid_argument("forward: input length " + std::to_string(x.size()) +
                                    " does not match first layer size " +
                                    std::to_string(net.input_size()));
    }
    tape.acts.assign(net.layers.size() + 1, {});
    tape.acts[0].assign(x.begin(), x.end());

    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        const std::vector<double>& in = tape.acts[li];
        std::vector<double>& out = tape.acts[li + 1];
        out.resize(static_cast<std::size_t>(l.out));
        for (int o = 0; o < l.out; ++o) {
            const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
            double z = l.b[static_cast<std::size_t>(o)];
            for (int i = 0; i < l.in; ++i) z += wrow[i] * in[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(o)] = activate(l.act, z);
        }
    }
    return tape.acts.back();
}

MlpGrad MlpGrad::zeros_like(const Mlp& net) {
    MlpGrad g;
    g.w.reserve(net.layers.size());
    g.b.reserve(net.layers.size());
    for (const Layer& l : net.layers) {
        g.w.emplace_back(l.w.size(), 0.0);
        g.b.emplace_back(l.b.size(), 0.0);
    }
    return g;
}

void MlpGrad::reset() {
    for (auto& v : w) v.assign(v.size(), 0.0);
    for (auto& v : b) v.assign(v.size(), 0.0);
}

bool MlpGrad::all_finite() const {
    for (const auto& layer : w) {
        for (double v : layer) {
            if (!std::isfinite(v)) return false;
        }
    }
    for (const auto& layer : b) {
        for (double v : layer) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

void backward_accumulate(const Mlp& net, const Tape& tape, std::span<const double> output_grad,
                         MlpGrad& grad, std::vector<double>* input_grad) {
    const std::size_t nl = net.layers.size();
    if (tape.acts.size() != nl + 1) {
        throw std::invalid_argument("backward: tape does not match network");
    }
    if (grad.w.size() != nl) {
        throw std::invalid_argument("backward: gradient storage does not match network");
    }
    if (static_cast<int>(output_grad.size()) != net.output_size()) {
        throw std::invalid_argument("backward: output_grad length mismatch");
    }

    std::vector<double> delta(output_grad.begin(), output_grad.end());
    {
        const Layer& last = net.layers[nl - 1];
        const std::vector<double>& a = tape.acts[nl];
        for (int o = 0; o < last.out; ++o) {
            delta[static_cast<std::size_t>(o)] *=
                activate_grad(last.act, a[static_cast<std::size_t>(o)]);
        }
    }

    std::vector<double> prev;
    for (std::size_t li = nl; li-- > 0;) {
        const Layer& l = net.layers[li];
        const std::vector<double>& a_in = tape.acts[li];
        std::vector<double>& gw = grad.w[li];
        std::vector<double>& gb = grad.b[li];

        for (int o = 0; o < l.out; ++o) {
            const double dlt = delta[static_cast<std::size_t>(o)];
            gb[static_cast<std::size_t>(o)] += dlt;
            double* gwrow = gw.data() + static_cast<std::size_t>(o) * l.in;
            for (int i = 0; i < l.in; ++i) gwrow[i] += dlt * a_in[static_cast<std::size_t>(i)];
        }

        const bool need_input = li > 0 || input_grad != nullptr;
        if (!need_input) break;

        prev.assign(static_cast<std::size_t>(l.in), 0.0);
        for (int o = 0; o < l.out; ++o) {
            const double dlt = delta[static_cast<std::size_t>(o)];
            const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
            for (int i = 0; i < l.in; ++i) prev[static_cast<std::size_t>(i)] += wrow[i] * dlt;
        }

        if (li > 0) {
            const Layer& below = net.layers[li - 1];
            const std::vector<double>& a_below = tape.acts[li];
            for (int i = 0; i < l.in; ++i) {
                prev[static_cast<std::size_t>(i)] *=
                    activate_grad(below.act, a_below[static_cast<std::size_t>(i)]);
            }
            delta = prev;
        } else {
            *input_grad = prev;
        }
    }
}

MlpGrad backward(const Mlp& net, const Tape& tape, std::span<const double> output_grad,
                 std::vector<double>* input_grad) {
    MlpGrad g = MlpGrad::zeros_like(net);
    backward_accumulate(net, tape, output_grad, g, input_grad);
    return g;
}

std::pair<double, std::vector<double>> mse_loss(std::span<const double> pred,
                                                std::span<const double> target) {
    if (pred.size() != target.size()) {
        throw std::invalid_argument("mse_loss: length mismatch");
    }
    double loss = 0.0;
    std::vector<double> grad(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - target[i];
        loss += e * e;
        grad[i] = 2.0 * e;
    }
    return {loss, std::move(grad)};
}

AdamState AdamState::for_net(const Mlp& net, const AdamConfig& cfg) {
    AdamState st;
    st.cfg = cfg;
    for (const Layer& l : net.layers) {
        st.m_w.emplace_back(l.w.size(), 0.0);
        st.v_w.emplace_back(l.w.size(), 0.0);
        st.m_b.emplace_back(l.b.size(), 0.0);
        st.v_b.emplace_back(l.b.size(), 0.0);
    }
    return st;
}

namespace {
void adam_apply(std::vector<double>& params, const std::vector<double>& g,
                std::vector<double>& m, std::vector<double>& v, const AdamConfig& cfg,
                double bc1, double bc2) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}
}  // namespace

void adam_step(Mlp& net, const MlpGrad& grad, AdamState& state) {
    if (grad.w.size() != net.layers.size() || state.m_w.size() != net.layers.size()) {
        throw std::invalid_argument("adam_step: shapes do not agree");
    }
    if (!grad.all_finite()) {
        throw std::runtime_error("adam_step: non-finite gradient");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        adam_apply(net.layers[li].w, grad.w[li], state.m_w[li], state.v_w[li], state.cfg, bc1, bc2);
        adam_apply(net.layers[li].b, grad.b[li], state.m_b[li], state.v_b[li], state.cfg, bc1, bc2);
    }
}

Mlp init_xavier(std::span<const int> sizes, std::span<const Activation> acts, Prng& rng) {
    if (sizes.size() < 2 || acts.size() != sizes.size() - 1) {
        throw std::invalid_argument("init_xavier: need n>=2 sizes and n-1 activations");
    }
    Mlp net;
    net.layers.resize(acts.size());
    for (std::size_t li = 0; li < acts.size(); ++li) {
        const int fan_in = sizes[li];
        const int fan_out = sizes[li + 1];
        if (fan_in < 1 || fan_out < 1) {
            throw std::invalid_argument("init_xavier: zero-size layer");
        }
        Layer& l = net.layers[li];
        l.in = fan_in;
        l.out = fan_out;
        l.act = acts[li];
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        l.w.resize(static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out));
        for (double& w : l.w) w = rng.uniform(-s, s);
        l.b.assign(static_cast<std::size_t>(fan_out), 0.0);
    }
    return net;
}

Mlp compose(const Mlp& first, const Mlp& second) {
    if (first.output_size() != second.input_size()) {
        throw std::invalid_argument("compose: dimensions do not chain");
    }
    Mlp out = first;
    out.layers.insert(out.layers.end(), second.layers.begin(), second.layers.end());
    out.validate();
    return out;
}

void save_mlp(const Mlp& net, const std::filesystem::path& path) {
    net.validate();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError(IoErrorCode::OpenFailed, "cannot open " + path.string() + " for writing");
    }
    binio::put_magic(os, kMagic);
    binio::put_u32(os, kVersion);
    binio::put_u32(os, static_cast<std::uint32_t>(net.layers.size()));
    for (const Layer& l : net.layers) {
        binio::put_u32(os, static_cast<std::uint32_t>(l.in));
        binio::put_u32(os, static_cast<std::uint32_t>(l.out));
        binio::put_u8(os, static_cast<std::uint8_t>(l.act));
        for (double w : l.w) binio::put_f64(os, w);
        for (double b : l.b) binio::put_f64(os, b);
    }
    if (!os) {
        throw IoError(IoErrorCode::OpenFailed, "write failed for " + path.string());
    }
}

Mlp load_mlp(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError(IoErrorCode::OpenFailed, "cannot open " + path.string());
    }
    binio::check_magic(is, kMagic, "checkpoint");
    const std::uint32_t version = binio::get_u32(is);
    if (version != kVersion) {
        throw IoError(IoErrorCode::BadVersion,
                      "checkpoint version mismatch: got " + std::to_string(version));
    }
    const std::uint32_t nl = binio::get_u32(is);
    Mlp net;
    net.layers.resize(nl);
    for (std::uint32_t li = 0; li < nl; ++li) {
        Layer& l = net.layers[li];
        l.in = static_cast<int>(binio::get_u32(is));
        l.out = static_cast<int>(binio::get_u32(is));
        const std::uint8_t act = binio::get_u8(is);
        if (act > 1) {
            throw IoError(IoErrorCode::BadValue, "checkpoint has unknown activation id");
        }
        l.act = static_cast<Activation>(act);
        if (l.in < 1 || l.out < 1 || l.in > 1000000 || l.out > 1000000) {
            throw IoError(IoErrorCode::BadValue, "checkpoint layer shape out of range");
        }
        l.w.resize(static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out));
        for (double& w : l.w) w = binio::get_f64(is);
        l.b.resize(static_cast<std::size_t>(l.out));
        for (double& b : l.b) b = binio::get_f64(is);
    }
    net.validate();
    return net;
}

}  // namespace capfield
