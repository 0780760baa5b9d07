#include "capfield/models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "capfield/binio.hpp"

namespace capfield {

void TrainConfig::validate() const {
    if (lambda < 0.0) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (latent_dim < 1 || hidden < 1 || boundary_hidden < 1 || coord_hidden < 1) {
        throw std::invalid_argument("TrainConfig: layer dims must be >= 1");
    }
    if (mu < 0.0 || neumann_weight < 0.0) {
        throw std::invalid_argument("TrainConfig: penalty weights must be >= 0");
    }
    scale.validate();
}

namespace {

// Fixed init roles so separately trained components never share or shift
// each other's random streams.
enum InitRole : std::uint64_t { kEncoder = 0, kDecoder = 1, kBoundary = 2, kCoord = 3 };

Mlp init_encoder(int n, const TrainConfig& cfg) {
    Prng rng(Prng::derive(cfg.seed, kEncoder));
    const int sizes[] = {n, cfg.hidden, cfg.latent_dim};
    const Activation acts[] = {Activation::Tanh, Activation::Tanh};
    return init_xavier(sizes, acts, rng);
}

Mlp init_decoder(int n, const TrainConfig& cfg) {
    Prng rng(Prng::derive(cfg.seed, kDecoder));
    const int sizes[] = {cfg.latent_dim, cfg.hidden, n};
    const Activation acts[] = {Activation::Tanh, Activation::Tanh};
    return init_xavier(sizes, acts, rng);
}

Mlp init_boundary(const TrainConfig& cfg) {
    Prng rng(Prng::derive(cfg.seed, kBoundary));
    const int sizes[] = {1, cfg.boundary_hidden, cfg.latent_dim};
    const Activation acts[] = {
        cfg.boundary_linear ? Activation::Identity : Activation::Tanh,
        Activation::Identity,
    };
    return init_xavier(sizes, acts, rng);
}

Mlp init_coord(const TrainConfig& cfg) {
    Prng rng(Prng::derive(cfg.seed, kCoord));
    const int sizes[] = {2, cfg.coord_hidden, cfg.coord_hidden, 1};
    const Activation acts[] = {Activation::Tanh, Activation::Tanh, Activation::Identity};
    return init_xavier(sizes, acts, rng);
}

// Shared full-batch trainer behind train_encdec / train_boudec / train_joint.
// Zero-weight branches are skipped entirely, which keeps the lambda = 0
// trajectory bit-identical to the reconstruction-only fit.
JointResult train_core(const Dataset& ds, const TrainConfig& cfg, double recon_w,
                       double bound_w) {
    cfg.validate();
    if (ds.size() < 1) throw std::invalid_argument("train: dataset is empty");
    if (bound_w > 0.0 && ds.supervised_count() == 0) {
        throw TrainingError("train: boundary branch enabled but no supervised samples");
    }

    const int n = ds.grid.node_count();
    const int m = ds.size();

    std::vector<std::vector<double>> scaled(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        scaled[static_cast<std::size_t>(i)] =
            cfg.scale.apply(ds.samples[static_cast<std::size_t>(i)].field.values);
    }
    std::vector<int> sup;
    for (int i = 0; i < m; ++i) {
        if (ds.supervised[static_cast<std::size_t>(i)]) sup.push_back(i);
    }

    JointResult result;
    result.model.encoder = init_encoder(n, cfg);
    result.model.decoder = init_decoder(n, cfg);
    result.bnet.net = init_boundary(cfg);

    Mlp& enc = result.model.encoder;
    Mlp& dec = result.model.decoder;
    Mlp& bnet = result.bnet.net;

    const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
    AdamState st_enc = AdamState::for_net(enc, adam);
    AdamState st_dec = AdamState::for_net(dec, adam);
    AdamState st_b = AdamState::for_net(bnet, adam);

    MlpGrad g_enc = MlpGrad::zeros_like(enc);
    MlpGrad g_dec = MlpGrad::zeros_like(dec);
    MlpGrad g_b = MlpGrad::zeros_like(bnet);

    Tape tape_in, tape_dec;
    std::vector<double> grad_latent;

    result.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        g_enc.reset();
        g_dec.reset();
        g_b.reset();
        double loss = 0.0;

        if (recon_w > 0.0) {
            for (int i = 0; i < m; ++i) {
                const std::vector<double>& x = scaled[static_cast<std::size_t>(i)];
                const std::vector<double> code = forward(enc, x, tape_in);
                const std::vector<double> out = forward(dec, code, tape_dec);
                auto [l, g] = mse_loss(out, x);
                loss += recon_w * l;
                if (recon_w != 1.0) {
                    for (double& v : g) v *= recon_w;
                }
                backward_accumulate(dec, tape_dec, g, g_dec, &grad_latent);
                backward_accumulate(enc, tape_in, grad_latent, g_enc);
            }
        }
        if (bound_w > 0.0) {
            for (int j : sup) {
                const double d = ds.samples[static_cast<std::size_t>(j)].d;
                const double d_in[1] = {d};
                const std::vector<double> code = forward(bnet, d_in, tape_in);
                const std::vector<double> out = forward(dec, code, tape_dec);
                auto [l, g] = mse_loss(out, scaled[static_cast<std::size_t>(j)]);
                loss += bound_w * l;
                if (bound_w != 1.0) {
                    for (double& v : g) v *= bound_w;
                }
                backward_accumulate(dec, tape_dec, g, g_dec, &grad_latent);
                backward_accumulate(bnet, tape_in, grad_latent, g_b);
            }
        }

        if (!std::isfinite(loss)) {
            throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        if (recon_w > 0.0) adam_step(enc, g_enc, st_enc);
        adam_step(dec, g_dec, st_dec);
        if (bound_w > 0.0) adam_step(bnet, g_b, st_b);
        result.loss_history.push_back(loss);
    }
    return result;
}

}  // namespace

EncDecResult train_encdec(const Dataset& ds, const TrainConfig& cfg) {
    JointResult r = train_core(ds, cfg, 1.0, 0.0);
    return EncDecResult{std::move(r.model), std::move(r.loss_history)};
}

JointResult train_joint(const Dataset& ds, const TrainConfig& cfg) {
    return train_core(ds, cfg, 1.0, cfg.lambda);
}

JointResult train_boudec(const Dataset& ds, const TrainConfig& cfg) {
    return train_core(ds, cfg, 0.0, 1.0);
}

std::vector<double> boundary_forward(const BoundaryNet& bnet, const Mlp& decoder, double d) {
    const double d_in[1] = {d};
    return forward(decoder, forward(bnet.net, d_in));
}

namespace {

struct CoordProblem {
    std::vector<std::array<double, 2>> data_xy;
    std::vector<double> data_v;
    std::vector<std::array<double, 2>> colloc;
    // Symmetry-edge points, with the unit step of the normal direction.
    std::vector<std::array<double, 2>> neumann_xy;
    std::vector<std::array<double, 2>> neumann_step;
};

CoordNet train_coord_core(const CapacitorSpec& spec, const GridSpec& grid, double d_train,
                          const TrainConfig& cfg, const SolverConfig& solver_cfg,
                          bool supervise_all, double mu, double neumann_w) {
    cfg.validate();
    const CapacitorSpec train_spec = spec.with_d(d_train);
    auto [truth, report] = solve_sor(train_spec, grid, solver_cfg);
    if (!report.converged) {
        throw TrainingError("train_coord: SOR did not converge for d=" + std::to_string(d_train));
    }
    const std::vector<NodeClass> classes = classify_nodes(train_spec, grid);

    CoordProblem prob;
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const std::size_t i = static_cast<std::size_t>(grid.index(ix, iy));
            const NodeClass c = classes[i];
            const std::array<double, 2> xy{grid.x(ix), grid.y(iy)};
            if (supervise_all || is_dirichlet(c)) {
                prob.data_xy.push_back(xy);
                prob.data_v.push_back(truth.values[i]);
            }
            if (mu > 0.0 && c == NodeClass::Interior) prob.colloc.push_back(xy);
            if (neumann_w > 0.0 && c == NodeClass::SymmetryX) {
                prob.neumann_xy.push_back(xy);
                prob.neumann_step.push_back({grid.hx, 0.0});
            }
            if (neumann_w > 0.0 && c == NodeClass::SymmetryY) {
                prob.neumann_xy.push_back(xy);
                prob.neumann_step.push_back({0.0, grid.hy});
            }
        }
    }

    CoordNet model;
    model.trained_d = d_train;
    model.net = init_coord(cfg);
    Mlp& net = model.net;

    const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
    AdamState st = AdamState::for_net(net, adam);
    MlpGrad grad = MlpGrad::zeros_like(net);
    Tape tape, tape_e, tape_w, tape_n, tape_s;

    const double cx = 1.0 / (grid.hx * grid.hx);
    const double cy = 1.0 / (grid.hy * grid.hy);
    const double inv_md = prob.data_xy.empty() ? 0.0 : 1.0 / prob.data_xy.size();
    const double inv_mc = prob.colloc.empty() ? 0.0 : 1.0 / prob.colloc.size();
    const double inv_mn = prob.neumann_xy.empty() ? 0.0 : 1.0 / prob.neumann_xy.size();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        grad.reset();
        double loss = 0.0;

        for (std::size_t p = 0; p < prob.data_xy.size(); ++p) {
            const auto& xy = prob.data_xy[p];
            const double out = forward(net, xy, tape)[0];
            const double e = out - prob.data_v[p];
            loss += e * e * inv_md;
            const double og[1] = {2.0 * e * inv_md};
            backward_accumulate(net, tape, og, grad);
        }

        if (mu > 0.0) {
            for (const auto& xy : prob.colloc) {
                const double x = xy[0], y = xy[1];
                const double fc = forward(net, xy, tape)[0];
                const double fe = forward(net, std::array{x + grid.hx, y}, tape_e)[0];
                const double fw = forward(net, std::array{x - grid.hx, y}, tape_w)[0];
                const double fn = forward(net, std::array{x, y + grid.hy}, tape_n)[0];
                const double fs = forward(net, std::array{x, y - grid.hy}, tape_s)[0];
                const double r = cx * (fe + fw - 2.0 * fc) + cy * (fn + fs - 2.0 * fc);
                loss += mu * r * r * inv_mc;
                const double dr = 2.0 * mu * r * inv_mc;
                const double og_c[1] = {dr * (-2.0 * cx - 2.0 * cy)};
                const double og_x[1] = {dr * cx};
                const double og_y[1] = {dr * cy};
                backward_accumulate(net, tape, og_c, grad);
                backward_accumulate(net, tape_e, og_x, grad);
                backward_accumulate(net, tape_w, og_x, grad);
                backward_accumulate(net, tape_n, og_y, grad);
                backward_accumulate(net, tape_s, og_y, grad);
            }
        }

        if (neumann_w > 0.0) {
            for (std::size_t p = 0; p < prob.neumann_xy.size(); ++p) {
                const auto& xy = prob.neumann_xy[p];
                const auto& st_p = prob.neumann_step[p];
                const double h = st_p[0] > 0.0 ? st_p[0] : st_p[1];
                const double fp =
                    forward(net, std::array{xy[0] + st_p[0], xy[1] + st_p[1]}, tape_e)[0];
                const double fm =
                    forward(net, std::array{xy[0] - st_p[0], xy[1] - st_p[1]}, tape_w)[0];
                const double g = (fp - fm) / (2.0 * h);
                loss += neumann_w * g * g * inv_mn;
                const double dg = 2.0 * neumann_w * g * inv_mn / (2.0 * h);
                const double og_p[1] = {dg};
                const double og_m[1] = {-dg};
                backward_accumulate(net, tape_e, og_p, grad);
                backward_accumulate(net, tape_w, og_m, grad);
            }
        }

        if (!std::isfinite(loss)) {
            throw TrainingError("train_coord: non-finite loss at epoch " + std::to_string(epoch));
        }
        adam_step(net, grad, st);
    }
    return model;
}

}  // namespace

CoordNet train_nn_fixed(const CapacitorSpec& spec, const GridSpec& grid, double d_train,
                        const TrainConfig& cfg, const SolverConfig& solver_cfg) {
    return train_coord_core(spec, grid, d_train, cfg, solver_cfg, /*supervise_all=*/true,
                            /*mu=*/0.0, /*neumann_w=*/0.0);
}

CoordNet train_pinn(const CapacitorSpec& spec, const GridSpec& grid, double d_train,
                    const TrainConfig& cfg, const SolverConfig& solver_cfg) {
    return train_coord_core(spec, grid, d_train, cfg, solver_cfg, cfg.pinn_supervise_all, cfg.mu,
                            cfg.neumann_weight);
}

std::vector<double> pde_residual(const std::function<double(double, double)>& f,
                                 std::span<const std::array<double, 2>> points, double h,
                                 const CapacitorSpec& spec) {
    if (!(h > 0.0)) throw std::invalid_argument("pde_residual: h must be positive");
    const double xmax = spec.a / 2.0;
    const double ymax = spec.b / 2.0;
    const double slack = 1e-12;

    std::vector<double> res;
    res.reserve(points.size());
    for (const auto& p : points) {
        const double x = p[0], y = p[1];
        if (x < h - slack || y < h - slack || x > xmax - h + slack || y > ymax - h + slack) {
            throw std::invalid_argument("pde_residual: point too near boundary for step h");
        }
        const double lap =
            (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / (h * h);
        res.push_back(lap);
    }
    return res;
}

std::vector<double> eval_coordnet(const CoordNet& model, const GridSpec& grid) {
    std::vector<double> values(static_cast<std::size_t>(grid.node_count()));
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const std::array<double, 2> xy{grid.x(ix), grid.y(iy)};
            values[static_cast<std::size_t>(grid.index(ix, iy))] = forward(model.net, xy)[0];
        }
    }
    return values;
}

std::vector<std::array<double, 2>> interior_points(const GridSpec& grid,
                                                   std::span<const NodeClass> classes) {
    std::vector<std::array<double, 2>> pts;
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            if (classes[static_cast<std::size_t>(grid.index(ix, iy))] == NodeClass::Interior) {
                pts.push_back({grid.x(ix), grid.y(iy)});
            }
        }
    }
    return pts;
}

void save_model_set(const std::filesystem::path& dir, const std::string& name,
                    const std::vector<std::pair<std::string, const Mlp*>>& parts) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / (name + ".manifest"), std::ios::trunc);
    if (!manifest) {
        throw binio::IoError(binio::IoErrorCode::OpenFailed,
                             "cannot write manifest in " + dir.string());
    }
    for (const auto& [role, net] : parts) {
        const std::string file = name + "." + role + ".capm";
        save_mlp(*net, dir / file);
        manifest << role << "=" << file << "\n";
    }
}

std::map<std::string, Mlp> load_model_set(const std::filesystem::path& manifest_path) {
    std::ifstream manifest(manifest_path);
    if (!manifest) {
        throw binio::IoError(binio::IoErrorCode::OpenFailed,
                             "cannot open manifest " + manifest_path.string());
    }
    const std::filesystem::path dir = manifest_path.parent_path();
    std::map<std::string, Mlp> parts;
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw binio::IoError(binio::IoErrorCode::BadValue,
                                 "manifest line has no role=file form: " + line);
        }
        parts.emplace(line.substr(0, eq), load_mlp(dir / line.substr(eq + 1)));
    }
    return parts;
}

}  // namespace capfield
