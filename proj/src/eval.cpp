#include "capfield/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace capfield {

std::vector<double> SseReport::mean_per_d() const {
    std::vector<double> means(d_values.size(), 0.0);
    if (sse.empty()) return means;
    for (const auto& row : sse) {
        for (std::size_t k = 0; k < means.size(); ++k) means[k] += row[k];
    }
    for (double& v : means) v /= static_cast<double>(sse.size());
    return means;
}

double SseReport::mean() const {
    const std::vector<double> per_d = mean_per_d();
    double acc = 0.0;
    for (double v : per_d) acc += v;
    return per_d.empty() ? 0.0 : acc / static_cast<double>(per_d.size());
}

std::vector<double> ExperimentConfig::corpus_d_values() const {
    if (corpus_count < 2) throw ConfigError("corpus.count must be at least 2");
    std::vector<double> excluded = table1_d;
    excluded.insert(excluded.end(), table2_d.begin(), table2_d.end());

    std::vector<double> out;
    const double step = (corpus_d_max - corpus_d_min) / (corpus_count - 1);
    for (int i = 0; i < corpus_count; ++i) {
        const double d = corpus_d_min + step * i;
        bool is_test = false;
        for (double t : excluded) {
            if (std::abs(d - t) < 1e-9) { is_test = true; break; }
        }
        if (!is_test) out.push_back(d);
    }
    if (out.empty()) throw ConfigError("corpus is empty after removing test d values");
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_list(std::span<const double> values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ",";
        s += fmt(values[i]);
    }
    return s;
}

}  // namespace

std::string ExperimentConfig::canonical_text() const {
    std::ostringstream os;
    os << "spec.a=" << fmt(spec.a) << "\nspec.b=" << fmt(spec.b) << "\nspec.v0=" << fmt(spec.v0)
       << "\ngrid.nx=" << grid.nx << "\ngrid.ny=" << grid.ny
       << "\nsolver.omega=" << fmt(solver.omega) << "\nsolver.tol=" << fmt(solver.tol)
       << "\nsolver.max_iters=" << solver.max_iters << "\ncorpus.count=" << corpus_count
       << "\ncorpus.d_min=" << fmt(corpus_d_min) << "\ncorpus.d_max=" << fmt(corpus_d_max)
       << "\ncorpus.n_supervised=" << n_supervised << "\ntest.table1_d=" << fmt_list(table1_d)
       << "\ntest.table2_d=" << fmt_list(table2_d)
       << "\ntest.fixed_train_d=" << fmt(fixed_train_d) << "\ntrain.lambda=" << fmt(train.lambda)
       << "\ntrain.lr=" << fmt(train.lr) << "\ntrain.epochs=" << train.epochs
       << "\ntrain.latent_dim=" << train.latent_dim << "\ntrain.hidden=" << train.hidden
       << "\ntrain.boundary_hidden=" << train.boundary_hidden
       << "\ntrain.coord_hidden=" << train.coord_hidden << "\ntrain.mu=" << fmt(train.mu)
       << "\ntrain.neumann_weight=" << fmt(train.neumann_weight)
       << "\ntrain.boundary_linear=" << (train.boundary_linear ? 1 : 0)
       << "\ntrain.scale=" << fmt(train.scale.scale) << "\nseeds=";
    for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
    os << "\n";
    return os.str();
}

std::uint64_t ExperimentConfig::config_hash() const {
    // FNV-1a 64.
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : canonical_text()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void ExperimentConfig::set_key(const std::string& key, const std::string& value) {
    try {
        if (key == "spec.a") spec.a = std::stod(value);
        else if (key == "spec.b") spec.b = std::stod(value);
        else if (key == "spec.v0") spec.v0 = std::stod(value);
        else if (key == "grid.nx") grid.nx = std::stoi(value);
        else if (key == "grid.ny") grid.ny = std::stoi(value);
        else if (key == "solver.omega") solver.omega = std::stod(value);
        else if (key == "solver.tol") solver.tol = std::stod(value);
        else if (key == "solver.max_iters") solver.max_iters = std::stol(value);
        else if (key == "corpus.count") corpus_count = std::stoi(value);
        else if (key == "corpus.d_min") corpus_d_min = std::stod(value);
        else if (key == "corpus.d_max") corpus_d_max = std::stod(value);
        else if (key == "corpus.n_supervised") n_supervised = std::stoi(value);
        else if (key == "test.fixed_train_d") fixed_train_d = std::stod(value);
        else if (key == "train.lambda") train.lambda = std::stod(value);
        else if (key == "train.lr") train.lr = std::stod(value);
        else if (key == "train.epochs") train.epochs = std::stoi(value);
        else if (key == "train.latent_dim") train.latent_dim = std::stoi(value);
        else if (key == "train.hidden") train.hidden = std::stoi(value);
        else if (key == "train.boundary_hidden") train.boundary_hidden = std::stoi(value);
        else if (key == "train.coord_hidden") train.coord_hidden = std::stoi(value);
        else if (key == "train.mu") train.mu = std::stod(value);
        else if (key == "train.neumann_weight") train.neumann_weight = std::stod(value);
        else if (key == "train.boundary_linear") train.boundary_linear = std::stoi(value) != 0;
        else if (key == "train.scale") train.scale.scale = std::stod(value);
        else if (key == "out_dir") out_dir = value;
        else if (key == "test.table1_d" || key == "test.table2_d" || key == "seeds") {
            std::vector<std::string> items;
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (!item.empty()) items.push_back(item);
            }
            if (items.empty()) throw ConfigError("empty list for " + key);
            if (key == "seeds") {
                seeds.clear();
                for (const auto& s : items) seeds.push_back(std::stoull(s));
            } else {
                auto& dst = key == "test.table1_d" ? table1_d : table2_d;
                dst.clear();
                for (const auto& s : items) dst.push_back(std::stod(s));
            }
        } else {
            throw ConfigError("unknown config key: " + key);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad value for config key " + key + ": '" + value + "'");
    }
}

void ExperimentConfig::finalize() {
    grid = GridSpec::make(spec, grid.nx, grid.ny);
}

void ExperimentConfig::validate() const {
    try {
        grid.validate();
        solver.validate();
        train.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (!(spec.a > 0.0) || !(spec.b > 0.0)) throw ConfigError("spec extents must be positive");
    if (n_supervised < 0) throw ConfigError("corpus.n_supervised must be >= 0");
    if (seeds.empty()) throw ConfigError("need at least one seed");
    if (table1_d.empty() || table2_d.empty()) throw ConfigError("test d lists must be non-empty");
    for (double d : table1_d) {
        if (!(d > 0.0) || !(d < spec.a)) throw ConfigError("table1 d outside (0, a)");
    }
    for (double d : table2_d) {
        if (!(d > 0.0) || !(d < spec.a)) throw ConfigError("table2 d outside (0, a)");
    }
    if (!(corpus_d_min > 0.0) || !(corpus_d_max < spec.a) || !(corpus_d_min < corpus_d_max)) {
        throw ConfigError("corpus d range must satisfy 0 < d_min < d_max < a");
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + " is not key=value");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto kend = key.find_last_not_of(" \t");
        key = key.substr(0, kend == std::string::npos ? 0 : kend + 1);
        const auto vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        cfg.set_key(key, value);
    }
    cfg.finalize();
    return cfg;
}

double sse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("sse: length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        acc += e * e;
    }
    return acc;
}

namespace {

Field solve_truth(const ExperimentConfig& cfg, double d) {
    auto [field, report] = solve_sor(cfg.spec.with_d(d), cfg.grid, cfg.solver);
    if (!report.converged) {
        throw TrainingError("ground-truth SOR did not converge for d=" + std::to_string(d));
    }
    return std::move(field);
}

struct Table1Models {
    EncDec ae;
    RegressionModel latent_reg;
    RegressionModel raw_reg;
    JointResult joint;
    JointResult boudec;
};

Table1Models train_table1_models(const ExperimentConfig& cfg, const Dataset& base,
                                 std::uint64_t seed) {
    const Dataset ds = split_supervised(base, cfg.n_supervised, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;

    Table1Models out;
    out.ae = train_encdec(ds, tc).model;
    out.joint = train_joint(ds, tc);
    out.boudec = train_boudec(ds, tc);

    std::vector<std::vector<double>> latent_feats;
    std::vector<double> labels;
    for (int i = 0; i < ds.size(); ++i) {
        if (!ds.supervised[static_cast<std::size_t>(i)]) continue;
        const std::vector<double> x =
            tc.scale.apply(ds.samples[static_cast<std::size_t>(i)].field.values);
        latent_feats.push_back(forward(out.ae.encoder, x));
        labels.push_back(ds.samples[static_cast<std::size_t>(i)].d);
    }
    out.latent_reg = fit_regression(latent_feats, labels);
    out.raw_reg = fit_raw_regression(ds);
    return out;
}

}  // namespace

std::vector<SseReport> run_table1(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<double> corpus = cfg.corpus_d_values();
    const Dataset base = generate_dataset(cfg.spec, cfg.grid, corpus, cfg.solver, 0);

    std::vector<Field> truths;
    std::vector<Field> inits;
    for (double d : cfg.table1_d) {
        truths.push_back(solve_truth(cfg, d));
        inits.push_back(initial_estimate(cfg.spec, cfg.grid, cfg.solver, d));
    }

    const std::vector<std::string> methods = {"raw space", "enc-dec", "bou-dec",
                                              "enc-dec+bou-dec"};
    std::vector<SseReport> reports(methods.size());
    for (std::size_t k = 0; k < methods.size(); ++k) {
        reports[k].method = methods[k];
        reports[k].d_values = cfg.table1_d;
        reports[k].seeds = cfg.seeds;
    }

    std::map<std::uint64_t, Table1Models> cache;
    for (std::uint64_t seed : cfg.seeds) {
        auto it = cache.find(seed);
        if (it == cache.end()) {
            it = cache.emplace(seed, train_table1_models(cfg, base, seed)).first;
        }
        const Table1Models& models = it->second;
        const ScaleTransform& scale = cfg.train.scale;

        std::vector<std::vector<double>> rows(methods.size());
        for (std::size_t k = 0; k < cfg.table1_d.size(); ++k) {
            const double d = cfg.table1_d[k];
            const std::vector<double>& truth = truths[k].values;
            const std::vector<double>& init = inits[k].values;

            const std::vector<double> raw_hat =
                invert_to_hyperplane(init, models.raw_reg, d).z_hat;
            rows[0].push_back(sse(raw_hat, truth));

            const std::vector<double> z0 = forward(models.ae.encoder, scale.apply(init));
            const InverseResult inv = invert_to_hyperplane(z0, models.latent_reg, d);
            rows[1].push_back(sse(reconstruct_latent(inv.z_hat, models.ae.decoder, scale), truth));

            rows[2].push_back(sse(
                scale.invert(boundary_forward(models.boudec.bnet, models.boudec.model.decoder, d)),
                truth));
            rows[3].push_back(sse(
                scale.invert(boundary_forward(models.joint.bnet, models.joint.model.decoder, d)),
                truth));
        }
        for (std::size_t k = 0; k < methods.size(); ++k) {
            reports[k].sse.push_back(std::move(rows[k]));
        }
    }

    std::filesystem::create_directories(cfg.out_dir);
    write_sse_csv(reports, cfg, cfg.out_dir / "table1.csv");
    return reports;
}

std::vector<SseReport> run_table2(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<double> corpus = cfg.corpus_d_values();
    const Dataset base = generate_dataset(cfg.spec, cfg.grid, corpus, cfg.solver, 0);

    std::vector<Field> truths;
    for (double d : cfg.table2_d) truths.push_back(solve_truth(cfg, d));

    const std::vector<std::string> methods = {"NN", "PINN", "enc-dec+bou-dec"};
    std::vector<SseReport> reports(methods.size());
    for (std::size_t k = 0; k < methods.size(); ++k) {
        reports[k].method = methods[k];
        reports[k].d_values = cfg.table2_d;
        reports[k].seeds = cfg.seeds;
    }

    struct Table2Models {
        CoordNet nn;
        CoordNet pinn;
        JointResult joint;
    };
    std::map<std::uint64_t, Table2Models> cache;
    for (std::uint64_t seed : cfg.seeds) {
        auto it = cache.find(seed);
        if (it == cache.end()) {
            const Dataset ds = split_supervised(base, cfg.n_supervised, seed);
            TrainConfig tc = cfg.train;
            tc.seed = seed;
            Table2Models models;
            models.nn = train_nn_fixed(cfg.spec, cfg.grid, cfg.fixed_train_d, tc, cfg.solver);
            models.pinn = train_pinn(cfg.spec, cfg.grid, cfg.fixed_train_d, tc, cfg.solver);
            models.joint = train_joint(ds, tc);
            it = cache.emplace(seed, std::move(models)).first;
        }
        const Table2Models& models = it->second;

        const std::vector<double> nn_values = eval_coordnet(models.nn, cfg.grid);
        const std::vector<double> pinn_values = eval_coordnet(models.pinn, cfg.grid);

        std::vector<std::vector<double>> rows(methods.size());
        for (std::size_t k = 0; k < cfg.table2_d.size(); ++k) {
            const double d = cfg.table2_d[k];
            const std::vector<double>& truth = truths[k].values;
            rows[0].push_back(sse(nn_values, truth));
            rows[1].push_back(sse(pinn_values, truth));
            rows[2].push_back(sse(cfg.train.scale.invert(boundary_forward(
                                      models.joint.bnet, models.joint.model.decoder, d)),
                                  truth));
        }
        for (std::size_t k = 0; k < methods.size(); ++k) {
            reports[k].sse.push_back(std::move(rows[k]));
        }
    }

    std::filesystem::create_directories(cfg.out_dir);
    write_sse_csv(reports, cfg, cfg.out_dir / "table2.csv");
    return reports;
}

void export_heatmap(const Field& field, const std::filesystem::path& path, HeatmapFormat format) {
    const GridSpec& g = field.grid;
    std::ofstream os(path, format == HeatmapFormat::Pgm
                               ? std::ios::binary | std::ios::trunc
                               : std::ios::trunc);
    if (!os) {
        throw std::runtime_error("export_heatmap: cannot open " + path.string());
    }

    if (format == HeatmapFormat::Pgm) {
        double lo = field.values[0], hi = field.values[0];
        for (double v : field.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double range = hi - lo;
        os << "P5\n" << g.nx << " " << g.ny << "\n255\n";
        std::vector<unsigned char> row(static_cast<std::size_t>(g.nx));
        for (int iy = 0; iy < g.ny; ++iy) {
            for (int ix = 0; ix < g.nx; ++ix) {
                const double v = field.at(ix, iy);
                const double t = range > 0.0 ? (v - lo) / range : 0.0;
                row[static_cast<std::size_t>(ix)] =
                    static_cast<unsigned char>(std::lround(t * 255.0));
            }
            os.write(reinterpret_cast<const char*>(row.data()), g.nx);
        }
    } else {
        char buf[64];
        for (int iy = 0; iy < g.ny; ++iy) {
            for (int ix = 0; ix < g.nx; ++ix) {
                std::snprintf(buf, sizeof(buf), "%.17g", field.at(ix, iy));
                os << (ix ? "," : "") << buf;
            }
            os << "\n";
        }
    }
    if (!os) {
        throw std::runtime_error("export_heatmap: write failed for " + path.string());
    }
}

void write_sse_csv(const std::vector<SseReport>& reports, const ExperimentConfig& cfg,
                   const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);  // binary: LF endings everywhere
    if (!os) {
        throw std::runtime_error("write_sse_csv: cannot open " + path.string());
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash()));
    os << "# config_hash=" << buf << " seeds=";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) os << (i ? "," : "") << cfg.seeds[i];
    os << "\n";
    os << "method,d,seed,sse\n";
    for (const SseReport& rep : reports) {
        for (std::size_t si = 0; si < rep.sse.size(); ++si) {
            for (std::size_t k = 0; k < rep.d_values.size(); ++k) {
                std::snprintf(buf, sizeof(buf), "%.12e", rep.sse[si][k]);
                os << rep.method << "," << fmt(rep.d_values[k]) << "," << rep.seeds[si] << ","
                   << buf << "\n";
            }
        }
    }
    if (!os) {
        throw std::runtime_error("write_sse_csv: write failed for " + path.string());
    }
}

}  // namespace capfield
