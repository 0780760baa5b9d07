#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "capfield/dataset.hpp"
#include "capfield/net.hpp"

namespace capfield {

// Raised when a fit diverges (non-finite loss) or cannot be set up.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Autoencoder pair. Encoder maps a scaled field vector (length N) to the
// latent code; decoder maps the code back. All hidden and output layers are
// tanh, so decoded values live in (-1,1) and are unscaled afterwards.
struct EncDec {
    Mlp encoder;  // N -> hidden -> latent
    Mlp decoder;  // latent -> hidden -> N
};

// Maps the scalar boundary parameter d into the latent space. Feeding its
// output through a decoder reconstructs a full field from d alone.
struct BoundaryNet {
    Mlp net;  // 1 -> boundary_hidden -> latent
};

// Coordinate network (x,y) -> V fitted at one fixed d.
struct CoordNet {
    Mlp net;  // 2 -> coord_hidden -> coord_hidden -> 1
    double trained_d = 0.0;
};

struct TrainConfig {
    double lambda = 1.0;  // boundary-branch weight in the joint loss
    double lr = 1e-3;
    int epochs = 2000;
    std::uint64_t seed = 1;
    int latent_dim = 8;
    int hidden = 64;
    int boundary_hidden = 16;
    int coord_hidden = 32;
    double mu = 1.0;              // PDE residual weight (PINN)
    double neumann_weight = 1.0;  // symmetry-edge penalty weight (PINN)
    // The printed boundary formula stacks two linear maps; by default a tanh
    // is inserted after the first so they do not collapse. Setting this flag
    // restores the literal linear form.
    bool boundary_linear = false;
    // PINN normally supervises Dirichlet nodes only; this widens the data
    // term to every grid node (used to check that mu=0 reduces the PINN fit
    // to the plain coordinate fit).
    bool pinn_supervise_all = false;
    ScaleTransform scale;

    void validate() const;
};

struct EncDecResult {
    EncDec model;
    std::vector<double> loss_history;
};

struct JointResult {
    EncDec model;
    BoundaryNet bnet;
    std::vector<double> loss_history;
};

// Unsupervised reconstruction fit: minimizes the summed squared
// reconstruction error over all samples with full-batch Adam.
EncDecResult train_encdec(const Dataset& ds, const TrainConfig& cfg);

// Semi-supervised joint fit: reconstruction loss over all samples plus
// lambda times the boundary-branch loss over supervised samples. The decoder
// receives gradients from both branches. With lambda = 0 the encoder/decoder
// trajectory is bit-identical to train_encdec at the same seed.
JointResult train_joint(const Dataset& ds, const TrainConfig& cfg);

// Supervised-only variant: boundary branch alone, reconstruction term
// dropped. The returned encoder stays at initialization and is unused.
JointResult train_boudec(const Dataset& ds, const TrainConfig& cfg);

// dec(bnet(d)) in scaled units, length N, values in (-1,1).
std::vector<double> boundary_forward(const BoundaryNet& bnet, const Mlp& decoder, double d);

// Fits (x,y) -> V on all N grid nodes of the SOR solution at d_train.
CoordNet train_nn_fixed(const CapacitorSpec& spec, const GridSpec& grid, double d_train,
                        const TrainConfig& cfg, const SolverConfig& solver_cfg = {});

// Physics-informed variant: data term on Dirichlet nodes only, plus
// mu * mean-square finite-difference Laplacian at interior collocation
// points and a penalty on the finite-difference normal derivative along the
// symmetry edges. Gradients flow through every stencil evaluation.
CoordNet train_pinn(const CapacitorSpec& spec, const GridSpec& grid, double d_train,
                    const TrainConfig& cfg, const SolverConfig& solver_cfg = {});

// Central-difference Laplacian (f(x+h,y)+f(x-h,y)+f(x,y+h)+f(x,y-h)-4f)/h^2
// per point. Points must stay at least h away from the quadrant boundary.
std::vector<double> pde_residual(const std::function<double(double, double)>& f,
                                 std::span<const std::array<double, 2>> points, double h,
                                 const CapacitorSpec& spec);

// Net output at every grid node, row-major (physical units).
std::vector<double> eval_coordnet(const CoordNet& net, const GridSpec& grid);

// Interior grid nodes as collocation points.
std::vector<std::array<double, 2>> interior_points(const GridSpec& grid,
                                                   std::span<const NodeClass> classes);

// Writes one "CAPM" checkpoint per part plus a plain-text manifest
// (role=filename lines) named <name>.manifest in dir.
void save_model_set(const std::filesystem::path& dir, const std::string& name,
                    const std::vector<std::pair<std::string, const Mlp*>>& parts);
std::map<std::string, Mlp> load_model_set(const std::filesystem::path& manifest_path);

}  // namespace capfield
