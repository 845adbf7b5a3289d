#ifndef HSPGNN_MODEL_HPP
#define HSPGNN_MODEL_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hspgnn/data.hpp"
#include "hspgnn/layers.hpp"

namespace hspgnn {

enum class ModelVariant { standard, l_variant };

struct ModelConfig {
    int m_window = 60;
    std::vector<int> hops = {0, 1};  // Chebyshev orders; {0,k} selects a single hop, longer lists combine
    int k_t = 3;
    int hidden = 0;      // 0 means n_nodes; the prediction head requires hidden == n_nodes
    int mlp_hidden = 0;  // 0 means n_nodes
    ModelVariant variant = ModelVariant::standard;
    LaplacianForm laplacian = LaplacianForm::symmetric;

    // Component switches for ablation runs.
    bool use_mlp = true;
    bool use_spatial_attention = true;
    bool use_physics = true;
    bool use_predictor = true;
    double pinn_weight = 0.0;  // > 0 adds the discrete dynamic-system residual to the loss
};

struct HSPGNNModel {
    ModelConfig cfg;
    int n_nodes = 0;
    std::optional<GraphSpec> base_graph;
    std::optional<Normalizer> normalizer;

    MlpParams mlp;
    SpatialAttentionParams satt;
    PhysicsParams phys1, phys2;
    LstmParams lstm;
    TemporalAttentionParams tatt;
    LstmParams lstm_extra;                 // l_variant only
    TemporalAttentionParams tatt_extra;    // l_variant only
    bool trained = false;

    static HSPGNNModel init(int n_nodes, const ModelConfig& cfg,
                            std::optional<GraphSpec> base_graph, std::uint64_t seed);

    int hidden_size() const { return cfg.hidden > 0 ? cfg.hidden : n_nodes; }
    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
    std::vector<Tensor> parameters() const;
};

// --- forward passes -----------------------------------------------------------

struct ImputeResult {
    Tensor p_bar;   // coarse MLP estimate, M x N
    Tensor refined; // physics-stack output before the mask overwrite
    Tensor p_hat;   // imputed window: observed entries kept, masked entries filled
    Tensor s_prime; // undefined when spatial attention is disabled
    std::vector<LaplacianMatrix> l_dyn_seq;
};

// The window must be preprocessed (zero-fill + per-node interpolation).
ImputeResult forward_impute(const SeriesWindow& window, const HSPGNNModel& model);

Tensor forward_predict(const Tensor& imputed, const HSPGNNModel& model);

// Mean absolute error over observed-future positions (mask == 0). An
// all-masked support yields loss 0 with the flag set.
struct LossResult {
    Tensor loss;
    bool empty_support = false;
};
LossResult masked_l1_loss(const Tensor& x_true, const Tensor& x_hat, const Matrix& mask_future);

// Discrete dynamic-system residual |temporal - spatial - source| averaged
// over the window; the additive penalty used by the pinn-style variant.
Tensor physics_residual_penalty(const Tensor& x, const std::vector<LaplacianMatrix>& l_dyn_seq,
                                const PhysicsParams& params);

// --- optimizer ------------------------------------------------------------------

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class AdamOptimizer {
public:
    explicit AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg = {});
    void zero_grad();
    // Scales gradients so their global L2 norm is at most max_norm; returns
    // the pre-clip norm.
    double clip_global_norm(double max_norm);
    void step(double lr);

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    long step_count_ = 0;
    AdamConfig cfg_;
};

// --- training -------------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 0.0005;
    double decay = 0.92;  // multiplied into the learning rate every epoch
    int batch_size = 8;
    int epochs = 30;
    std::uint64_t seed = 0;
    double validation_fraction = 0.16;
    double clip_norm = 5.0;
    // Self-supervised anchor for the imputation path: a seeded fraction of
    // the observed entries in every training window is hidden and
    // re-interpolated, and the refined output is graded at exactly those
    // positions against the known values. The prediction loss alone leaves
    // the filled values unconstrained.
    double remask_rate = 0.2;
    double reconstruction_weight = 1.0;

    void validate() const;
};

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> learning_rates;
    int best_epoch = -1;
    double best_val = 0.0;
};

// Algorithm: per epoch, impute each input window, predict the next window,
// take the masked L1 loss, step Adam; the decayed learning rate follows
// lr0 * decay^epoch exactly. The checkpoint with the best validation loss is
// restored into the model at the end.
TrainReport train(const std::vector<WindowPair>& pairs, HSPGNNModel& model, const TrainConfig& cfg);

// --- evaluation -----------------------------------------------------------------

struct EvalMetrics {
    double mae = 0.0;
    double mse = 0.0;
};

// Imputation error at masked positions against ground truth. Windows carry
// preprocessed values; truth the full values in the same order. When a
// normalizer is supplied, predictions and truth are compared in original
// units.
EvalMetrics evaluate(const std::vector<SeriesWindow>& windows, const std::vector<Matrix>& truth,
                     const HSPGNNModel& model, const Normalizer* denorm = nullptr);

// --- checkpointing ----------------------------------------------------------------

void checkpoint_save(const HSPGNNModel& model, const std::filesystem::path& path);
HSPGNNModel checkpoint_load(const std::filesystem::path& path);

}  // namespace hspgnn

#endif
