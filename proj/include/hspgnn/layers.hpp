#ifndef HSPGNN_LAYERS_HPP
#define HSPGNN_LAYERS_HPP

#include <optional>
#include <vector>

#include "hspgnn/graph.hpp"
#include "hspgnn/rng.hpp"
#include "hspgnn/tensor.hpp"

namespace hspgnn {

// Xavier-uniform matrix leaf in +-sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(int rows, int cols, Rng& rng);

// --- coarse imputer ----------------------------------------------------------

// Per-time-step MLP across the node dimension. The second stage is optional:
// with only (w1, b1) the map is a single affine layer, with all four tensors
// it is affine -> tanh -> affine.
struct MlpParams {
    Tensor w1, b1;
    Tensor w2, b2;  // undefined in single-layer mode

    static MlpParams init(int n_nodes, int hidden, Rng& rng);
    static MlpParams single_affine(Tensor w, Tensor b);
    bool two_layer() const { return w2.defined(); }
    std::vector<Tensor> parameters() const;
};

Tensor mlp_coarse_impute(const Tensor& u, const MlpParams& params);

// --- spatial attention --------------------------------------------------------

struct SpatialAttentionParams {
    Tensor v_s;  // N x N
    Tensor b_s;  // N x N
    Tensor w1;   // M x 1
    Tensor w2;   // M x M
    Tensor w3;   // M x 1

    // v_s starts at zero so the initial attention is exactly uniform and the
    // dynamic graph reduces to the base graph.
    static SpatialAttentionParams init(int n_nodes, int m_window, Rng& rng);
    std::vector<Tensor> parameters() const;
};

struct SpatialAttentionResult {
    Tensor s_prime;        // N x N, row-stochastic, differentiable
    Matrix a_dyn;          // modulated adjacency snapshot
    LaplacianMatrix l_dyn; // normalized Laplacian of a_dyn
};

// Scores each node pair from the coarse-imputed window and modulates the base
// adjacency: A_t = A (.) sym(S'), or sym(S') alone when no base graph exists.
// The Laplacian is a detached numeric snapshot; gradients flow through
// s_prime only.
SpatialAttentionResult spatial_attention(const Tensor& x, const SpatialAttentionParams& params,
                                         const std::optional<GraphSpec>& base_graph,
                                         LaplacianForm form = LaplacianForm::symmetric);

// --- physics-incorporated layer ----------------------------------------------

// Discretized dynamic-system layer. Per step t the output combines
//   spatial  : sum_k Theta_k . lag(x) . T_k(rescaled L_t)
//   source   : lag(x) . W_v
//   temporal : conv(H x, kernel), a k_t-tap surrogate for the mixed-order
//              time-derivative combination
// as p_hat = spatial + source - temporal. lag() is the one-step shift clamped
// at the window start.
struct PhysicsParams {
    std::vector<int> hops;      // Chebyshev orders in use, e.g. {0, 1, 2}
    std::vector<Tensor> theta;  // one M x M mixing matrix per hop
    Tensor w_v;                 // N x N source map
    Tensor kernel;              // 1 x k_t, initialized to the unit impulse

    static PhysicsParams init(int m_window, int n_nodes, const std::vector<int>& hops, int k_t,
                              Rng& rng);
    std::vector<Tensor> parameters() const;
    int max_hop() const;
};

Tensor physics_layer(const Tensor& x, const std::vector<LaplacianMatrix>& l_dyn_seq,
                     const PhysicsParams& params);

// Two physics layers with the input re-added between them:
// out = layer2(layer1(x) + x).
Tensor physics_stack(const Tensor& x, const std::vector<LaplacianMatrix>& l_dyn_seq,
                     const PhysicsParams& first, const PhysicsParams& second);

// --- LSTM ----------------------------------------------------------------------

struct LstmParams {
    int hidden = 0;
    Tensor w_i, u_i, b_i;
    Tensor w_f, u_f, b_f;
    Tensor w_c, u_c, b_c;
    Tensor w_o, u_o, b_o;

    static LstmParams init(int input, int hidden, Rng& rng);
    std::vector<Tensor> parameters() const;
};

Tensor lstm_forward(const Tensor& x_seq, const LstmParams& params,
                    const std::optional<Tensor>& h0 = std::nullopt,
                    const std::optional<Tensor>& c0 = std::nullopt);

// --- temporal attention ---------------------------------------------------------

struct TemporalAttentionParams {
    Tensor v_e;  // M x M
    Tensor b_e;  // M x M
    Tensor u1;   // hidden x 1
    Tensor u2;   // 1 x hidden
    Tensor u3;   // 1 x 1

    static TemporalAttentionParams init(int m_window, int hidden, Rng& rng);
    std::vector<Tensor> parameters() const;
};

Tensor temporal_attention(const Tensor& h_seq, const TemporalAttentionParams& params);

}  // namespace hspgnn

#endif
