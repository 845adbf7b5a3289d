#include "hspgnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hspgnn {

Tensor xavier_uniform(int rows, int cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    Tensor t = Tensor::zeros(rows, cols, true);
    for (auto& x : t.mutable_values()) x = rng.uniform(-bound, bound);
    return t;
}

// --- coarse imputer ----------------------------------------------------------

MlpParams MlpParams::init(int n_nodes, int hidden, Rng& rng) {
    MlpParams p;
    p.w1 = xavier_uniform(n_nodes, hidden, rng);
    p.b1 = Tensor::zeros(1, hidden, true);
    p.w2 = xavier_uniform(hidden, n_nodes, rng);
    p.b2 = Tensor::zeros(1, n_nodes, true);
    return p;
}

MlpParams MlpParams::single_affine(Tensor w, Tensor b) {
    MlpParams p;
    p.w1 = std::move(w);
    p.b1 = std::move(b);
    return p;
}

std::vector<Tensor> MlpParams::parameters() const {
    if (!two_layer()) return {w1, b1};
    return {w1, b1, w2, b2};
}

Tensor mlp_coarse_impute(const Tensor& u, const MlpParams& params) {
    if (u.cols() != params.w1.rows())
        throw DimensionError("mlp_coarse_impute: window width does not match w1");
    Tensor first = add_rowvec(matmul(u, params.w1), params.b1);
    if (!params.two_layer()) return first;
    return add_rowvec(matmul(tanh(first), params.w2), params.b2);
}

// --- spatial attention --------------------------------------------------------

SpatialAttentionParams SpatialAttentionParams::init(int n_nodes, int m_window, Rng& rng) {
    SpatialAttentionParams p;
    p.v_s = Tensor::zeros(n_nodes, n_nodes, true);
    p.b_s = Tensor::zeros(n_nodes, n_nodes, true);
    p.w1 = xavier_uniform(m_window, 1, rng);
    p.w2 = xavier_uniform(m_window, m_window, rng);
    p.w3 = xavier_uniform(m_window, 1, rng);
    return p;
}

std::vector<Tensor> SpatialAttentionParams::parameters() const { return {v_s, b_s, w1, w2, w3}; }

SpatialAttentionResult spatial_attention(const Tensor& x, const SpatialAttentionParams& params,
                                         const std::optional<GraphSpec>& base_graph,
                                         LaplacianForm form) {
    const int n = x.cols();
    if (params.w1.rows() != x.rows())
        throw DimensionError("spatial_attention: w1 length does not match the window");

    // Rank-one score: left factor contracts time with w1, right factor runs
    // the window through the temporal map w2 before contracting with w3.
    Tensor left = matmul(transpose(x), params.w1);                       // N x 1
    Tensor right = matmul(transpose(params.w3), matmul(params.w2, x));   // 1 x N
    Tensor score = sigmoid(add(matmul(left, right), params.b_s));        // N x N
    Tensor s = matmul(params.v_s, score);
    Tensor s_prime = softmax_rows(s);

    // Symmetrized modulation keeps the dynamic adjacency a valid undirected
    // graph; row-softmax output is not symmetric on its own.
    Matrix sp = s_prime.to_matrix();
    Matrix sym(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sym.at(i, j) = 0.5 * (sp.at(i, j) + sp.at(j, i));

    Matrix a_dyn(n, n);
    if (base_graph) {
        if (base_graph->n_nodes != n)
            throw DimensionError("spatial_attention: base graph size does not match the window");
        a_dyn = base_graph->adjacency.hadamard(sym);
    } else {
        a_dyn = sym;
        for (int i = 0; i < n; ++i) a_dyn.at(i, i) = 0.0;
    }

    GraphSpec g = GraphSpec::from_adjacency(a_dyn);
    LaplacianMatrix l =
        form == LaplacianForm::similarity ? normalized_laplacian_similarity(g) : normalized_laplacian(g);

    SpatialAttentionResult out;
    out.s_prime = s_prime;
    out.a_dyn = std::move(a_dyn);
    out.l_dyn = std::move(l);
    return out;
}

// --- physics-incorporated layer ----------------------------------------------

PhysicsParams PhysicsParams::init(int m_window, int n_nodes, const std::vector<int>& hops, int k_t,
                                  Rng& rng) {
    if (hops.empty()) throw ConfigurationError("physics params: hop list is empty");
    for (int h : hops)
        if (h < 0) throw ConfigurationError("physics params: negative hop order");
    if (k_t % 2 == 0 || k_t < 1) throw ConfigurationError("physics params: kernel width must be odd");

    PhysicsParams p;
    p.hops = hops;
    std::sort(p.hops.begin(), p.hops.end());
    p.hops.erase(std::unique(p.hops.begin(), p.hops.end()), p.hops.end());
    for (std::size_t i = 0; i < p.hops.size(); ++i) p.theta.push_back(xavier_uniform(m_window, m_window, rng));
    p.w_v = xavier_uniform(n_nodes, n_nodes, rng);
    p.kernel = Tensor::zeros(1, k_t, true);
    p.kernel.mutable_values()[(k_t - 1) / 2] = 1.0;  // unit impulse
    return p;
}

std::vector<Tensor> PhysicsParams::parameters() const {
    std::vector<Tensor> out = theta;
    out.push_back(w_v);
    out.push_back(kernel);
    return out;
}

int PhysicsParams::max_hop() const { return hops.empty() ? 0 : hops.back(); }

namespace {

std::vector<std::vector<Matrix>> chebyshev_per_step(const std::vector<LaplacianMatrix>& l_dyn_seq,
                                                    int max_hop) {
    std::vector<std::vector<Matrix>> bases;
    bases.reserve(l_dyn_seq.size());
    for (const auto& l : l_dyn_seq) {
        const double lmax = lambda_max_or_default(l);
        bases.push_back(chebyshev_basis(rescale_laplacian(l, lmax), max_hop));
    }
    return bases;
}

}  // namespace

Tensor physics_layer(const Tensor& x, const std::vector<LaplacianMatrix>& l_dyn_seq,
                     const PhysicsParams& params) {
    const int m = x.rows();
    if (l_dyn_seq.size() != 1 && static_cast<int>(l_dyn_seq.size()) != m)
        throw ContractError("physics_layer: Laplacian sequence must have length 1 or M");
    if (static_cast<int>(params.kernel.size()) > m)
        throw ConfigurationError("physics_layer: kernel wider than the window");

    const auto bases = chebyshev_per_step(l_dyn_seq, params.max_hop());
    Tensor x_lag = shift_rows_lag1(x);

    Tensor spatial;
    if (l_dyn_seq.size() == 1) {
        for (std::size_t hi = 0; hi < params.hops.size(); ++hi) {
            Tensor term = matmul(matmul(params.theta[hi], x_lag),
                                 Tensor::from_matrix(bases[0][params.hops[hi]]));
            spatial = spatial.defined() ? add(spatial, term) : term;
        }
    } else {
        // Per-step Laplacians: assemble row t from the step's own basis.
        std::vector<Tensor> mixed;  // Theta_h . lag(x), reused across steps
        mixed.reserve(params.hops.size());
        for (std::size_t hi = 0; hi < params.hops.size(); ++hi)
            mixed.push_back(matmul(params.theta[hi], x_lag));
        std::vector<Tensor> rows;
        rows.reserve(m);
        for (int t = 0; t < m; ++t) {
            Tensor row;
            for (std::size_t hi = 0; hi < params.hops.size(); ++hi) {
                Tensor term = matmul(slice_rows(mixed[hi], t, t + 1),
                                     Tensor::from_matrix(bases[t][params.hops[hi]]));
                row = row.defined() ? add(row, term) : term;
            }
            rows.push_back(row);
        }
        spatial = concat_rows(rows);
    }

    Tensor source = matmul(x_lag, params.w_v);
    Tensor temporal = conv1d_time(toeplitz_apply(x), params.kernel);
    Tensor p_hat = sub(add(spatial, source), temporal);

    const auto& vals = p_hat.values();
    for (int t = 0; t < m; ++t)
        for (int j = 0; j < p_hat.cols(); ++j)
            if (!std::isfinite(vals[static_cast<std::size_t>(t) * p_hat.cols() + j]))
                throw NumericError("physics_layer: non-finite value at step " + std::to_string(t));
    return p_hat;
}

Tensor physics_stack(const Tensor& x, const std::vector<LaplacianMatrix>& l_dyn_seq,
                     const PhysicsParams& first, const PhysicsParams& second) {
    Tensor h = physics_layer(x, l_dyn_seq, first);
    return physics_layer(add(h, x), l_dyn_seq, second);
}

// --- LSTM ----------------------------------------------------------------------

LstmParams LstmParams::init(int input, int hidden, Rng& rng) {
    LstmParams p;
    p.hidden = hidden;
    auto gate = [&](Tensor& w, Tensor& u, Tensor& b) {
        w = xavier_uniform(hidden, input, rng);
        u = xavier_uniform(hidden, hidden, rng);
        b = Tensor::zeros(1, hidden, true);
    };
    gate(p.w_i, p.u_i, p.b_i);
    gate(p.w_f, p.u_f, p.b_f);
    gate(p.w_c, p.u_c, p.b_c);
    gate(p.w_o, p.u_o, p.b_o);
    return p;
}

std::vector<Tensor> LstmParams::parameters() const {
    return {w_i, u_i, b_i, w_f, u_f, b_f, w_c, u_c, b_c, w_o, u_o, b_o};
}

Tensor lstm_forward(const Tensor& x_seq, const LstmParams& params, const std::optional<Tensor>& h0,
                    const std::optional<Tensor>& c0) {
    const int m = x_seq.rows();
    const int hidden = params.hidden;
    Tensor h = h0 ? *h0 : Tensor::zeros(1, hidden);
    Tensor c = c0 ? *c0 : Tensor::zeros(1, hidden);
    if (h.rows() != 1 || h.cols() != hidden || c.rows() != 1 || c.cols() != hidden)
        throw DimensionError("lstm_forward: state shape must be 1 x hidden");

    const Tensor wi_t = transpose(params.w_i), ui_t = transpose(params.u_i);
    const Tensor wf_t = transpose(params.w_f), uf_t = transpose(params.u_f);
    const Tensor wc_t = transpose(params.w_c), uc_t = transpose(params.u_c);
    const Tensor wo_t = transpose(params.w_o), uo_t = transpose(params.u_o);

    std::vector<Tensor> outputs;
    outputs.reserve(m);
    for (int t = 0; t < m; ++t) {
        Tensor x_t = slice_rows(x_seq, t, t + 1);
        Tensor i_g = sigmoid(add(add(matmul(x_t, wi_t), matmul(h, ui_t)), params.b_i));
        Tensor f_g = sigmoid(add(add(matmul(x_t, wf_t), matmul(h, uf_t)), params.b_f));
        Tensor c_tilde = tanh(add(add(matmul(x_t, wc_t), matmul(h, uc_t)), params.b_c));
        Tensor o_g = sigmoid(add(add(matmul(x_t, wo_t), matmul(h, uo_t)), params.b_o));
        c = add(hadamard(f_g, c), hadamard(i_g, c_tilde));
        h = hadamard(o_g, tanh(c));
        outputs.push_back(h);
    }
    return concat_rows(outputs);
}

// --- temporal attention ---------------------------------------------------------

TemporalAttentionParams TemporalAttentionParams::init(int m_window, int hidden, Rng& rng) {
    TemporalAttentionParams p;
    p.v_e = xavier_uniform(m_window, m_window, rng);
    p.b_e = Tensor::zeros(m_window, m_window, true);
    p.u1 = xavier_uniform(hidden, 1, rng);
    p.u2 = xavier_uniform(1, hidden, rng);
    p.u3 = xavier_uniform(1, 1, rng);
    return p;
}

std::vector<Tensor> TemporalAttentionParams::parameters() const { return {v_e, b_e, u1, u2, u3}; }

Tensor temporal_attention(const Tensor& h_seq, const TemporalAttentionParams& params) {
    if (h_seq.rows() != params.v_e.rows())
        throw DimensionError("temporal_attention: window length does not match v_e");
    if (h_seq.cols() != params.u1.rows())
        throw DimensionError("temporal_attention: hidden width does not match u1");

    Tensor left = matmul(h_seq, params.u1);                                   // M x 1
    Tensor right = matmul(params.u2, mul_scalar(transpose(h_seq), params.u3));  // 1 x M
    Tensor e = matmul(params.v_e, sigmoid(add(matmul(left, right), params.b_e)));
    Tensor e_prime = softmax_rows(e);
    return matmul(e_prime, h_seq);
}

}  // namespace hspgnn
