#include "hspgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

namespace hspgnn {

HSPGNNModel HSPGNNModel::init(int n_nodes, const ModelConfig& cfg,
                              std::optional<GraphSpec> base_graph, std::uint64_t seed) {
    if (n_nodes < 1) throw ConfigurationError("model: need at least one node");
    if (cfg.m_window < 2) throw ConfigurationError("model: window must span at least two steps");
    if (cfg.hidden > 0 && cfg.hidden != n_nodes)
        throw ConfigurationError("model: the prediction head requires hidden == n_nodes");
    if (base_graph && base_graph->n_nodes != n_nodes)
        throw ConfigurationError("model: base graph size does not match n_nodes");

    HSPGNNModel m;
    m.cfg = cfg;
    m.n_nodes = n_nodes;
    m.base_graph = std::move(base_graph);

    Rng rng(seed);
    const int hidden = m.hidden_size();
    const int mlp_hidden = cfg.mlp_hidden > 0 ? cfg.mlp_hidden : n_nodes;
    m.mlp = MlpParams::init(n_nodes, mlp_hidden, rng);
    m.satt = SpatialAttentionParams::init(n_nodes, cfg.m_window, rng);
    m.phys1 = PhysicsParams::init(cfg.m_window, n_nodes, cfg.hops, cfg.k_t, rng);
    m.phys2 = PhysicsParams::init(cfg.m_window, n_nodes, cfg.hops, cfg.k_t, rng);
    m.lstm = LstmParams::init(n_nodes, hidden, rng);
    m.tatt = TemporalAttentionParams::init(cfg.m_window, hidden, rng);
    if (cfg.variant == ModelVariant::l_variant) {
        m.lstm_extra = LstmParams::init(hidden, hidden, rng);
        m.tatt_extra = TemporalAttentionParams::init(cfg.m_window, hidden, rng);
    }

    // Pass-through start for the imputation path: the first physics layer
    // begins at zero and the second at an exact identity (lag combined with
    // the re-integrated first difference), so the stack maps x -> x until
    // training moves it. The coarse MLP starts near the identity for the
    // same reason. A random start here floods the masked positions with
    // noise the prediction loss recovers from very slowly.
    if (cfg.mlp_hidden == 0 || cfg.mlp_hidden == n_nodes) {
        for (auto& v : m.mlp.w1.mutable_values()) v = 0.0;
        for (auto& v : m.mlp.w2.mutable_values()) v = 0.0;
        for (int i = 0; i < n_nodes; ++i) {
            m.mlp.w1.mutable_values()[static_cast<std::size_t>(i) * n_nodes + i] = 0.5;
            m.mlp.w2.mutable_values()[static_cast<std::size_t>(i) * n_nodes + i] = 2.0;
        }
    }
    for (auto& t : m.phys1.theta)
        for (auto& v : t.mutable_values()) v = 0.0;
    for (auto& v : m.phys1.w_v.mutable_values()) v = 0.0;
    for (auto& v : m.phys1.kernel.mutable_values()) v = 0.0;
    const auto hop0 = std::find(m.phys2.hops.begin(), m.phys2.hops.end(), 0);
    if (hop0 != m.phys2.hops.end()) {
        const std::size_t idx = static_cast<std::size_t>(hop0 - m.phys2.hops.begin());
        for (auto& t : m.phys2.theta)
            for (auto& v : t.mutable_values()) v = 0.0;
        for (int t = 1; t < cfg.m_window; ++t)
            m.phys2.theta[idx].mutable_values()[static_cast<std::size_t>(t) * cfg.m_window + t] = 1.0;
        for (auto& v : m.phys2.w_v.mutable_values()) v = 0.0;
        for (auto& v : m.phys2.kernel.mutable_values()) v = 0.0;
        m.phys2.kernel.mutable_values()[(cfg.k_t - 1) / 2] = -1.0;
    }
    return m;
}

std::vector<std::pair<std::string, Tensor>> HSPGNNModel::named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    auto push_group = [&](const std::string& prefix, const std::vector<Tensor>& ts) {
        for (std::size_t i = 0; i < ts.size(); ++i)
            out.emplace_back(prefix + "." + std::to_string(i), ts[i]);
    };
    push_group("mlp", mlp.parameters());
    push_group("satt", satt.parameters());
    push_group("phys1", phys1.parameters());
    push_group("phys2", phys2.parameters());
    push_group("lstm", lstm.parameters());
    push_group("tatt", tatt.parameters());
    if (cfg.variant == ModelVariant::l_variant) {
        push_group("lstm_extra", lstm_extra.parameters());
        push_group("tatt_extra", tatt_extra.parameters());
    }
    return out;
}

std::vector<Tensor> HSPGNNModel::parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

// --- forward passes -----------------------------------------------------------

ImputeResult forward_impute(const SeriesWindow& window, const HSPGNNModel& model) {
    const int m = window.values.rows(), n = window.values.cols();
    if (m != model.cfg.m_window)
        throw DimensionError("forward_impute: window length " + std::to_string(m) +
                             " does not match the configured " + std::to_string(model.cfg.m_window));
    if (n != model.n_nodes) throw DimensionError("forward_impute: node count mismatch");

    const Tensor u_full = Tensor::from_matrix(window.values);
    const Tensor mask_t = Tensor::from_matrix(window.mask);
    Matrix keep_m(m, n);
    for (std::size_t i = 0; i < keep_m.data().size(); ++i)
        keep_m.data()[i] = 1.0 - window.mask.data()[i];
    const Tensor keep_t = Tensor::from_matrix(keep_m);
    const Tensor u_observed = hadamard(u_full, keep_t);

    ImputeResult res;
    Tensor coarse;
    if (model.cfg.use_mlp) {
        res.p_bar = mlp_coarse_impute(u_full, model.mlp);
        coarse = add(u_observed, hadamard(res.p_bar, mask_t));
    } else {
        // Interpolated fill doubles as the coarse estimate.
        res.p_bar = Tensor::zeros(m, n);
        coarse = u_full;
    }

    if (model.cfg.use_spatial_attention) {
        auto satt_res =
            spatial_attention(coarse, model.satt, model.base_graph, model.cfg.laplacian);
        res.s_prime = satt_res.s_prime;
        res.l_dyn_seq = {std::move(satt_res.l_dyn)};
    } else if (model.base_graph) {
        res.l_dyn_seq = {model.cfg.laplacian == LaplacianForm::similarity
                             ? normalized_laplacian_similarity(*model.base_graph)
                             : normalized_laplacian(*model.base_graph)};
    } else {
        res.l_dyn_seq = {LaplacianMatrix{Matrix::identity(n), LaplacianKind::normalized}};
    }

    res.refined = model.cfg.use_physics
                      ? physics_stack(coarse, res.l_dyn_seq, model.phys1, model.phys2)
                      : coarse;
    res.p_hat = add(u_observed, hadamard(res.refined, mask_t));
    return res;
}

Tensor forward_predict(const Tensor& imputed, const HSPGNNModel& model) {
    Tensor out = temporal_attention(lstm_forward(imputed, model.lstm), model.tatt);
    if (model.cfg.variant == ModelVariant::l_variant)
        out = temporal_attention(lstm_forward(out, model.lstm_extra), model.tatt_extra);
    return out;
}

LossResult masked_l1_loss(const Tensor& x_true, const Tensor& x_hat, const Matrix& mask_future) {
    if (x_true.rows() != x_hat.rows() || x_true.cols() != x_hat.cols())
        throw DimensionError("masked_l1_loss: shape mismatch");
    if (mask_future.rows() != x_true.rows() || mask_future.cols() != x_true.cols())
        throw DimensionError("masked_l1_loss: mask shape mismatch");

    Matrix keep(mask_future.rows(), mask_future.cols());
    int count = 0;
    for (std::size_t i = 0; i < keep.data().size(); ++i) {
        keep.data()[i] = mask_future.data()[i] == 0.0 ? 1.0 : 0.0;
        count += keep.data()[i] != 0.0 ? 1 : 0;
    }
    if (count == 0) return {Tensor::scalar(0.0), true};

    Tensor diff = hadamard(sub(x_true, x_hat), Tensor::from_matrix(keep));
    return {scale(sum(abs(diff)), 1.0 / count), false};
}

Tensor physics_residual_penalty(const Tensor& x, const std::vector<LaplacianMatrix>& l_dyn_seq,
                                const PhysicsParams& params) {
    if (l_dyn_seq.empty()) throw ContractError("physics_residual_penalty: missing Laplacian");
    const auto& l = l_dyn_seq.front();
    const auto basis = chebyshev_basis(rescale_laplacian(l, lambda_max_or_default(l)), params.max_hop());

    Tensor spatial;
    for (std::size_t hi = 0; hi < params.hops.size(); ++hi) {
        Tensor term = matmul(matmul(params.theta[hi], x), Tensor::from_matrix(basis[params.hops[hi]]));
        spatial = spatial.defined() ? add(spatial, term) : term;
    }
    Tensor temporal = conv1d_time(toeplitz_apply(x), params.kernel);
    Tensor residual = sub(temporal, add(spatial, matmul(x, params.w_v)));
    return scale(sum(abs(residual)), 1.0 / static_cast<double>(residual.size()));
}

// --- optimizer ------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
        if (!p.requires_grad()) throw ContractError("AdamOptimizer: parameter without gradients");
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void AdamOptimizer::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

double AdamOptimizer::clip_global_norm(double max_norm) {
    double sq = 0.0;
    for (const auto& p : params_)
        for (double g : p.grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double factor = max_norm / norm;
        for (auto& p : params_)
            for (double& g : p.mutable_grad()) g *= factor;
    }
    return norm;
}

void AdamOptimizer::step(double lr) {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& vals = params_[i].mutable_values();
        const auto& grad = params_[i].grad();
        for (std::size_t j = 0; j < vals.size(); ++j) {
            m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * grad[j];
            v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * grad[j] * grad[j];
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            vals[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

// --- training -------------------------------------------------------------------

void TrainConfig::validate() const {
    if (!(decay > 0.0 && decay <= 1.0)) throw ConfigurationError("train: decay must be in (0, 1]");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw ConfigurationError("train: validation_fraction must be in (0, 1)");
    if (epochs < 1 || batch_size < 1) throw ConfigurationError("train: epochs and batch_size must be positive");
    if (!(learning_rate > 0.0)) throw ConfigurationError("train: learning_rate must be positive");
    if (remask_rate < 0.0 || remask_rate >= 1.0)
        throw ConfigurationError("train: remask_rate must be in [0, 1)");
    if (reconstruction_weight < 0.0)
        throw ConfigurationError("train: reconstruction_weight must be nonnegative");
}

namespace {

// One training item: the input window with a seeded fraction of its
// observed entries hidden and re-interpolated, the positions that were
// hidden (their true values are known observations), and the untouched
// target window.
struct TrainingItem {
    WindowPair pair;
    Matrix recon_truth;    // original input values
    Matrix recon_support;  // 0 exactly at the re-masked positions
    bool has_support = false;
};

TrainingItem make_training_item(const WindowPair& source, double remask_rate, Rng& rng) {
    TrainingItem item;
    item.pair.target = source.target;
    item.recon_truth = source.input.values;

    const int m = source.input.values.rows(), n = source.input.values.cols();
    Matrix combined = source.input.mask;
    item.recon_support = Matrix::filled(m, n, 1.0);
    Matrix hidden_values = source.input.values;
    for (int t = 0; t < m; ++t)
        for (int j = 0; j < n; ++j) {
            if (combined.at(t, j) != 0.0 || !rng.bernoulli(remask_rate)) continue;
            combined.at(t, j) = 1.0;
            item.recon_support.at(t, j) = 0.0;
            hidden_values.at(t, j) = 0.0;
            item.has_support = true;
        }
    item.pair.input.values = preprocess(hidden_values, combined);
    item.pair.input.mask = std::move(combined);
    return item;
}

// Loss for one training item under the configured variant.
Tensor item_loss(const TrainingItem& item, const HSPGNNModel& model, double reconstruction_weight) {
    const WindowPair& pair = item.pair;
    auto impute = forward_impute(pair.input, model);
    Tensor loss;
    if (model.cfg.use_predictor) {
        Tensor x_hat = forward_predict(impute.p_hat, model);
        loss = masked_l1_loss(Tensor::from_matrix(pair.target.values), x_hat, pair.target.mask).loss;
    } else {
        // No prediction head: match the interpolated fill at the masked
        // positions of the input window (those values are synthetic, never
        // ground truth).
        Matrix support(pair.input.mask.rows(), pair.input.mask.cols());
        for (std::size_t i = 0; i < support.data().size(); ++i)
            support.data()[i] = pair.input.mask.data()[i] == 0.0 ? 1.0 : 0.0;
        loss = masked_l1_loss(Tensor::from_matrix(pair.input.values), impute.p_hat, support).loss;
    }
    if (reconstruction_weight > 0.0 && item.has_support) {
        // Grade the refined fill where the hidden truth is an actual
        // observation.
        Tensor recon = masked_l1_loss(Tensor::from_matrix(item.recon_truth), impute.refined,
                                      item.recon_support)
                           .loss;
        loss = add(loss, scale(recon, reconstruction_weight));
    }
    if (model.cfg.pinn_weight > 0.0)
        loss = add(loss, scale(physics_residual_penalty(impute.p_hat, impute.l_dyn_seq, model.phys1),
                               model.cfg.pinn_weight));
    return loss;
}

double validation_loss(const std::vector<TrainingItem>& items, const std::vector<int>& idx,
                       const HSPGNNModel& model, double reconstruction_weight) {
    double total = 0.0;
    for (int i : idx) total += item_loss(items[i], model, reconstruction_weight).item();
    return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
}

}  // namespace

TrainReport train(const std::vector<WindowPair>& pairs, HSPGNNModel& model, const TrainConfig& cfg) {
    cfg.validate();
    if (pairs.size() < 2) throw ValidationError("train: need at least two window pairs");

    // Trailing windows form the validation split (time-ordered, disjoint).
    const int n = static_cast<int>(pairs.size());
    int n_val = static_cast<int>(std::floor(cfg.validation_fraction * n));
    n_val = std::max(1, std::min(n_val, n - 1));
    std::vector<int> train_idx(n - n_val), val_idx(n_val);
    std::iota(train_idx.begin(), train_idx.end(), 0);
    std::iota(val_idx.begin(), val_idx.end(), n - n_val);

    auto params = model.parameters();
    AdamOptimizer opt(params);
    Rng rng(cfg.seed);

    // Re-masked variants are drawn once so the validation metric is stable
    // across epochs and runs.
    std::vector<TrainingItem> items;
    items.reserve(pairs.size());
    for (const auto& p : pairs) items.push_back(make_training_item(p, cfg.remask_rate, rng));

    TrainReport report;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_snapshot;

    auto snapshot_params = [&]() {
        std::vector<std::vector<double>> snap;
        snap.reserve(params.size());
        for (const auto& p : params) snap.push_back(p.values());
        return snap;
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate * std::pow(cfg.decay, static_cast<double>(epoch));
        report.learning_rates.push_back(lr);

        // Seeded shuffle keeps runs reproducible.
        std::vector<int> order = train_idx;
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(0, i)]);

        double epoch_loss = 0.0;
        int windows_seen = 0;
        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t batch_end =
                std::min(order.size(), batch_start + static_cast<std::size_t>(cfg.batch_size));
            opt.zero_grad();
            Tensor batch_loss;
            for (std::size_t k = batch_start; k < batch_end; ++k) {
                Tensor l = item_loss(items[order[k]], model, cfg.reconstruction_weight);
                batch_loss = batch_loss.defined() ? add(batch_loss, l) : l;
            }
            batch_loss = scale(batch_loss, 1.0 / static_cast<double>(batch_end - batch_start));
            const double loss_value = batch_loss.item();
            if (!std::isfinite(loss_value))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_start / cfg.batch_size));
            backward(batch_loss);
            opt.clip_global_norm(cfg.clip_norm);
            opt.step(lr);
            for (const auto& p : params)
                for (double x : p.values())
                    if (!std::isfinite(x))
                        throw NumericError("train: non-finite parameter after epoch " +
                                           std::to_string(epoch) + ", batch " +
                                           std::to_string(batch_start / cfg.batch_size));
            epoch_loss += loss_value * static_cast<double>(batch_end - batch_start);
            windows_seen += static_cast<int>(batch_end - batch_start);
        }
        report.train_loss.push_back(epoch_loss / std::max(1, windows_seen));

        const double val = validation_loss(items, val_idx, model, cfg.reconstruction_weight);
        report.val_loss.push_back(val);
        if (val < best_val) {
            best_val = val;
            best_snapshot = snapshot_params();
            report.best_epoch = epoch;
        }
    }

    if (!best_snapshot.empty())
        for (std::size_t i = 0; i < params.size(); ++i) params[i].mutable_values() = best_snapshot[i];
    report.best_val = best_val;
    model.trained = true;
    return report;
}

// --- evaluation -----------------------------------------------------------------

EvalMetrics evaluate(const std::vector<SeriesWindow>& windows, const std::vector<Matrix>& truth,
                     const HSPGNNModel& model, const Normalizer* denorm) {
    if (windows.size() != truth.size()) throw DimensionError("evaluate: windows/truth count mismatch");
    double abs_sum = 0.0, sq_sum = 0.0;
    long count = 0;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        auto res = forward_impute(windows[w], model);
        Matrix imputed = res.p_hat.to_matrix();
        if (denorm) imputed = denorm->invert(imputed);
        const Matrix& full = truth[w];
        if (full.rows() != imputed.rows() || full.cols() != imputed.cols())
            throw DimensionError("evaluate: truth window shape mismatch");
        for (int t = 0; t < imputed.rows(); ++t)
            for (int j = 0; j < imputed.cols(); ++j) {
                if (windows[w].mask.at(t, j) == 0.0) continue;
                const double err = full.at(t, j) - imputed.at(t, j);
                abs_sum += std::fabs(err);
                sq_sum += err * err;
                ++count;
            }
    }
    if (count == 0) throw ValidationError("evaluate: no masked positions to score");
    return {abs_sum / count, sq_sum / count};
}

// --- checkpointing ----------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'H', 'S', 'P', 'G'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_i32(std::ostream& os, std::int32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) throw LoadError("checkpoint: truncated file");
    return v;
}
std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 8)) throw LoadError("checkpoint: truncated file");
    return v;
}
std::int32_t get_i32(std::istream& is) {
    std::int32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) throw LoadError("checkpoint: truncated file");
    return v;
}
double get_f64(std::istream& is) {
    double v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 8)) throw LoadError("checkpoint: truncated file");
    return v;
}

void put_block(std::ostream& os, const std::string& name, const std::vector<double>& data) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(os, data.size());
    for (double v : data) put_f64(os, v);
}

std::pair<std::string, std::vector<double>> get_block(std::istream& is) {
    const std::uint32_t name_len = get_u32(is);
    if (name_len > 4096) throw LoadError("checkpoint: corrupt block name");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw LoadError("checkpoint: truncated file");
    const std::uint64_t count = get_u64(is);
    std::vector<double> data(count);
    for (auto& v : data) v = get_f64(is);
    return {std::move(name), std::move(data)};
}

}  // namespace

void checkpoint_save(const HSPGNNModel& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_i32(os, model.n_nodes);
    put_i32(os, model.cfg.m_window);
    put_i32(os, model.cfg.k_t);
    put_i32(os, model.cfg.hidden);
    put_i32(os, model.cfg.mlp_hidden);
    put_i32(os, model.cfg.variant == ModelVariant::l_variant ? 1 : 0);
    put_i32(os, model.cfg.laplacian == LaplacianForm::similarity ? 1 : 0);
    put_i32(os, (model.cfg.use_mlp ? 1 : 0) | (model.cfg.use_spatial_attention ? 2 : 0) |
                    (model.cfg.use_physics ? 4 : 0) | (model.cfg.use_predictor ? 8 : 0) |
                    (model.trained ? 16 : 0));
    put_f64(os, model.cfg.pinn_weight);
    put_i32(os, static_cast<std::int32_t>(model.cfg.hops.size()));
    for (int h : model.cfg.hops) put_i32(os, h);

    const auto named = model.named_parameters();
    std::uint32_t extra = 0;
    if (model.base_graph) ++extra;
    if (model.normalizer) extra += 2;
    put_u32(os, static_cast<std::uint32_t>(named.size()) + extra);
    for (const auto& [name, t] : named) put_block(os, name, t.values());
    if (model.base_graph) put_block(os, "base_adjacency", model.base_graph->adjacency.data());
    if (model.normalizer) {
        put_block(os, "norm_mean", model.normalizer->mean);
        put_block(os, "norm_stdev", model.normalizer->stdev);
    }
    if (!os) throw IoError("checkpoint write failed: " + path.string());
}

HSPGNNModel checkpoint_load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw LoadError("cannot open " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw LoadError("checkpoint: bad magic bytes");
    const std::uint32_t version = get_u32(is);
    if (version != kVersion)
        throw LoadError("checkpoint: unsupported format version " + std::to_string(version));

    const int n_nodes = get_i32(is);
    ModelConfig cfg;
    cfg.m_window = get_i32(is);
    cfg.k_t = get_i32(is);
    cfg.hidden = get_i32(is);
    cfg.mlp_hidden = get_i32(is);
    cfg.variant = get_i32(is) ? ModelVariant::l_variant : ModelVariant::standard;
    cfg.laplacian = get_i32(is) ? LaplacianForm::similarity : LaplacianForm::symmetric;
    const int flags = get_i32(is);
    cfg.use_mlp = flags & 1;
    cfg.use_spatial_attention = flags & 2;
    cfg.use_physics = flags & 4;
    cfg.use_predictor = flags & 8;
    cfg.pinn_weight = get_f64(is);
    const int n_hops = get_i32(is);
    if (n_hops < 0 || n_hops > 64) throw LoadError("checkpoint: corrupt hop list");
    cfg.hops.clear();
    for (int i = 0; i < n_hops; ++i) cfg.hops.push_back(get_i32(is));

    HSPGNNModel model = HSPGNNModel::init(n_nodes, cfg, std::nullopt, 0);
    model.trained = flags & 16;

    const std::uint32_t n_blocks = get_u32(is);
    auto named = model.named_parameters();
    std::size_t next_named = 0;
    std::optional<std::vector<double>> adjacency, mean, stdev;
    for (std::uint32_t b = 0; b < n_blocks; ++b) {
        auto [name, data] = get_block(is);
        if (name == "base_adjacency") {
            adjacency = std::move(data);
        } else if (name == "norm_mean") {
            mean = std::move(data);
        } else if (name == "norm_stdev") {
            stdev = std::move(data);
        } else {
            if (next_named >= named.size() || named[next_named].first != name)
                throw LoadError("checkpoint: unexpected parameter block '" + name + "'");
            if (named[next_named].second.size() != data.size())
                throw LoadError("checkpoint: size mismatch in block '" + name + "'");
            named[next_named].second.mutable_values() = std::move(data);
            ++next_named;
        }
    }
    if (next_named != named.size()) throw LoadError("checkpoint: missing parameter blocks");
    if (adjacency) {
        const int n = n_nodes;
        if (static_cast<int>(adjacency->size()) != n * n) throw LoadError("checkpoint: corrupt adjacency");
        model.base_graph = GraphSpec::from_adjacency(Matrix(n, n, std::move(*adjacency)));
    }
    if (mean && stdev) {
        Normalizer norm;
        norm.mean = std::move(*mean);
        norm.stdev = std::move(*stdev);
        model.normalizer = std::move(norm);
    }
    return model;
}

}  // namespace hspgnn
