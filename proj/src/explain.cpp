#include "hspgnn/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace hspgnn {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)
}

// --- planar flows -----------------------------------------------------------------

PlanarFlow PlanarFlow::init(int dim, Rng& rng) {
    if (dim < 1) throw ConfigurationError("planar flow: dimension must be positive");
    PlanarFlow f;
    f.u = Tensor::zeros(1, dim, true);
    f.w = Tensor::zeros(1, dim, true);
    f.b = Tensor::zeros(1, 1, true);
    for (auto& v : f.u.mutable_values()) v = rng.normal(0.0, 0.1);
    for (auto& v : f.w.mutable_values()) v = rng.normal(0.0, 0.1);
    return f;
}

Tensor PlanarFlow::u_hat() const {
    // Projection u + (max(w.u, -1 + eps) - w.u) w / |w|^2: already-valid u
    // passes through unchanged, violations land just inside the boundary so
    // the Jacobian factor cannot collapse to zero during fitting.
    constexpr double kMargin = 0.99;
    Tensor wu = matmul(u, transpose(w));  // 1x1
    double wnorm_sq = 0.0;
    for (double x : w.values()) wnorm_sq += x * x;
    if (wnorm_sq < 1e-24) return u;
    Tensor shifted = add(wu, Tensor::constant(1, 1, kMargin));
    Tensor relu = scale(add(shifted, abs(shifted)), 0.5);
    Tensor clamped = sub(relu, Tensor::constant(1, 1, kMargin));  // max(w.u, -0.99)
    Tensor w_scaled = div_scalar(w, sum(square(w)));
    return add(u, mul_scalar(w_scaled, sub(clamped, wu)));
}

double PlanarFlow::invertibility_dot() const {
    Tensor uh = u_hat();
    double dot = 0.0;
    for (int i = 0; i < w.cols(); ++i) dot += uh.values()[i] * w.values()[i];
    return dot;
}

PlanarStep planar_forward_batch(const Tensor& z, const PlanarFlow& flow) {
    if (z.cols() != flow.dim()) throw DimensionError("planar flow: dimension mismatch");
    const int batch = z.rows();

    Tensor uh = flow.u_hat();
    Tensor pre = add_rowvec(matmul(z, transpose(flow.w)), flow.b);  // B x 1
    Tensor t = tanh(pre);
    Tensor z_out = add(z, matmul(t, uh));

    // log|det J| = ln|1 + (u_hat . w)(1 - tanh^2)|
    Tensor uhw = matmul(uh, transpose(flow.w));  // 1x1
    Tensor ones = Tensor::constant(batch, 1, 1.0);
    Tensor inner = add(ones, mul_scalar(sub(ones, square(t)), uhw));
    for (double v : inner.values())
        if (std::fabs(v) < 1e-12)
            throw DegeneracyError("planar flow: Jacobian factor collapsed");
    Tensor log_det = log(abs(inner));
    return {z_out, log_det};
}

std::pair<std::vector<double>, double> planar_forward(const std::vector<double>& z,
                                                      const PlanarFlow& flow) {
    Tensor zt = Tensor::from_data(1, static_cast<int>(z.size()), z);
    auto step = planar_forward_batch(zt, flow);
    return {step.z_out.values(), step.log_det.item()};
}

FlowStack FlowStack::init(int k_flows, int dim, std::uint64_t seed) {
    if (k_flows < 0) throw ConfigurationError("flow stack: negative flow count");
    FlowStack s;
    s.dim = dim;
    Rng rng(seed);
    for (int k = 0; k < k_flows; ++k) s.flows.push_back(PlanarFlow::init(dim, rng));
    s.log_scale = Tensor::zeros(1, 1, true);
    return s;
}

std::vector<Tensor> FlowStack::parameters() const {
    std::vector<Tensor> out;
    for (const auto& f : flows)
        for (const auto& p : f.parameters()) out.push_back(p);
    out.push_back(log_scale);
    return out;
}

FlowForward flow_forward(const FlowStack& stack, const Tensor& z0) {
    Tensor z = z0;
    Tensor total;
    for (const auto& f : stack.flows) {
        auto step = planar_forward_batch(z, f);
        z = step.z_out;
        total = total.defined() ? add(total, step.log_det) : step.log_det;
    }
    if (!total.defined()) total = Tensor::zeros(z0.rows(), 1);
    return {z, total};
}

Tensor base_log_density(const Tensor& z0) {
    const int batch = z0.rows(), d = z0.cols();
    Tensor out = Tensor::zeros(batch, 1);
    for (int s = 0; s < batch; ++s) {
        double sq = 0.0;
        for (int j = 0; j < d; ++j) sq += z0.value(s, j) * z0.value(s, j);
        out.mutable_values()[s] = -0.5 * d * kLog2Pi - 0.5 * sq;
    }
    return out;
}

// --- missing impact ---------------------------------------------------------------

namespace {

// Pipeline outputs over non-overlapping windows of a fully specified series.
std::vector<Matrix> pipeline_outputs(const HSPGNNModel& model, const Matrix& values,
                                     const Matrix& mask) {
    const Matrix filled = preprocess(values, mask);
    const int m = model.cfg.m_window;
    std::vector<Matrix> outs;
    for (int start = 0; start + m <= filled.rows(); start += m) {
        SeriesWindow w;
        w.values = Matrix(m, filled.cols());
        w.mask = Matrix(m, filled.cols());
        for (int t = 0; t < m; ++t)
            for (int j = 0; j < filled.cols(); ++j) {
                w.values.at(t, j) = filled.at(start + t, j);
                w.mask.at(t, j) = mask.at(start + t, j);
            }
        auto res = forward_impute(w, model);
        outs.push_back(forward_predict(res.p_hat, model).to_matrix());
    }
    return outs;
}

}  // namespace

std::vector<double> missing_impact(const HSPGNNModel& model, const Matrix& full_values,
                                   const Matrix& observed_values, const Matrix& observed_mask) {
    if (!model.trained) throw ContractError("missing_impact: model is not trained");
    if (full_values.rows() != observed_values.rows() || full_values.cols() != observed_values.cols())
        throw DimensionError("missing_impact: value shapes differ");
    const int n = full_values.cols();

    const auto baseline = pipeline_outputs(model, full_values, Matrix(full_values.rows(), n));
    const auto observed = pipeline_outputs(model, observed_values, observed_mask);

    std::vector<double> impact(n, 0.0);
    std::vector<long> counts(n, 0);
    for (std::size_t w = 0; w < baseline.size(); ++w)
        for (int t = 0; t < baseline[w].rows(); ++t)
            for (int j = 0; j < n; ++j) {
                impact[j] += std::fabs(baseline[w].at(t, j) - observed[w].at(t, j));
                ++counts[j];
            }
    for (int j = 0; j < n; ++j) impact[j] = counts[j] > 0 ? impact[j] / counts[j] : 0.0;
    return impact;
}

std::vector<double> node_ablation_impacts(const HSPGNNModel& model, const Matrix& full_values,
                                          const Matrix& observed_values, const Matrix& observed_mask) {
    const int n = full_values.cols();
    std::vector<double> impact(n, 0.0);
    for (int node = 0; node < n; ++node) {
        Matrix mask = observed_mask;
        Matrix values = observed_values;
        for (int t = 0; t < values.rows(); ++t) {
            mask.at(t, node) = 1.0;
            values.at(t, node) = 0.0;
        }
        const auto per_node = missing_impact(model, full_values, values, mask);
        double acc = 0.0;
        for (double v : per_node) acc += v;
        impact[node] = acc / n;
    }
    return impact;
}

Tensor flow_objective(const FlowStack& stack, const Tensor& z0_samples,
                      const std::vector<ImpactSample>& targets, bool flip_sign) {
    if (stack.dim != 2)
        throw ContractError("flow_objective: latent dimension must be 2 for (value, impact) pairs");
    if (z0_samples.cols() != 2) throw DimensionError("flow_objective: samples must be B x 2");
    if (targets.empty()) throw ValidationError("flow_objective: no impact samples");

    const int batch = z0_samples.rows();
    auto fwd = flow_forward(stack, z0_samples);

    // ln p(P_obs, Z_K) = sum_j ln N((p_j, y_j); Z_K, s^2 I) + ln N(Z_K; 0, I)
    Tensor ones_col = Tensor::constant(2, 1, 1.0);
    Tensor total_sq;
    for (const auto& s : targets) {
        Tensor offset = Tensor::from_data(1, 2, {-s.p_obs, -s.y_obs});
        Tensor diff = add_rowvec(fwd.z_k, offset);
        Tensor sq = matmul(square(diff), ones_col);  // B x 1
        total_sq = total_sq.defined() ? add(total_sq, sq) : sq;
    }
    const double n_data = static_cast<double>(targets.size());
    Tensor var = exp(scale(stack.log_scale, 2.0));  // s^2, 1x1
    Tensor data_term = neg(div_scalar(scale(total_sq, 0.5), var));
    // per-sample constants: -n (ln 2pi) - 2 n ln s
    Tensor const_term = add_rowvec(Tensor::constant(batch, 1, -n_data * kLog2Pi),
                                   scale(stack.log_scale, -2.0 * n_data));
    Tensor prior = add(Tensor::constant(batch, 1, -kLog2Pi),
                       scale(matmul(square(fwd.z_k), ones_col), -0.5));
    Tensor log_joint = add(add(data_term, const_term), prior);

    Tensor log_q = sub(base_log_density(z0_samples), fwd.sum_log_det);
    // printed form: E[ln q_K - ln p]; flipped: E[ln p - ln q_K]
    Tensor obj_per_sample = flip_sign ? sub(log_joint, log_q) : sub(log_q, log_joint);
    return scale(sum(obj_per_sample), 1.0 / static_cast<double>(batch));
}

FlowFitReport fit_flows(FlowStack& stack, const std::vector<ImpactSample>& targets,
                        const FlowFitConfig& cfg) {
    if (cfg.steps < 1 || cfg.batch < 1) throw ConfigurationError("fit_flows: steps and batch must be positive");
    AdamOptimizer opt(stack.parameters());
    Rng rng(cfg.seed);
    FlowFitReport report;
    for (int step = 0; step < cfg.steps; ++step) {
        Tensor z0 = Tensor::zeros(cfg.batch, stack.dim);
        for (auto& v : z0.mutable_values()) v = rng.normal();
        Tensor obj = flow_objective(stack, z0, targets, cfg.flip_sign);
        const double value = obj.item();
        if (!std::isfinite(value))
            throw NumericError("fit_flows: non-finite objective at step " + std::to_string(step));
        report.objective.push_back(value);
        // ascend the objective
        Tensor loss = neg(obj);
        opt.zero_grad();
        backward(loss);
        opt.step(cfg.learning_rate);
    }
    return report;
}

std::vector<double> impact_densities(const FlowStack& stack, const std::vector<ImpactSample>& targets,
                                     int n_samples, std::uint64_t seed) {
    Rng rng(seed);
    Tensor z0 = Tensor::zeros(n_samples, stack.dim);
    for (auto& v : z0.mutable_values()) v = rng.normal();
    auto fwd = flow_forward(stack, z0);
    const double s2 = std::exp(2.0 * stack.log_scale.item());

    std::vector<double> density(targets.size(), 0.0);
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        double acc = 0.0;
        for (int s = 0; s < n_samples; ++s) {
            const double dp = targets[ti].p_obs - fwd.z_k.value(s, 0);
            const double dy = targets[ti].y_obs - fwd.z_k.value(s, 1);
            acc += std::exp(-(dp * dp + dy * dy) / (2.0 * s2)) / (2.0 * M_PI * s2);
        }
        density[ti] = acc / n_samples;
    }
    return density;
}

std::vector<double> impact_conditional_mean(const FlowStack& stack, const std::vector<double>& p_values,
                                            int n_samples, std::uint64_t seed) {
    Rng rng(seed);
    Tensor z0 = Tensor::zeros(n_samples, stack.dim);
    for (auto& v : z0.mutable_values()) v = rng.normal();
    auto fwd = flow_forward(stack, z0);
    const double s2 = std::exp(2.0 * stack.log_scale.item());

    std::vector<double> out;
    out.reserve(p_values.size());
    for (double p : p_values) {
        double num = 0.0, den = 0.0;
        for (int s = 0; s < n_samples; ++s) {
            const double dp = p - fwd.z_k.value(s, 0);
            const double w = std::exp(-dp * dp / (2.0 * s2));
            num += w * fwd.z_k.value(s, 1);
            den += w;
        }
        out.push_back(den > 1e-300 ? num / den : 0.0);
    }
    return out;
}

std::vector<ImpactReportRow> build_impact_report(const std::vector<ImpactSample>& samples,
                                                 const std::vector<double>& densities) {
    if (samples.size() != densities.size())
        throw DimensionError("impact report: sample/density count mismatch");
    std::vector<ImpactReportRow> rows(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        rows[i].node_id = samples[i].node;
        rows[i].impact = samples[i].y_obs;
        rows[i].density = densities[i];
    }
    std::vector<int> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rows[a].impact > rows[b].impact; });
    for (std::size_t r = 0; r < order.size(); ++r) rows[order[r]].rank = static_cast<int>(r) + 1;
    return rows;
}

// --- optical flow ------------------------------------------------------------------

namespace {

double center_tap(const PhysicsParams& p) {
    return p.kernel.values()[(p.kernel.size() - 1) / 2];
}

std::optional<double> mean_diag_hop1(const PhysicsParams& p) {
    for (std::size_t hi = 0; hi < p.hops.size(); ++hi) {
        if (p.hops[hi] != 1) continue;
        const Tensor& th = p.theta[hi];
        double acc = 0.0;
        for (int i = 0; i < th.rows(); ++i) acc += th.value(i, i);
        return acc / th.rows();
    }
    return std::nullopt;
}

}  // namespace

OpticalFlowField optical_flow(const HSPGNNModel& model,
                              const std::vector<LaplacianMatrix>& l_dyn_seq,
                              std::optional<double> lambda1_override,
                              std::optional<double> theta1_override) {
    if (!model.trained) throw ContractError("optical_flow: model is not trained");

    OpticalFlowField field;
    if (lambda1_override) {
        field.lambda1 = *lambda1_override;
    } else {
        field.lambda1 = 0.5 * (center_tap(model.phys1) + center_tap(model.phys2));
    }
    if (theta1_override) {
        field.theta1 = *theta1_override;
    } else {
        const auto d1 = mean_diag_hop1(model.phys1);
        const auto d2 = mean_diag_hop1(model.phys2);
        if (!d1 && !d2)
            throw ContractError("optical_flow: model has no first-hop mixing matrix");
        field.theta1 = d1 && d2 ? 0.5 * (*d1 + *d2) : (d1 ? *d1 : *d2);
    }
    if (std::fabs(field.theta1) < 1e-12)
        throw DegeneracyError("optical_flow: effective spatial coefficient is zero");

    for (std::size_t t = 0; t < l_dyn_seq.size(); ++t) {
        const Matrix& l = l_dyn_seq[t].m;
        for (int i = 0; i < l.rows(); ++i)
            for (int j = 0; j < l.cols(); ++j) {
                if (i == j) continue;
                if (std::fabs(l.at(i, j)) <= 1e-9) {
                    ++field.undefined_edges;
                    continue;
                }
                field.defined.push_back(
                    {static_cast<int>(t), i, j, -field.lambda1 / (field.theta1 * l.at(i, j))});
            }
    }
    std::stable_sort(field.defined.begin(), field.defined.end(),
                     [](const OpticalFlowEntry& a, const OpticalFlowEntry& b) {
                         return std::fabs(a.v) > std::fabs(b.v);
                     });
    return field;
}

void export_dynamic_graphs(const std::vector<LaplacianMatrix>& l_dyn_seq,
                           const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream index(out_dir / "index.json");
    if (!index) throw IoError("cannot write " + (out_dir / "index.json").string());
    index << "{\n  \"count\": " << l_dyn_seq.size() << ",\n  \"files\": [";
    for (std::size_t t = 0; t < l_dyn_seq.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "step_%04zu.csv", t);
        write_matrix_csv(out_dir / name, l_dyn_seq[t].m);
        index << (t ? ", " : "") << '"' << name << '"';
    }
    index << "]\n}\n";
}

}  // namespace hspgnn
