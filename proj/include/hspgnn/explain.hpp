#ifndef HSPGNN_EXPLAIN_HPP
#define HSPGNN_EXPLAIN_HPP

#include <filesystem>
#include <optional>
#include <vector>

#include "hspgnn/model.hpp"

namespace hspgnn {

// --- planar normalizing flows ---------------------------------------------------

// z -> z + u_hat * tanh(w^T z + b), with the standard reparameterization
// u_hat = u + (softplus(w^T u) - 1 - w^T u) w / |w|^2 keeping w^T u_hat >= -1,
// hence invertibility, after every parameter update.
struct PlanarFlow {
    Tensor u;  // 1 x d
    Tensor w;  // 1 x d
    Tensor b;  // 1 x 1

    static PlanarFlow init(int dim, Rng& rng);
    int dim() const { return u.cols(); }
    Tensor u_hat() const;               // reparameterized, differentiable
    double invertibility_dot() const;   // w^T u_hat, must stay >= -1
    std::vector<Tensor> parameters() const { return {u, w, b}; }
};

struct PlanarStep {
    Tensor z_out;    // B x d
    Tensor log_det;  // B x 1
};

// Batched forward with per-sample log |det J|. Throws DegeneracyError when
// the Jacobian factor collapses below 1e-12.
PlanarStep planar_forward_batch(const Tensor& z, const PlanarFlow& flow);

// Single-sample convenience: returns (z_out, log_det).
std::pair<std::vector<double>, double> planar_forward(const std::vector<double>& z,
                                                      const PlanarFlow& flow);

struct FlowStack {
    std::vector<PlanarFlow> flows;
    int dim = 0;
    Tensor log_scale;  // log of the joint-likelihood scale, learnable

    static FlowStack init(int k_flows, int dim, std::uint64_t seed);
    std::vector<Tensor> parameters() const;
};

struct FlowForward {
    Tensor z_k;          // B x d
    Tensor sum_log_det;  // B x 1
};

FlowForward flow_forward(const FlowStack& stack, const Tensor& z0);

// Standard-normal log density per sample, as a constant B x 1 tensor.
Tensor base_log_density(const Tensor& z0);

// --- missing impact ---------------------------------------------------------------

// Per-node output difference between the pipeline run on the full series and
// on the observed series: Y[j] averages |out_full - out_observed| over node
// j's output positions. Identical inputs give exactly zero. Requires a
// trained model.
std::vector<double> missing_impact(const HSPGNNModel& model, const Matrix& full_values,
                                   const Matrix& observed_values, const Matrix& observed_mask);

// Fidelity protocol: discard one node's observations at a time and score the
// whole-output perturbation, one scalar per node.
std::vector<double> node_ablation_impacts(const HSPGNNModel& model, const Matrix& full_values,
                                          const Matrix& observed_values, const Matrix& observed_mask);

struct ImpactSample {
    int node = 0;
    double p_obs = 0.0;  // per-node observed summary
    double y_obs = 0.0;  // measured impact
};

// Sample-batch estimate of the latent-information objective
//   E[ -ln p(P_obs, Z_K) + ln q0(Z_0) - sum_k ln|det J_k| ]
// with the joint modeled as an isotropic Gaussian around Z_K plus a standard
// normal prior. The printed sign convention is kept by default; flip_sign
// selects the negated form, which is the usual variational bound and the
// direction under which fitting concentrates the posterior on the data.
Tensor flow_objective(const FlowStack& stack, const Tensor& z0_samples,
                      const std::vector<ImpactSample>& targets, bool flip_sign = false);

struct FlowFitConfig {
    double learning_rate = 0.0001;
    int batch = 100;
    int steps = 100;
    std::uint64_t seed = 0;
    bool flip_sign = false;
};

struct FlowFitReport {
    std::vector<double> objective;  // per step, pre-update
};

// Adam ascent on flow_objective with fresh base samples each step.
FlowFitReport fit_flows(FlowStack& stack, const std::vector<ImpactSample>& targets,
                        const FlowFitConfig& cfg);

// Gaussian joint density of a node's (p_obs, y_obs) pair under the fitted
// posterior, averaged over transformed samples.
std::vector<double> impact_densities(const FlowStack& stack, const std::vector<ImpactSample>& targets,
                                     int n_samples, std::uint64_t seed);

// Expected impact given a node summary under the fitted joint: a kernel
// regression over the transformed samples. Needs no impact measurement for
// the queried nodes, so it scores held-out nodes.
std::vector<double> impact_conditional_mean(const FlowStack& stack, const std::vector<double>& p_values,
                                            int n_samples, std::uint64_t seed);

struct ImpactReportRow {
    int node_id = 0;
    double impact = 0.0;
    double density = 0.0;
    int rank = 0;  // 1 = highest impact
};

std::vector<ImpactReportRow> build_impact_report(const std::vector<ImpactSample>& samples,
                                                 const std::vector<double>& densities);

// --- graph-like optical flow --------------------------------------------------------

struct OpticalFlowEntry {
    int t = 0;
    int i = 0;
    int j = 0;
    double v = 0.0;
};

struct OpticalFlowField {
    std::vector<OpticalFlowEntry> defined;  // sorted by |v|, descending
    long undefined_edges = 0;               // off-diagonal pairs with no Laplacian support
    double lambda1 = 0.0;                   // effective temporal coefficient
    double theta1 = 0.0;                    // effective first-hop spatial coefficient
};

// Transfer rate per edge and step: v = -lambda1 / (theta1 * L_t[i][j]),
// defined where |L_t[i][j]| > 1e-9. The scalar coefficients reduce the
// learned tensors (mean center kernel tap, mean diagonal of the first-hop
// mixing matrix) and can be overridden.
OpticalFlowField optical_flow(const HSPGNNModel& model,
                              const std::vector<LaplacianMatrix>& l_dyn_seq,
                              std::optional<double> lambda1_override = std::nullopt,
                              std::optional<double> theta1_override = std::nullopt);

// Per-step matrix snapshots as CSV files plus a JSON index.
void export_dynamic_graphs(const std::vector<LaplacianMatrix>& l_dyn_seq,
                           const std::filesystem::path& out_dir);

}  // namespace hspgnn

#endif
