// Command-line front end: synth | mask | train | impute | evaluate | ablate |
// explain | bench. Every command reads one JSON config, writes its artifacts
// plus the resolved config into --out, and is a pure function of
// (config, input files, seed).

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "hspgnn/bench.hpp"
#include "hspgnn/explain.hpp"
#include "hspgnn/model.hpp"

using json = nlohmann::json;
using namespace hspgnn;
namespace fs = std::filesystem;

namespace {

// --- config handling ---------------------------------------------------------

// Tracks key consumption so unknown keys are rejected, and materializes every
// default into the resolved config echoed next to the outputs.
class Config {
public:
    Config(json raw, std::string command) : raw_(std::move(raw)), command_(std::move(command)) {
        if (!raw_.is_object()) throw ValidationError(command_ + ": config must be a JSON object");
    }

    template <typename T>
    T get(const std::string& key, const T& fallback) {
        seen_.insert(key);
        if (raw_.contains(key)) {
            try {
                resolved_[key] = raw_.at(key);
                return raw_.at(key).get<T>();
            } catch (const json::exception&) {
                throw ValidationError(command_ + ": bad value for key '" + key + "'");
            }
        }
        resolved_[key] = fallback;
        return fallback;
    }

    std::string require_path(const std::string& key) {
        seen_.insert(key);
        if (!raw_.contains(key) || !raw_.at(key).is_string())
            throw ValidationError(command_ + ": missing required path '" + key + "'");
        resolved_[key] = raw_.at(key);
        return raw_.at(key).get<std::string>();
    }

    std::optional<std::string> optional_path(const std::string& key) {
        seen_.insert(key);
        if (!raw_.contains(key)) {
            resolved_[key] = nullptr;
            return std::nullopt;
        }
        resolved_[key] = raw_.at(key);
        return raw_.at(key).get<std::string>();
    }

    // Hop selector: integer k -> {0, k}; list [a, b, ...] -> {0, a, b, ...}.
    std::vector<int> get_hops(const std::string& key, const json& fallback, std::string* label = nullptr) {
        seen_.insert(key);
        const json value = raw_.contains(key) ? raw_.at(key) : fallback;
        resolved_[key] = value;
        std::vector<int> hops{0};
        if (value.is_number_integer()) {
            hops.push_back(value.get<int>());
            if (label) *label = std::to_string(value.get<int>());
        } else if (value.is_array()) {
            std::string l = "[";
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (!value[i].is_number_integer())
                    throw ValidationError(command_ + ": '" + key + "' must hold integers");
                hops.push_back(value[i].get<int>());
                l += (i ? "," : "") + std::to_string(value[i].get<int>());
            }
            if (label) *label = l + "]";
        } else {
            throw ValidationError(command_ + ": '" + key + "' must be an integer or a list");
        }
        return hops;
    }

    void reject_unknown() const {
        for (auto it = raw_.begin(); it != raw_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ValidationError(command_ + ": unknown config key '" + it.key() + "'");
    }

    const json& resolved() const { return resolved_; }

private:
    json raw_;
    json resolved_;
    std::string command_;
    std::set<std::string> seen_;
};

Config load_config(const std::string& path, const std::string& command) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json raw;
    try {
        in >> raw;
    } catch (const json::exception& e) {
        throw ParseError("config " + path + ": " + e.what());
    }
    return Config(std::move(raw), command);
}

void write_resolved(const Config& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream os(out_dir / "resolved_config.json");
    os << cfg.resolved().dump(2) << "\n";
}

// --- shared pipeline pieces -----------------------------------------------------

struct PreparedSeries {
    Matrix raw_values;   // as loaded, zeros at masked cells
    Matrix mask;
    Matrix filled;       // preprocessed, then normalized when a normalizer is used
    Normalizer norm;
    bool normalized = false;
};

PreparedSeries prepare_series(const fs::path& series_path, bool normalize) {
    auto loaded = load_series_csv(series_path);
    PreparedSeries out;
    out.raw_values = loaded.values;
    out.mask = loaded.mask;
    out.filled = preprocess(loaded.values, loaded.mask);
    out.norm = Normalizer::fit(out.filled, out.mask);
    if (normalize) {
        out.filled = out.norm.apply(out.filled);
        out.normalized = true;
    }
    return out;
}

PreparedSeries prepare_series_with(const fs::path& series_path, const std::optional<Normalizer>& norm) {
    auto loaded = load_series_csv(series_path);
    PreparedSeries out;
    out.raw_values = loaded.values;
    out.mask = loaded.mask;
    out.filled = preprocess(loaded.values, loaded.mask);
    if (norm) {
        out.norm = *norm;
        out.filled = out.norm.apply(out.filled);
        out.normalized = true;
    }
    return out;
}

// Window start offsets covering the whole series: stride M plus a tail
// window flush against the end.
std::vector<int> coverage_offsets(int t_steps, int m) {
    if (t_steps < m) throw ValidationError("series shorter than one window");
    std::vector<int> starts;
    for (int s = 0; s + m <= t_steps; s += m) starts.push_back(s);
    if (starts.empty() || starts.back() + m < t_steps) starts.push_back(t_steps - m);
    return starts;
}

SeriesWindow slice_window(const Matrix& values, const Matrix& mask, int start, int m) {
    SeriesWindow w;
    w.values = Matrix(m, values.cols());
    w.mask = Matrix(m, values.cols());
    for (int t = 0; t < m; ++t)
        for (int j = 0; j < values.cols(); ++j) {
            w.values.at(t, j) = values.at(start + t, j);
            w.mask.at(t, j) = mask.at(start + t, j);
        }
    return w;
}

// Imputed full series in original units; observed cells are bit-identical to
// the input.
Matrix impute_series(const PreparedSeries& series, const HSPGNNModel& model) {
    Matrix out = series.raw_values;
    const int m = model.cfg.m_window;
    for (int start : coverage_offsets(series.filled.rows(), m)) {
        auto window = slice_window(series.filled, series.mask, start, m);
        auto res = forward_impute(window, model);
        Matrix imputed = res.p_hat.to_matrix();
        if (series.normalized) imputed = series.norm.invert(imputed);
        for (int t = 0; t < m; ++t)
            for (int j = 0; j < out.cols(); ++j)
                if (window.mask.at(t, j) != 0.0) out.at(start + t, j) = imputed.at(t, j);
    }
    return out;
}

EvalMetrics series_metrics(const Matrix& imputed, const Matrix& truth, const Matrix& mask) {
    if (truth.rows() != imputed.rows() || truth.cols() != imputed.cols())
        throw DimensionError("evaluate: truth shape does not match the series");
    double abs_sum = 0.0, sq_sum = 0.0;
    long count = 0;
    for (int t = 0; t < imputed.rows(); ++t)
        for (int j = 0; j < imputed.cols(); ++j) {
            if (mask.at(t, j) == 0.0) continue;
            const double err = truth.at(t, j) - imputed.at(t, j);
            abs_sum += std::fabs(err);
            sq_sum += err * err;
            ++count;
        }
    if (count == 0) throw ValidationError("evaluate: no masked positions to score");
    return {abs_sum / count, sq_sum / count};
}

struct TrainKeys {
    ModelConfig model;
    TrainConfig train;
    int stride = 0;
    bool do_augment = false;
    double augment_drop_rate = 0.25;
    bool normalize = true;
    std::string k_label;
};

TrainKeys read_train_keys(Config& cfg) {
    TrainKeys k;
    k.model.m_window = cfg.get<int>("m_window", 60);
    k.model.hops = cfg.get_hops("k", json(1), &k.k_label);
    k.model.k_t = cfg.get<int>("k_t", 3);
    k.model.hidden = cfg.get<int>("hidden", 0);
    k.model.mlp_hidden = cfg.get<int>("mlp_hidden", 0);
    const std::string variant = cfg.get<std::string>("variant", "standard");
    if (variant == "standard") {
        k.model.variant = ModelVariant::standard;
    } else if (variant == "l") {
        k.model.variant = ModelVariant::l_variant;
    } else {
        throw ValidationError("train: variant must be 'standard' or 'l'");
    }
    const std::string lap = cfg.get<std::string>("laplacian", "symmetric");
    if (lap == "symmetric") {
        k.model.laplacian = LaplacianForm::symmetric;
    } else if (lap == "similarity") {
        k.model.laplacian = LaplacianForm::similarity;
    } else {
        throw ValidationError("train: laplacian must be 'symmetric' or 'similarity'");
    }
    k.model.use_mlp = cfg.get<bool>("use_mlp", true);
    k.model.use_spatial_attention = cfg.get<bool>("use_spatial_attention", true);
    k.model.use_physics = cfg.get<bool>("use_physics", true);
    k.model.use_predictor = cfg.get<bool>("use_predictor", true);
    k.model.pinn_weight = cfg.get<double>("pinn_weight", 0.0);

    k.train.learning_rate = cfg.get<double>("learning_rate", 0.0005);
    k.train.decay = cfg.get<double>("decay", 0.92);
    k.train.batch_size = cfg.get<int>("batch_size", 8);
    k.train.epochs = cfg.get<int>("epochs", 30);
    k.train.seed = cfg.get<std::uint64_t>("seed", 0);
    k.train.validation_fraction = cfg.get<double>("validation_fraction", 0.16);
    k.train.clip_norm = cfg.get<double>("clip_norm", 5.0);
    k.train.remask_rate = cfg.get<double>("remask_rate", 0.2);
    k.train.reconstruction_weight = cfg.get<double>("reconstruction_weight", 1.0);

    k.stride = cfg.get<int>("stride", 0);
    if (k.stride <= 0) k.stride = k.model.m_window;
    k.do_augment = cfg.get<bool>("augment", false);
    k.augment_drop_rate = cfg.get<double>("augment_drop_rate", 0.25);
    k.normalize = cfg.get<bool>("normalize", true);
    return k;
}

std::optional<GraphSpec> load_adjacency(const std::optional<std::string>& path) {
    if (!path) return std::nullopt;
    return GraphSpec::from_adjacency(load_matrix_csv(*path));
}

HSPGNNModel train_once(const PreparedSeries& series, const std::optional<GraphSpec>& graph,
                       const TrainKeys& keys, TrainReport* report_out) {
    Matrix values = series.filled;
    Matrix mask = series.mask;
    if (keys.do_augment) {
        auto aug = augment(values, mask, keys.train.seed, keys.augment_drop_rate);
        values = std::move(aug.values);
        mask = std::move(aug.mask);
    }
    auto pairs = make_windows(values, mask, keys.model.m_window, keys.stride);
    auto model = HSPGNNModel::init(series.mask.cols(), keys.model, graph, keys.train.seed);
    if (series.normalized) model.normalizer = series.norm;
    auto report = train(pairs, model, keys.train);
    if (report_out) *report_out = std::move(report);
    return model;
}

// --- commands -------------------------------------------------------------------

int cmd_synth(Config& cfg, const fs::path& out) {
    const int n_nodes = cfg.get<int>("n_nodes", 20);
    const int t_steps = cfg.get<int>("t_steps", 2000);
    const double alpha = cfg.get<double>("alpha", 0.6);
    const double sigma = cfg.get<double>("noise_sigma", 0.01);
    const auto seed = cfg.get<std::uint64_t>("graph_seed", 0);
    cfg.reject_unknown();

    auto res = synth_diffusion(n_nodes, t_steps, alpha, seed, sigma);
    write_resolved(cfg, out);
    write_series_csv(out / "series.csv", res.values);
    write_series_csv(out / "truth.csv", res.values);
    write_matrix_csv(out / "adjacency.csv", res.graph.adjacency);
    return 0;
}

int cmd_mask(Config& cfg, const fs::path& out) {
    const auto series_path = cfg.require_path("series");
    MissingPattern pattern;
    const std::string mode = cfg.get<std::string>("mode", "point");
    if (mode == "point") {
        pattern.kind = MissingPattern::Kind::point;
    } else if (mode == "block") {
        pattern.kind = MissingPattern::Kind::block;
    } else {
        throw ValidationError("mask: mode must be 'point' or 'block'");
    }
    pattern.point_rate = cfg.get<double>("point_rate", 0.25);
    pattern.block_drop_rate = cfg.get<double>("block_drop_rate", 0.05);
    pattern.block_failure_prob = cfg.get<double>("block_failure_prob", 0.0015);
    pattern.block_duration_min = cfg.get<int>("block_duration_min", 12);
    pattern.block_duration_max = cfg.get<int>("block_duration_max", 48);
    pattern.seed = cfg.get<std::uint64_t>("seed", 0);
    cfg.reject_unknown();

    auto loaded = load_series_csv(series_path);
    auto res = apply_missing(loaded.values, loaded.mask, pattern);

    write_resolved(cfg, out);
    write_series_csv(out / "masked_series.csv", loaded.values, &res.mask);
    write_matrix_csv(out / "mask.csv", res.mask);
    if (pattern.kind == MissingPattern::Kind::block) {
        std::ofstream events(out / "events.jsonl");
        for (const auto& e : res.events) {
            json row = {{"sensor", e.sensor}, {"start", e.start}, {"duration", e.duration}};
            events << row.dump() << "\n";
        }
    }
    return 0;
}

int cmd_train(Config& cfg, const fs::path& out) {
    const auto series_path = cfg.require_path("series");
    const auto adjacency_path = cfg.optional_path("adjacency");
    TrainKeys keys = read_train_keys(cfg);
    cfg.reject_unknown();

    auto series = prepare_series(series_path, keys.normalize);
    auto graph = load_adjacency(adjacency_path);
    TrainReport report;
    auto model = train_once(series, graph, keys, &report);

    write_resolved(cfg, out);
    checkpoint_save(model, out / "checkpoint.bin");
    std::ofstream curves(out / "loss_curves.csv");
    curves << "epoch,train_loss,val_loss,learning_rate\n";
    for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
        char line[160];
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g\n", e, report.train_loss[e],
                      report.val_loss[e], report.learning_rates[e]);
        curves << line;
    }
    json summary = {{"best_epoch", report.best_epoch}, {"best_val_loss", report.best_val},
                    {"epochs", report.train_loss.size()}};
    std::ofstream(out / "train_summary.json") << summary.dump(2) << "\n";
    return 0;
}

int cmd_impute(Config& cfg, const fs::path& out) {
    const auto series_path = cfg.require_path("series");
    const auto ckpt_path = cfg.require_path("checkpoint");
    cfg.reject_unknown();

    auto model = checkpoint_load(ckpt_path);
    auto series = prepare_series_with(series_path, model.normalizer);
    Matrix imputed = impute_series(series, model);

    write_resolved(cfg, out);
    write_series_csv(out / "imputed.csv", imputed);
    return 0;
}

int cmd_evaluate(Config& cfg, const fs::path& out) {
    const auto series_path = cfg.require_path("series");
    const auto truth_path = cfg.require_path("truth");
    const auto ckpt_path = cfg.require_path("checkpoint");
    cfg.reject_unknown();

    auto model = checkpoint_load(ckpt_path);
    auto series = prepare_series_with(series_path, model.normalizer);
    const Matrix truth = load_matrix_csv(truth_path);
    const Matrix imputed = impute_series(series, model);
    const auto metrics = series_metrics(imputed, truth, series.mask);

    long masked = 0;
    for (double v : series.mask.data()) masked += v != 0.0 ? 1 : 0;
    write_resolved(cfg, out);
    json report = {{"mae", metrics.mae}, {"mse", metrics.mse}, {"masked_positions", masked}};
    std::ofstream(out / "metrics.json") << report.dump(2) << "\n";
    return 0;
}

int cmd_ablate(Config& cfg, const fs::path& out) {
    const auto series_path = cfg.require_path("series");
    const auto truth_path = cfg.require_path("truth");
    const auto adjacency_path = cfg.optional_path("adjacency");
    TrainKeys base_keys = read_train_keys(cfg);
    const std::vector<std::string> default_variants = {"full",        "without_satt",
                                                       "without_physics", "without_lstm_tatt",
                                                       "without_mlp", "vanilla_pinn"};
    const auto variants = cfg.get<std::vector<std::string>>("variants", default_variants);
    const json default_sweep = json::array({1, 2, json::array({1, 2})});
    const json k_sweep = cfg.get<json>("k_sweep", default_sweep);
    const double pinn_weight = cfg.get<double>("ablate_pinn_weight", 1.0);
    cfg.reject_unknown();

    auto series = prepare_series(series_path, base_keys.normalize);
    auto graph = load_adjacency(adjacency_path);
    const Matrix truth = load_matrix_csv(truth_path);

    auto score = [&](const TrainKeys& keys) {
        auto model = train_once(series, graph, keys, nullptr);
        return series_metrics(impute_series(series, model), truth, series.mask);
    };

    json variant_rows = json::array();
    for (const auto& name : variants) {
        TrainKeys keys = base_keys;
        if (name == "full") {
            // baseline as configured
        } else if (name == "without_satt") {
            keys.model.use_spatial_attention = false;
        } else if (name == "without_physics") {
            keys.model.use_physics = false;
        } else if (name == "without_lstm_tatt") {
            keys.model.use_predictor = false;
        } else if (name == "without_mlp") {
            keys.model.use_mlp = false;
        } else if (name == "vanilla_pinn") {
            keys.model.use_physics = false;
            keys.model.pinn_weight = pinn_weight;
        } else {
            throw ValidationError("ablate: unknown variant '" + name + "'");
        }
        const auto metrics = score(keys);
        variant_rows.push_back({{"name", name}, {"mae", metrics.mae}, {"mse", metrics.mse}});
    }

    json sweep_rows = json::array();
    {
        // baseline row first
        const auto metrics = score(base_keys);
        sweep_rows.push_back({{"k", base_keys.k_label}, {"mae", metrics.mae},
                              {"mse", metrics.mse}, {"baseline", true}});
    }
    for (const auto& entry : k_sweep) {
        TrainKeys keys = base_keys;
        std::string label;
        keys.model.hops = {0};
        if (entry.is_number_integer()) {
            keys.model.hops.push_back(entry.get<int>());
            label = std::to_string(entry.get<int>());
        } else if (entry.is_array()) {
            label = "[";
            for (std::size_t i = 0; i < entry.size(); ++i) {
                keys.model.hops.push_back(entry[i].get<int>());
                label += (i ? "," : "") + std::to_string(entry[i].get<int>());
            }
            label += "]";
        } else {
            throw ValidationError("ablate: k_sweep entries must be integers or lists");
        }
        const auto metrics = score(keys);
        sweep_rows.push_back({{"k", label}, {"mae", metrics.mae}, {"mse", metrics.mse},
                              {"baseline", false}});
    }

    write_resolved(cfg, out);
    json report = {{"variants", variant_rows}, {"k_sweep", sweep_rows}};
    std::ofstream(out / "ablation_report.json") << report.dump(2) << "\n";
    return 0;
}

int cmd_explain(Config& cfg, const fs::path& out) {
    const auto series_path = cfg.require_path("series");
    const auto ckpt_path = cfg.require_path("checkpoint");
    const auto truth_path = cfg.optional_path("truth");
    const int flow_k = cfg.get<int>("flow_k", 480);
    FlowFitConfig fit_cfg;
    fit_cfg.steps = cfg.get<int>("flow_steps", 100);
    fit_cfg.batch = cfg.get<int>("flow_batch", 100);
    fit_cfg.learning_rate = cfg.get<double>("flow_learning_rate", 0.0001);
    fit_cfg.seed = cfg.get<std::uint64_t>("flow_seed", 0);
    fit_cfg.flip_sign = cfg.get<bool>("flow_flip_sign", false);
    const int density_samples = cfg.get<int>("density_samples", 200);
    cfg.reject_unknown();

    auto model = checkpoint_load(ckpt_path);
    auto series = prepare_series_with(series_path, model.normalizer);
    const int n = series.mask.cols();

    // Ground truth when supplied, otherwise the interpolated fill stands in
    // (posterior mode).
    Matrix full = series.filled;
    if (truth_path) {
        Matrix t = load_matrix_csv(*truth_path);
        full = series.normalized ? series.norm.apply(t) : t;
    }
    Matrix observed = series.filled;
    for (std::size_t i = 0; i < observed.data().size(); ++i)
        if (series.mask.data()[i] != 0.0) observed.data()[i] = 0.0;

    const auto impacts = node_ablation_impacts(model, full, observed, series.mask);

    std::vector<ImpactSample> samples(n);
    for (int j = 0; j < n; ++j) {
        double mean = 0.0;
        long count = 0;
        for (int t = 0; t < series.filled.rows(); ++t)
            if (series.mask.at(t, j) == 0.0) {
                mean += series.filled.at(t, j);
                ++count;
            }
        samples[j] = {j, count ? mean / count : 0.0, impacts[j]};
    }

    FlowStack stack = FlowStack::init(flow_k, 2, fit_cfg.seed);
    fit_flows(stack, samples, fit_cfg);
    const auto densities = impact_densities(stack, samples, density_samples, fit_cfg.seed + 1);
    const auto rows = build_impact_report(samples, densities);

    // Per-window dynamic Laplacians for the flow field and the snapshots.
    std::vector<LaplacianMatrix> l_seq;
    for (int start : coverage_offsets(series.filled.rows(), model.cfg.m_window)) {
        auto window = slice_window(series.filled, series.mask, start, model.cfg.m_window);
        auto res = forward_impute(window, model);
        for (auto& l : res.l_dyn_seq) l_seq.push_back(std::move(l));
    }

    write_resolved(cfg, out);
    json impact_json = json::array();
    for (const auto& r : rows)
        impact_json.push_back({{"node_id", r.node_id}, {"impact", r.impact},
                               {"density", r.density}, {"rank", r.rank}});
    std::ofstream(out / "impact_report.json") << impact_json.dump(2) << "\n";

    auto field = optical_flow(model, l_seq);
    std::ofstream flow_csv(out / "optical_flow.csv");
    flow_csv << "t,i,j,v\n";
    for (const auto& e : field.defined) {
        char line[128];
        std::snprintf(line, sizeof(line), "%d,%d,%d,%.17g\n", e.t, e.i, e.j, e.v);
        flow_csv << line;
    }
    export_dynamic_graphs(l_seq, out / "dynamic_graphs");
    return 0;
}

int cmd_bench(Config& cfg, const fs::path& out) {
    const int n_nodes = cfg.get<int>("n_nodes", 300);
    const int order = cfg.get<int>("order", 3);
    const int repeats = cfg.get<int>("repeats", 25);
    const auto m_values = cfg.get<std::vector<int>>("m_values", {60});
    cfg.reject_unknown();

    json report = json::array();
    for (int m : m_values) {
        for (const auto& r : bench_temporal_mixing(m, n_nodes, order, repeats)) {
            report.push_back({{"method", r.method}, {"m", r.m}, {"n", r.n}, {"order", r.order},
                              {"repeats", r.repeats}, {"wall_time_ms", r.wall_time_ms},
                              {"max_deviation", r.max_deviation}});
        }
    }
    write_resolved(cfg, out);
    std::ofstream(out / "bench_report.json") << report.dump(2) << "\n";
    return 0;
}

const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const DimensionError*>(&e)) return "dimension_error";
    if (dynamic_cast<const ConfigurationError*>(&e)) return "configuration_error";
    if (dynamic_cast<const ContractError*>(&e)) return "contract_error";
    if (dynamic_cast<const ValidationError*>(&e)) return "validation_error";
    if (dynamic_cast<const NumericError*>(&e)) return "numeric_error";
    if (dynamic_cast<const DegeneracyError*>(&e)) return "degeneracy_error";
    if (dynamic_cast<const ParseError*>(&e)) return "parse_error";
    if (dynamic_cast<const LoadError*>(&e)) return "load_error";
    if (dynamic_cast<const IoError*>(&e)) return "io_error";
    return "error";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physics-incorporated graph network for time-series imputation"};
    app.require_subcommand(1);

    struct CommandSpec {
        std::string name;
        std::string help;
        int (*run)(Config&, const fs::path&);
    };
    const std::vector<CommandSpec> commands = {
        {"synth", "Generate a seeded diffusion dataset", cmd_synth},
        {"mask", "Apply a point or block missing pattern", cmd_mask},
        {"train", "Train a model and write the best checkpoint", cmd_train},
        {"impute", "Fill masked positions with a trained checkpoint", cmd_impute},
        {"evaluate", "Score imputations against ground truth", cmd_evaluate},
        {"ablate", "Train component ablations and a hop sweep", cmd_ablate},
        {"explain", "Impact, flow posterior, optical flow, dynamic graphs", cmd_explain},
        {"bench", "Time the temporal-mixing routes", cmd_bench},
    };

    struct Parsed {
        std::string config;
        std::string out;
        const CommandSpec* spec = nullptr;
    } parsed;

    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", parsed.config, "JSON config path")->required();
        sub->add_option("--out", parsed.out, "output directory")->required();
        sub->callback([&parsed, &c]() { parsed.spec = &c; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        Config cfg = load_config(parsed.config, parsed.spec->name);
        return parsed.spec->run(cfg, parsed.out);
    } catch (const std::exception& e) {
        json err = {{"error", error_kind(e)}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
