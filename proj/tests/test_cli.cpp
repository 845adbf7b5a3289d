#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "hspgnn_cli_test";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

int run(const std::string& command, const std::string& config, const std::string& out_dir,
        const std::string& stderr_file = "") {
    std::string cmd = std::string(HSPGNN_CLI_PATH) + " " + command + " --config " +
                      (kRoot / config).string() + " --out " + (kRoot / out_dir).string();
    if (!stderr_file.empty()) cmd += " 2> " + (kRoot / stderr_file).string();
    else cmd += " 2> /dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

struct Fixture {
    Fixture() {
        fs::remove_all(kRoot);
        fs::create_directories(kRoot);
    }
};

}  // namespace

TEST_CASE("cli pipeline end to end") {
    Fixture fx;

    write(kRoot / "synth.json",
          R"({"n_nodes": 6, "t_steps": 160, "alpha": 0.9, "noise_sigma": 0.01, "graph_seed": 11})");
    REQUIRE(run("synth", "synth.json", "synth") == 0);
    CHECK(fs::exists(kRoot / "synth/series.csv"));
    CHECK(fs::exists(kRoot / "synth/truth.csv"));
    CHECK(fs::exists(kRoot / "synth/adjacency.csv"));
    CHECK(fs::exists(kRoot / "synth/resolved_config.json"));

    // byte-identical rerun
    const auto first = slurp(kRoot / "synth/series.csv");
    REQUIRE(run("synth", "synth.json", "synth_again") == 0);
    CHECK(first == slurp(kRoot / "synth_again/series.csv"));

    write(kRoot / "mask.json",
          R"({"series": ")" + (kRoot / "synth/series.csv").string() +
              R"(", "mode": "point", "point_rate": 0.25, "seed": 3})");
    REQUIRE(run("mask", "mask.json", "masked") == 0);
    CHECK(fs::exists(kRoot / "masked/masked_series.csv"));
    CHECK(fs::exists(kRoot / "masked/mask.csv"));

    write(kRoot / "train.json",
          R"({"series": ")" + (kRoot / "masked/masked_series.csv").string() + R"(", "adjacency": ")" +
              (kRoot / "synth/adjacency.csv").string() +
              R"(", "m_window": 8, "k": 1, "epochs": 3, "batch_size": 8, "seed": 1, "stride": 4,)" +
              R"( "reconstruction_weight": 10.0, "remask_rate": 0.25, "decay": 0.98})");
    REQUIRE(run("train", "train.json", "trained") == 0);
    CHECK(fs::exists(kRoot / "trained/checkpoint.bin"));
    CHECK(fs::exists(kRoot / "trained/loss_curves.csv"));

    // training is a pure function of (config, inputs, seed)
    REQUIRE(run("train", "train.json", "trained_again") == 0);
    CHECK(slurp(kRoot / "trained/checkpoint.bin") == slurp(kRoot / "trained_again/checkpoint.bin"));
    CHECK(slurp(kRoot / "trained/loss_curves.csv") == slurp(kRoot / "trained_again/loss_curves.csv"));

    write(kRoot / "train_aug.json",
          R"({"series": ")" + (kRoot / "masked/masked_series.csv").string() + R"(", "adjacency": ")" +
              (kRoot / "synth/adjacency.csv").string() +
              R"(", "m_window": 8, "k": 1, "epochs": 1, "batch_size": 8, "seed": 1, "stride": 4,)" +
              R"( "augment": true})");
    REQUIRE(run("train", "train_aug.json", "trained_aug") == 0);
    CHECK(fs::exists(kRoot / "trained_aug/checkpoint.bin"));

    write(kRoot / "impute.json",
          R"({"series": ")" + (kRoot / "masked/masked_series.csv").string() + R"(", "checkpoint": ")" +
              (kRoot / "trained/checkpoint.bin").string() + R"("})");
    REQUIRE(run("impute", "impute.json", "imputed") == 0);

    // observed cells bit-identical, masked cells filled
    {
        std::ifstream masked(kRoot / "masked/masked_series.csv");
        std::ifstream imputed(kRoot / "imputed/imputed.csv");
        std::string lm, li;
        int filled = 0;
        while (std::getline(masked, lm) && std::getline(imputed, li)) {
            std::stringstream sm(lm), si(li);
            std::string cm, ci;
            while (std::getline(sm, cm, ',') && std::getline(si, ci, ',')) {
                if (cm.empty()) {
                    CHECK(!ci.empty());
                    ++filled;
                } else {
                    CHECK(cm == ci);
                }
            }
        }
        CHECK(filled > 0);
    }

    write(kRoot / "eval.json",
          R"({"series": ")" + (kRoot / "masked/masked_series.csv").string() + R"(", "truth": ")" +
              (kRoot / "synth/truth.csv").string() + R"(", "checkpoint": ")" +
              (kRoot / "trained/checkpoint.bin").string() + R"("})");
    REQUIRE(run("evaluate", "eval.json", "metrics") == 0);
    const auto metrics = slurp(kRoot / "metrics/metrics.json");
    CHECK(metrics.find("\"mae\"") != std::string::npos);
    CHECK(metrics.find("\"mse\"") != std::string::npos);

    // rerun reproduces the metrics byte for byte
    REQUIRE(run("evaluate", "eval.json", "metrics_again") == 0);
    CHECK(metrics == slurp(kRoot / "metrics_again/metrics.json"));

    write(kRoot / "explain.json",
          R"({"series": ")" + (kRoot / "masked/masked_series.csv").string() + R"(", "truth": ")" +
              (kRoot / "synth/truth.csv").string() + R"(", "checkpoint": ")" +
              (kRoot / "trained/checkpoint.bin").string() +
              R"(", "flow_k": 4, "flow_steps": 5, "flow_batch": 20, "flow_seed": 2})");
    REQUIRE(run("explain", "explain.json", "explained") == 0);
    CHECK(fs::exists(kRoot / "explained/impact_report.json"));
    CHECK(fs::exists(kRoot / "explained/optical_flow.csv"));
    CHECK(fs::exists(kRoot / "explained/dynamic_graphs/index.json"));
    // all six nodes ranked
    const auto impact = slurp(kRoot / "explained/impact_report.json");
    for (int rank = 1; rank <= 6; ++rank)
        CHECK(impact.find("\"rank\": " + std::to_string(rank)) != std::string::npos);

    write(kRoot / "bench.json", R"({"n_nodes": 20, "order": 2, "repeats": 10, "m_values": [16]})");
    REQUIRE(run("bench", "bench.json", "benched") == 0);
    const auto bench = slurp(kRoot / "benched/bench_report.json");
    CHECK(bench.find("explicit_power") != std::string::npos);
    CHECK(bench.find("matrix_free") != std::string::npos);
    CHECK(bench.find("conv_approx") != std::string::npos);

    write(kRoot / "ablate.json",
          R"({"series": ")" + (kRoot / "masked/masked_series.csv").string() + R"(", "truth": ")" +
              (kRoot / "synth/truth.csv").string() + R"(", "adjacency": ")" +
              (kRoot / "synth/adjacency.csv").string() +
              R"(", "m_window": 8, "k": 1, "epochs": 1, "batch_size": 8, "seed": 1, "stride": 4})");
    REQUIRE(run("ablate", "ablate.json", "ablated") == 0);
    const auto ablation = slurp(kRoot / "ablated/ablation_report.json");
    for (const char* name : {"full", "without_satt", "without_physics", "without_lstm_tatt",
                             "without_mlp", "vanilla_pinn"})
        CHECK(ablation.find(name) != std::string::npos);
    CHECK(ablation.find("\"k\": \"[1,2]\"") != std::string::npos);

    fs::remove_all(kRoot);
}

TEST_CASE("cli rejects unknown keys and reports JSON errors") {
    Fixture fx;
    write(kRoot / "bad.json", R"({"n_nodes": 6, "mystery_knob": 7})");
    CHECK(run("synth", "bad.json", "bad_out", "err.txt") != 0);
    const auto err = slurp(kRoot / "err.txt");
    CHECK(err.find("\"error\"") != std::string::npos);
    CHECK(err.find("mystery_knob") != std::string::npos);

    write(kRoot / "unstable.json", R"({"n_nodes": 6, "t_steps": 40, "alpha": 50.0})");
    CHECK(run("synth", "unstable.json", "unstable_out", "err2.txt") != 0);
    const auto err2 = slurp(kRoot / "err2.txt");
    CHECK(err2.find("configuration_error") != std::string::npos);
    CHECK(err2.find("unstable") != std::string::npos);

    write(kRoot / "missing.json", R"({"mode": "point"})");
    CHECK(run("mask", "missing.json", "missing_out", "err3.txt") != 0);
    CHECK(slurp(kRoot / "err3.txt").find("validation_error") != std::string::npos);

    fs::remove_all(kRoot);
}
