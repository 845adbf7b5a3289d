#ifndef HSPGNN_DATA_HPP
#define HSPGNN_DATA_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hspgnn/graph.hpp"
#include "hspgnn/matrix.hpp"
#include "hspgnn/rng.hpp"

namespace hspgnn {

// One M x N slice of a series with its aligned missing mask (1 = missing).
// observed() and hidden() split the values into complementary supports, so
// observed() + hidden() reconstructs the stored values exactly.
struct SeriesWindow {
    Matrix values;
    Matrix mask;

    Matrix observed() const;
    Matrix hidden() const;
};

struct MissingPattern {
    enum class Kind { point, block };
    Kind kind = Kind::point;
    double point_rate = 0.25;
    double block_drop_rate = 0.05;
    double block_failure_prob = 0.0015;
    int block_duration_min = 12;
    int block_duration_max = 48;
    std::uint64_t seed = 0;

    void validate() const;
};

struct LoadedSeries {
    Matrix values;  // 0 at originally-missing cells
    Matrix mask;    // 1 where the cell was empty
};

// CSV of T rows x N float columns; empty cells mark originally-missing
// values. Parse failures report the 1-based row and column.
LoadedSeries load_series_csv(const std::filesystem::path& path);

// Writes values with empty cells wherever mask is 1 (mask optional).
void write_series_csv(const std::filesystem::path& path, const Matrix& values,
                      const Matrix* mask = nullptr);

Matrix load_matrix_csv(const std::filesystem::path& path);  // fully dense, no empties
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

struct BlockEvent {
    int sensor = 0;
    int start = 0;
    int duration = 0;
};

struct MaskResult {
    Matrix mask;
    std::vector<BlockEvent> events;  // block mode only
};

// Point mode drops each observed entry independently; block mode combines
// per-sensor point drops with seeded failure runs of 12..48 steps. Entries
// that were already missing stay missing.
MaskResult apply_missing(const Matrix& values, const Matrix& mask, const MissingPattern& pattern);

// Per-node linear interpolation across masked runs; leading/trailing gaps
// extend the nearest observation and all-missing nodes become zero. Observed
// entries pass through bit-exactly.
Matrix preprocess(const Matrix& values, const Matrix& mask);

// Training-set enhancement: the preprocessed series plus two copies with
// fresh random drops re-interpolated, concatenated along time. Masks of the
// copies mark both the original gaps and the new synthetic fills.
struct AugmentResult {
    Matrix values;  // 3T x N
    Matrix mask;
};
AugmentResult augment(const Matrix& filled_values, const Matrix& mask, std::uint64_t seed,
                      double drop_rate = 0.25);

// Graph diffusion generator: X_{t+1} = X_t (I - alpha L) + noise on a seeded
// Erdos-Renyi graph (edge probability 0.3). Refuses unstable alpha.
struct SynthResult {
    Matrix values;
    GraphSpec graph;
};
SynthResult synth_diffusion(int n_nodes, int t_steps, double alpha, std::uint64_t graph_seed,
                            double noise_sigma);

// Aligned (input, next-window) pairs at the given stride; the trailing
// remainder is dropped. Requires T >= 2M.
struct WindowPair {
    SeriesWindow input;
    SeriesWindow target;
};
std::vector<WindowPair> make_windows(const Matrix& values, const Matrix& mask, int m_window,
                                     int stride);

// Per-node z-score over observed entries; constant nodes keep unit scale.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> stdev;

    static Normalizer fit(const Matrix& values, const Matrix& mask);
    Matrix apply(const Matrix& values) const;
    Matrix invert(const Matrix& values) const;
};

}  // namespace hspgnn

#endif
