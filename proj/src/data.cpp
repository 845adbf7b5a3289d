#include "hspgnn/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hspgnn {

Matrix SeriesWindow::observed() const {
    Matrix out = values;
    for (std::size_t i = 0; i < out.data().size(); ++i)
        if (mask.data()[i] != 0.0) out.data()[i] = 0.0;
    return out;
}

Matrix SeriesWindow::hidden() const {
    Matrix out = values;
    for (std::size_t i = 0; i < out.data().size(); ++i)
        if (mask.data()[i] == 0.0) out.data()[i] = 0.0;
    return out;
}

void MissingPattern::validate() const {
    if (point_rate < 0.0 || point_rate > 1.0) throw ValidationError("point_rate must be in [0,1]");
    if (block_drop_rate < 0.0 || block_drop_rate > 1.0)
        throw ValidationError("block_drop_rate must be in [0,1]");
    if (block_failure_prob < 0.0 || block_failure_prob > 1.0)
        throw ValidationError("block_failure_prob must be in [0,1]");
    if (block_duration_min <= 0 || block_duration_max < block_duration_min)
        throw ValidationError("block duration range must be positive with min <= max");
}

// --- CSV ----------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, int row, int col) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("CSV: non-numeric cell at row " + std::to_string(row + 1) + ", column " +
                         std::to_string(col + 1) + ": '" + cell + "'");
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

}  // namespace

LoadedSeries load_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<double>> values;
    std::vector<std::vector<double>> mask;
    std::string line;
    int row = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty() && in.peek() == std::char_traits<char>::eof()) break;
        const auto cells = split_csv_line(line);
        if (row == 0) width = cells.size();
        if (cells.size() != width)
            throw ParseError("CSV: ragged row " + std::to_string(row + 1) + " (expected " +
                             std::to_string(width) + " cells, found " + std::to_string(cells.size()) + ")");
        std::vector<double> vrow(width), mrow(width);
        for (std::size_t c = 0; c < width; ++c) {
            if (cells[c].empty()) {
                vrow[c] = 0.0;
                mrow[c] = 1.0;
            } else {
                vrow[c] = parse_cell(cells[c], row, static_cast<int>(c));
                mrow[c] = 0.0;
            }
        }
        values.push_back(std::move(vrow));
        mask.push_back(std::move(mrow));
        ++row;
    }
    if (values.empty()) throw ParseError("CSV: empty file " + path.string());

    LoadedSeries out;
    out.values = Matrix(row, static_cast<int>(width));
    out.mask = Matrix(row, static_cast<int>(width));
    for (int i = 0; i < row; ++i)
        for (std::size_t j = 0; j < width; ++j) {
            out.values.at(i, static_cast<int>(j)) = values[i][j];
            out.mask.at(i, static_cast<int>(j)) = mask[i][j];
        }
    return out;
}

namespace {

void write_double(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

void write_series_csv(const std::filesystem::path& path, const Matrix& values, const Matrix* mask) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (int i = 0; i < values.rows(); ++i) {
        for (int j = 0; j < values.cols(); ++j) {
            if (j) out << ',';
            if (mask && mask->at(i, j) != 0.0) continue;  // empty cell
            write_double(out, values.at(i, j));
        }
        out << '\n';
    }
}

Matrix load_matrix_csv(const std::filesystem::path& path) {
    const auto series = load_series_csv(path);
    if (series.mask.max_abs() != 0.0) throw ParseError("CSV: empty cells not allowed in " + path.string());
    return series.values;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    write_series_csv(path, m, nullptr);
}

// --- masking --------------------------------------------------------------------

MaskResult apply_missing(const Matrix& values, const Matrix& mask, const MissingPattern& pattern) {
    pattern.validate();
    if (values.rows() != mask.rows() || values.cols() != mask.cols())
        throw DimensionError("apply_missing: values/mask shape mismatch");
    const int t_steps = values.rows(), n = values.cols();
    Rng rng(pattern.seed);
    MaskResult out;
    out.mask = mask;

    if (pattern.kind == MissingPattern::Kind::point) {
        for (int t = 0; t < t_steps; ++t)
            for (int j = 0; j < n; ++j) {
                if (mask.at(t, j) != 0.0) continue;
                if (rng.bernoulli(pattern.point_rate)) out.mask.at(t, j) = 1.0;
            }
        return out;
    }

    // Block mode, per sensor: independent point drops plus failure runs.
    for (int j = 0; j < n; ++j) {
        for (int t = 0; t < t_steps; ++t)
            if (mask.at(t, j) == 0.0 && rng.bernoulli(pattern.block_drop_rate)) out.mask.at(t, j) = 1.0;
        for (int t = 0; t < t_steps; ++t) {
            if (!rng.bernoulli(pattern.block_failure_prob)) continue;
            const int duration = rng.uniform_int(pattern.block_duration_min, pattern.block_duration_max);
            out.events.push_back({j, t, duration});
            for (int s = t; s < std::min(t + duration, t_steps); ++s) out.mask.at(s, j) = 1.0;
        }
    }
    return out;
}

// --- preprocessing ----------------------------------------------------------------

Matrix preprocess(const Matrix& values, const Matrix& mask) {
    if (values.rows() != mask.rows() || values.cols() != mask.cols())
        throw DimensionError("preprocess: values/mask shape mismatch");
    const int t_steps = values.rows(), n = values.cols();
    Matrix out = values;
    for (int j = 0; j < n; ++j) {
        int prev = -1;  // last observed index
        for (int t = 0; t < t_steps; ++t) {
            if (mask.at(t, j) != 0.0) continue;
            if (prev == -1 && t > 0) {
                // leading gap: constant extension backwards
                for (int s = 0; s < t; ++s) out.at(s, j) = values.at(t, j);
            } else if (prev >= 0 && t - prev > 1) {
                const double lo = values.at(prev, j), hi = values.at(t, j);
                for (int s = prev + 1; s < t; ++s) {
                    const double w = static_cast<double>(s - prev) / (t - prev);
                    out.at(s, j) = lo + w * (hi - lo);
                }
            }
            prev = t;
        }
        if (prev == -1) {
            for (int t = 0; t < t_steps; ++t) out.at(t, j) = 0.0;  // all-missing node
        } else if (prev < t_steps - 1) {
            for (int t = prev + 1; t < t_steps; ++t) out.at(t, j) = values.at(prev, j);
        }
    }
    return out;
}

AugmentResult augment(const Matrix& filled_values, const Matrix& mask, std::uint64_t seed,
                      double drop_rate) {
    const int t_steps = filled_values.rows(), n = filled_values.cols();
    AugmentResult out;
    out.values = Matrix(3 * t_steps, n);
    out.mask = Matrix(3 * t_steps, n);

    // Copy 0: the preprocessed original, untouched.
    for (int t = 0; t < t_steps; ++t)
        for (int j = 0; j < n; ++j) {
            out.values.at(t, j) = filled_values.at(t, j);
            out.mask.at(t, j) = mask.at(t, j);
        }

    Rng rng(seed);
    for (int copy = 1; copy <= 2; ++copy) {
        Matrix extra_mask = mask;
        for (int t = 0; t < t_steps; ++t)
            for (int j = 0; j < n; ++j)
                if (extra_mask.at(t, j) == 0.0 && rng.bernoulli(drop_rate)) extra_mask.at(t, j) = 1.0;
        const Matrix refilled = preprocess(filled_values, extra_mask);
        const int base = copy * t_steps;
        for (int t = 0; t < t_steps; ++t)
            for (int j = 0; j < n; ++j) {
                out.values.at(base + t, j) = refilled.at(t, j);
                out.mask.at(base + t, j) = extra_mask.at(t, j);
            }
    }
    return out;
}

// --- synthetic generator ------------------------------------------------------------

SynthResult synth_diffusion(int n_nodes, int t_steps, double alpha, std::uint64_t graph_seed,
                            double noise_sigma) {
    if (n_nodes < 2 || t_steps < 1) throw ValidationError("synth_diffusion: need >= 2 nodes and >= 1 step");
    if (alpha < 0.0) throw ConfigurationError("synth_diffusion: alpha must be nonnegative");

    Rng rng(graph_seed);
    Matrix a(n_nodes, n_nodes);
    for (int i = 0; i < n_nodes; ++i)
        for (int j = i + 1; j < n_nodes; ++j)
            if (rng.bernoulli(0.3)) {
                a.at(i, j) = 1.0;
                a.at(j, i) = 1.0;
            }
    GraphSpec graph = GraphSpec::from_adjacency(a);
    const LaplacianMatrix lap = normalized_laplacian(graph);

    // Stability: eigenvalues of I - alpha L live in [1 - alpha*lmax, 1].
    const double lmax = lambda_max_or_default(lap);
    if (alpha * lmax > 2.0 + 1e-9)
        throw ConfigurationError("synth_diffusion: alpha " + std::to_string(alpha) +
                                 " is unstable for lambda_max " + std::to_string(lmax) +
                                 " (need alpha * lambda_max <= 2)");

    // Step matrix I - alpha L; rows of X evolve as x <- x S^T = x S (symmetric).
    Matrix step = lap.m.scaled(-alpha);
    for (int i = 0; i < n_nodes; ++i) step.at(i, i) += 1.0;

    Matrix x(t_steps, n_nodes);
    for (int j = 0; j < n_nodes; ++j) x.at(0, j) = rng.normal();
    for (int t = 1; t < t_steps; ++t) {
        for (int j = 0; j < n_nodes; ++j) {
            double v = 0.0;
            for (int k = 0; k < n_nodes; ++k) v += x.at(t - 1, k) * step.at(k, j);
            x.at(t, j) = v + (noise_sigma > 0.0 ? rng.normal(0.0, noise_sigma) : 0.0);
        }
    }
    return {std::move(x), std::move(graph)};
}

// --- windowing ----------------------------------------------------------------------

std::vector<WindowPair> make_windows(const Matrix& values, const Matrix& mask, int m_window,
                                     int stride) {
    if (values.rows() != mask.rows() || values.cols() != mask.cols())
        throw DimensionError("make_windows: values/mask shape mismatch");
    if (m_window < 1 || stride < 1) throw ValidationError("make_windows: window and stride must be positive");
    const int t_steps = values.rows(), n = values.cols();
    if (t_steps < 2 * m_window)
        throw ValidationError("make_windows: series length " + std::to_string(t_steps) +
                              " is shorter than two windows of " + std::to_string(m_window));

    auto slice = [&](int r0) {
        SeriesWindow w;
        w.values = Matrix(m_window, n);
        w.mask = Matrix(m_window, n);
        for (int t = 0; t < m_window; ++t)
            for (int j = 0; j < n; ++j) {
                w.values.at(t, j) = values.at(r0 + t, j);
                w.mask.at(t, j) = mask.at(r0 + t, j);
            }
        return w;
    };

    std::vector<WindowPair> pairs;
    for (int start = 0; start + 2 * m_window <= t_steps; start += stride)
        pairs.push_back({slice(start), slice(start + m_window)});
    return pairs;
}

// --- normalization --------------------------------------------------------------------

Normalizer Normalizer::fit(const Matrix& values, const Matrix& mask) {
    const int t_steps = values.rows(), n = values.cols();
    Normalizer norm;
    norm.mean.assign(n, 0.0);
    norm.stdev.assign(n, 1.0);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        int count = 0;
        for (int t = 0; t < t_steps; ++t)
            if (mask.at(t, j) == 0.0) {
                s += values.at(t, j);
                ++count;
            }
        if (count == 0) continue;
        const double mu = s / count;
        double var = 0.0;
        for (int t = 0; t < t_steps; ++t)
            if (mask.at(t, j) == 0.0) var += (values.at(t, j) - mu) * (values.at(t, j) - mu);
        var /= count;
        norm.mean[j] = mu;
        norm.stdev[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    return norm;
}

Matrix Normalizer::apply(const Matrix& values) const {
    Matrix out = values;
    for (int t = 0; t < out.rows(); ++t)
        for (int j = 0; j < out.cols(); ++j) out.at(t, j) = (out.at(t, j) - mean[j]) / stdev[j];
    return out;
}

Matrix Normalizer::invert(const Matrix& values) const {
    Matrix out = values;
    for (int t = 0; t < out.rows(); ++t)
        for (int j = 0; j < out.cols(); ++j) out.at(t, j) = out.at(t, j) * stdev[j] + mean[j];
    return out;
}

}  // namespace hspgnn
