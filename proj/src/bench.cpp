#include "hspgnn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "hspgnn/graph.hpp"
#include "hspgnn/rng.hpp"

namespace hspgnn {

namespace {

volatile double g_bench_sink = 0.0;

void consume(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v;
    g_bench_sink = g_bench_sink + s;  // keeps the result observable
}

// Dense multiply with no sparsity shortcuts; the direct route pays the full
// O(rows * inner * cols) cost by definition.
Matrix dense_multiply(const Matrix& a, const Matrix& b) {
    const int rows = a.rows(), inner = a.cols(), cols = b.cols();
    Matrix out(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int k = 0; k < inner; ++k) {
            const double av = a.at(i, k);
            for (int j = 0; j < cols; ++j) out.at(i, j) += av * b.at(k, j);
        }
    return out;
}

Matrix explicit_power_route(const Matrix& h, const Matrix& x, const std::vector<double>& lambdas) {
    Matrix power = Matrix::identity(h.rows());
    Matrix acc(x.rows(), x.cols());
    for (std::size_t m = 0; m < lambdas.size(); ++m) {
        power = dense_multiply(power, h);  // materialize H^m
        const Matrix term = dense_multiply(power, x);
        for (std::size_t i = 0; i < acc.data().size(); ++i)
            acc.data()[i] += lambdas[m] * term.data()[i];
    }
    return acc;
}

Matrix matrix_free_route(const Matrix& x, const std::vector<double>& lambdas) {
    Matrix acc(x.rows(), x.cols());
    Matrix cur = x;
    for (std::size_t m = 0; m < lambdas.size(); ++m) {
        cur = toeplitz_apply(cur);
        for (std::size_t i = 0; i < acc.data().size(); ++i)
            acc.data()[i] += lambdas[m] * cur.data()[i];
    }
    return acc;
}

Matrix conv_route(const Matrix& x, const std::vector<double>& taps) {
    // centered zero-padded convolution along time, plain arrays
    const int m = x.rows(), n = x.cols();
    const int kt = static_cast<int>(taps.size());
    const int half = (kt - 1) / 2;
    Matrix hx = toeplitz_apply(x);
    Matrix out(m, n);
    for (int t = 0; t < m; ++t)
        for (int d = 0; d < kt; ++d) {
            const int src = t + d - half;
            if (src < 0 || src >= m) continue;
            const double kv = taps[d];
            if (kv == 0.0) continue;
            for (int j = 0; j < n; ++j) out.at(t, j) += kv * hx.at(src, j);
        }
    return out;
}

template <typename F>
double median_time_ms(F&& fn, int repeats, int warmup) {
    using clock = std::chrono::steady_clock;
    for (int i = 0; i < warmup; ++i) fn();
    std::vector<double> times(repeats);
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = clock::now();
        fn();
        const auto t1 = clock::now();
        times[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    std::sort(times.begin(), times.end());
    return times[repeats / 2];
}

}  // namespace

std::vector<BenchResult> bench_temporal_mixing(int m_window, int n_nodes, int order, int repeats) {
    if (m_window < 2 || n_nodes < 2) throw ValidationError("bench: need M, N >= 2");
    if (order < 1 || order >= m_window) throw ValidationError("bench: order must be in [1, M)");
    if (repeats < 10) throw ValidationError("bench: need at least 10 repeats");

    // Deterministic mixing coefficients and input.
    std::vector<double> lambdas(order);
    for (int m = 0; m < order; ++m) lambdas[m] = std::pow(0.5, m);
    Rng rng(2024);
    Matrix x(m_window, n_nodes);
    for (auto& v : x.data()) v = rng.uniform(-1.0, 1.0);

    // Convolution taps from the derivative-combination solve: an interior row
    // of W carries the band of sum_m lambda_m H^{m-1}.
    auto combo = solve_derivative_combination(m_window, lambdas);
    const int kt = std::max(3, 2 * order - 1);
    const int half = (kt - 1) / 2;
    std::vector<double> taps(kt, 0.0);
    const int row = m_window / 2;
    for (int off = 0; off < order && off <= half; ++off)
        taps[half - off] = combo.w.at(row, row - off);

    const Matrix h = toeplitz_matrix(m_window);
    const Matrix ref = matrix_free_route(x, lambdas);
    const Matrix via_explicit = explicit_power_route(h, x, lambdas);
    const Matrix via_conv = conv_route(x, taps);

    // Correctness precedes speed: interior rows of the three routes agree.
    double dev_explicit = 0.0, dev_conv = 0.0;
    for (int t = order; t < m_window; ++t)
        for (int j = 0; j < n_nodes; ++j) {
            dev_explicit = std::max(dev_explicit, std::fabs(via_explicit.at(t, j) - ref.at(t, j)));
            dev_conv = std::max(dev_conv, std::fabs(via_conv.at(t, j) - ref.at(t, j)));
        }
    if (dev_explicit > 1e-9 || dev_conv > 1e-9)
        throw NumericError("bench: route equivalence failed (explicit " + std::to_string(dev_explicit) +
                           ", conv " + std::to_string(dev_conv) + ")");

    const int warmup = 2;
    std::vector<BenchResult> results;
    results.push_back({"explicit_power", m_window, n_nodes, order, repeats,
                       median_time_ms([&] { consume(explicit_power_route(h, x, lambdas)); }, repeats, warmup),
                       dev_explicit});
    results.push_back({"matrix_free", m_window, n_nodes, order, repeats,
                       median_time_ms([&] { consume(matrix_free_route(x, lambdas)); }, repeats, warmup),
                       0.0});
    results.push_back({"conv_approx", m_window, n_nodes, order, repeats,
                       median_time_ms([&] { consume(conv_route(x, taps)); }, repeats, warmup),
                       dev_conv});
    return results;
}

}  // namespace hspgnn
