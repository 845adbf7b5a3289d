#include "hspgnn/graph.hpp"

#include <cmath>
#include <utility>

namespace hspgnn {

GraphSpec GraphSpec::from_adjacency(Matrix adjacency) {
    if (adjacency.rows() != adjacency.cols())
        throw ValidationError("adjacency must be square");
    const int n = adjacency.rows();
    for (int i = 0; i < n; ++i) {
        if (adjacency.at(i, i) != 0.0) throw ValidationError("adjacency diagonal must be zero");
        for (int j = 0; j < n; ++j) {
            if (adjacency.at(i, j) < 0.0) throw ValidationError("adjacency weights must be nonnegative");
            if (std::fabs(adjacency.at(i, j) - adjacency.at(j, i)) > 1e-12)
                throw ValidationError("adjacency must be symmetric");
        }
    }
    GraphSpec g;
    g.n_nodes = n;
    g.adjacency = std::move(adjacency);
    return g;
}

namespace {

std::vector<double> degrees(const GraphSpec& g) {
    std::vector<double> d(g.n_nodes, 0.0);
    for (int i = 0; i < g.n_nodes; ++i)
        for (int j = 0; j < g.n_nodes; ++j) d[i] += g.adjacency.at(i, j);
    return d;
}

}  // namespace

LaplacianMatrix normalized_laplacian(const GraphSpec& g) {
    const int n = g.n_nodes;
    const auto deg = degrees(g);
    Matrix l = Matrix::identity(n);
    for (int i = 0; i < n; ++i) {
        if (deg[i] <= 0.0) continue;  // isolated node keeps its identity row/column
        for (int j = 0; j < n; ++j) {
            if (deg[j] <= 0.0) continue;
            const double a = g.adjacency.at(i, j);
            if (a != 0.0) l.at(i, j) -= a / std::sqrt(deg[i] * deg[j]);
        }
    }
    return {std::move(l), LaplacianKind::normalized};
}

LaplacianMatrix normalized_laplacian_similarity(const GraphSpec& g) {
    const int n = g.n_nodes;
    const auto deg = degrees(g);
    // D^{-1/2} (I - A) D^{1/2}; isolated nodes again degrade to identity.
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        const double di = deg[i] > 0.0 ? deg[i] : 1.0;
        for (int j = 0; j < n; ++j) {
            const double dj = deg[j] > 0.0 ? deg[j] : 1.0;
            const double base = (i == j ? 1.0 : 0.0) - g.adjacency.at(i, j);
            l.at(i, j) = base * std::sqrt(dj / di);
        }
    }
    return {std::move(l), LaplacianKind::normalized};
}

LaplacianMatrix rescale_laplacian(const LaplacianMatrix& l, double lambda_max) {
    if (!(lambda_max > 0.0)) throw ValidationError("rescale_laplacian: lambda_max must be positive");
    const int n = l.m.rows();
    Matrix out = l.m.scaled(2.0 / lambda_max);
    for (int i = 0; i < n; ++i) out.at(i, i) -= 1.0;
    return {std::move(out), LaplacianKind::rescaled};
}

double power_iteration_lambda_max(const LaplacianMatrix& l, int iters, double tol) {
    const int n = l.m.rows();
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        std::vector<double> w(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) w[i] += l.m.at(i, j) * v[j];
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-300) {
            // Iterate fell into the kernel; restart with a deterministic
            // perturbation so orthogonal starts still converge.
            for (int i = 0; i < n; ++i) v[i] += (i + 1) * 1e-3;
            double vn = 0.0;
            for (double x : v) vn += x * x;
            vn = std::sqrt(vn);
            for (double& x : v) x /= vn;
            continue;
        }
        for (int i = 0; i < n; ++i) w[i] /= norm;
        double next = 0.0;
        for (int i = 0; i < n; ++i) {
            double lv = 0.0;
            for (int j = 0; j < n; ++j) lv += l.m.at(i, j) * w[j];
            next += w[i] * lv;
        }
        v = std::move(w);
        if (it > 0 && std::fabs(next - lambda) < tol) return next;
        lambda = next;
    }
    return lambda;
}

double lambda_max_or_default(const LaplacianMatrix& l) {
    const double est = power_iteration_lambda_max(l);
    if (!std::isfinite(est) || est <= 1e-12) return 2.0;
    return est;
}

std::vector<Matrix> chebyshev_basis(const LaplacianMatrix& l_rescaled, int K) {
    if (l_rescaled.kind != LaplacianKind::rescaled)
        throw ContractError("chebyshev_basis: Laplacian must be rescaled");
    if (K < 0) throw ValidationError("chebyshev_basis: K must be nonnegative");
    const int n = l_rescaled.m.rows();

    // Nonzero pattern of L, reused across the recursion.
    struct Entry {
        int i, j;
        double v;
    };
    std::vector<Entry> nz;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (l_rescaled.m.at(i, j) != 0.0) nz.push_back({i, j, l_rescaled.m.at(i, j)});

    std::vector<Matrix> basis;
    basis.reserve(K + 1);
    basis.push_back(Matrix::identity(n));
    if (K == 0) return basis;
    basis.push_back(l_rescaled.m);
    for (int k = 2; k <= K; ++k) {
        Matrix t(n, n);
        const Matrix& prev = basis[k - 1];
        for (const auto& e : nz)
            for (int j = 0; j < n; ++j) t.at(e.i, j) += 2.0 * e.v * prev.at(e.j, j);
        const Matrix& prev2 = basis[k - 2];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) t.at(i, j) -= prev2.at(i, j);
        basis.push_back(std::move(t));
    }
    return basis;
}

Tensor toeplitz_apply(const Tensor& x) {
    const int m = x.rows(), n = x.cols();
    // H = I - S with S the strict one-step shift (first row zero), so the
    // whole product stays matrix-free and differentiable. shift_rows_lag1
    // clamps its first row; masking that row off recovers S exactly.
    Matrix keep = Matrix::filled(m, n, 1.0);
    for (int j = 0; j < n; ++j) keep.at(0, j) = 0.0;
    Tensor strict_shift = hadamard(shift_rows_lag1(x), Tensor::from_matrix(keep));
    return sub(x, strict_shift);
}

Matrix toeplitz_apply(const Matrix& x) {
    const int m = x.rows(), n = x.cols();
    Matrix out(m, n);
    for (int j = 0; j < n; ++j) out.at(0, j) = x.at(0, j);
    for (int t = 1; t < m; ++t)
        for (int j = 0; j < n; ++j) out.at(t, j) = x.at(t, j) - x.at(t - 1, j);
    return out;
}

Tensor toeplitz_power_apply(const Tensor& x, int m) {
    if (m < 1) throw ValidationError("toeplitz_power_apply: order must be >= 1");
    Tensor out = x;
    for (int i = 0; i < m; ++i) out = toeplitz_apply(out);
    return out;
}

Matrix toeplitz_power_apply(const Matrix& x, int m) {
    if (m < 1) throw ValidationError("toeplitz_power_apply: order must be >= 1");
    Matrix out = x;
    for (int i = 0; i < m; ++i) out = toeplitz_apply(out);
    return out;
}

Matrix toeplitz_matrix(int m) {
    Matrix h(m, m);
    for (int i = 0; i < m; ++i) {
        h.at(i, i) = 1.0;
        if (i > 0) h.at(i, i - 1) = -1.0;
    }
    return h;
}

DerivativeCombination solve_derivative_combination(int m_window, const std::vector<double>& lambdas) {
    if (m_window < 1) throw ValidationError("solve_derivative_combination: window must be positive");
    if (static_cast<int>(lambdas.size()) > m_window - 1)
        throw ValidationError("solve_derivative_combination: too many orders for the window length");

    const int m = m_window;
    // B = sum_m lambda_m H^m, built by repeated matrix-free application.
    Matrix b(m, m);
    Matrix power = Matrix::identity(m);
    for (std::size_t idx = 0; idx < lambdas.size(); ++idx) {
        power = toeplitz_apply(power);
        if (lambdas[idx] == 0.0) continue;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) b.at(i, j) += lambdas[idx] * power.at(i, j);
    }

    // Solve W H = B column-by-column through H^T W^T = B^T. H^T is upper
    // bidiagonal with unit diagonal, so back substitution is exact:
    // (H^T y)_t = y_t - y_{t+1}.
    Matrix w(m, m);
    for (int r = 0; r < m; ++r) {
        // Row r of W solves H^T w_r^T = b_r^T.
        double next = 0.0;
        for (int t = m - 1; t >= 0; --t) {
            const double y = b.at(r, t) + next;
            if (!std::isfinite(y)) throw NumericError("solve_derivative_combination: solve diverged");
            w.at(r, t) = y;
            next = y;
        }
    }

    const Matrix residual_m = w * toeplitz_matrix(m) - b;
    return {std::move(w), residual_m.frobenius_norm()};
}

}  // namespace hspgnn
