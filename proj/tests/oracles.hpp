#ifndef HSPGNN_TEST_ORACLES_HPP
#define HSPGNN_TEST_ORACLES_HPP

// Independent reference computations used by the test suites. Everything here
// is deliberately brute-force and kept apart from the library code paths it
// checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "hspgnn/matrix.hpp"
#include "hspgnn/rng.hpp"

namespace oracles {

using hspgnn::Matrix;

// The derivative operator exactly as printed: an M x M band acting on the
// reversed stacking [X_M; ...; X_1], emitting [dX_1; ...; dX_M].
inline Matrix reversed_stacking_toeplitz(int m) {
    Matrix h(m, m);
    h.at(0, m - 1) = 1.0;
    for (int r = 1; r < m; ++r) {
        h.at(r, m - 1 - r) = 1.0;
        h.at(r, m - r) = -1.0;
    }
    return h;
}

inline Matrix reverse_rows(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(x.rows() - 1 - i, j);
    return out;
}

// Dense matrix power by repeated multiplication.
inline Matrix matrix_power(const Matrix& a, int p) {
    Matrix out = Matrix::identity(a.rows());
    for (int i = 0; i < p; ++i) out = out * a;
    return out;
}

// Eigenvalues of a symmetric matrix via cyclic Jacobi sweeps.
inline std::vector<double> symmetric_eigenvalues(Matrix a) {
    const int n = a.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::fabs(apq) < 1e-18) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = a.at(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

// Determinant by Gaussian elimination with partial pivoting (small d).
inline double determinant(Matrix a) {
    const int n = a.rows();
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a.at(r, col)) > std::fabs(a.at(piv, col))) piv = r;
        if (std::fabs(a.at(piv, col)) < 1e-300) return 0.0;
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(a.at(piv, j), a.at(col, j));
            det = -det;
        }
        det *= a.at(col, col);
        for (int r = col + 1; r < n; ++r) {
            const double f = a.at(r, col) / a.at(col, col);
            for (int j = col; j < n; ++j) a.at(r, j) -= f * a.at(col, j);
        }
    }
    return det;
}

// Numeric Jacobian of a vector map R^d -> R^d by central differences.
inline Matrix numeric_jacobian(const std::function<std::vector<double>(const std::vector<double>&)>& f,
                               std::vector<double> x, double h = 1e-6) {
    const int d = static_cast<int>(x.size());
    Matrix jac(d, d);
    for (int j = 0; j < d; ++j) {
        const double saved = x[j];
        x[j] = saved + h;
        const auto up = f(x);
        x[j] = saved - h;
        const auto dn = f(x);
        x[j] = saved;
        for (int i = 0; i < d; ++i) jac.at(i, j) = (up[i] - dn[i]) / (2.0 * h);
    }
    return jac;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
    const int n = static_cast<int>(v.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * (i + j) + 1.0;
        for (int k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = ranks(a), rb = ranks(b);
    const int n = static_cast<int>(a.size());
    double ma = 0.0, mb = 0.0;
    for (int i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double num = 0.0, da = 0.0, db = 0.0;
    for (int i = 0; i < n; ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    if (da == 0.0 || db == 0.0) return 0.0;
    return num / std::sqrt(da * db);
}

inline Matrix random_matrix(int rows, int cols, hspgnn::Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (auto& x : m.data()) x = rng.uniform(lo, hi);
    return m;
}

inline Matrix random_symmetric(int n, hspgnn::Rng& rng) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = rng.uniform(-1.0, 1.0);
            m.at(i, j) = v;
            m.at(j, i) = v;
        }
    return m;
}

}  // namespace oracles

#endif
