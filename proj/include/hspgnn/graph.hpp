#ifndef HSPGNN_GRAPH_HPP
#define HSPGNN_GRAPH_HPP

#include <vector>

#include "hspgnn/matrix.hpp"
#include "hspgnn/tensor.hpp"

namespace hspgnn {

// Undirected weighted graph: symmetric nonnegative adjacency, zero diagonal.
struct GraphSpec {
    int n_nodes = 0;
    Matrix adjacency;

    // Validates symmetry (1e-12), nonnegativity and the zero diagonal.
    static GraphSpec from_adjacency(Matrix adjacency);
};

enum class LaplacianKind { normalized, rescaled };

struct LaplacianMatrix {
    Matrix m;
    LaplacianKind kind = LaplacianKind::normalized;
};

// I - D^{-1/2} A D^{-1/2}; isolated nodes fall back to a self-only identity
// row/column. Spectrum lies in [0, 2].
LaplacianMatrix normalized_laplacian(const GraphSpec& g);

// Similarity-transform variant D^{-1/2}(I - A)D^{1/2}: shares the spectrum
// of I - A but is not symmetric in general. Selectable through the
// laplacian=similarity configuration switch.
LaplacianMatrix normalized_laplacian_similarity(const GraphSpec& g);

enum class LaplacianForm { symmetric, similarity };

// 2L/lambda_max - I, spectrum mapped into [-1, 1] when lambda_max bounds L.
LaplacianMatrix rescale_laplacian(const LaplacianMatrix& l, double lambda_max);

// Dominant-eigenvalue estimate from a deterministic all-ones start. Restarts
// with a perturbed vector when the iterate lands in the kernel.
double power_iteration_lambda_max(const LaplacianMatrix& l, int iters = 200, double tol = 1e-10);

// lambda_max for rescaling, with the generic upper bound 2 as fallback when
// the iteration does not converge.
double lambda_max_or_default(const LaplacianMatrix& l);

// Chebyshev polynomials T_0..T_K of a rescaled Laplacian:
// T_0 = I, T_1 = L, T_k = 2 L T_{k-1} - T_{k-2}. The recursion walks only the
// nonzero entries of L, so each step costs O(|E| * N).
std::vector<Matrix> chebyshev_basis(const LaplacianMatrix& l_rescaled, int K);

// Discrete time-derivative operator applied without materializing the M x M
// Toeplitz matrix: row 0 passes through, row t yields x_t - x_{t-1}. Input is
// in natural time order (earliest step first).
Tensor toeplitz_apply(const Tensor& x);
Matrix toeplitz_apply(const Matrix& x);

// m-fold application, i.e. multiplication by H^m.
Tensor toeplitz_power_apply(const Tensor& x, int m);
Matrix toeplitz_power_apply(const Matrix& x, int m);

// Explicit H in natural time order, for oracles and benchmarks: unit
// diagonal, -1 subdiagonal.
Matrix toeplitz_matrix(int m);

// Constructive witness that W H = sum_m lambda_m H^m has a unique solution:
// returns W and the Frobenius residual of the solve (H has full rank, so the
// residual sits at numerical zero).
struct DerivativeCombination {
    Matrix w;
    double residual = 0.0;
};
DerivativeCombination solve_derivative_combination(int m_window, const std::vector<double>& lambdas);

}  // namespace hspgnn

#endif
