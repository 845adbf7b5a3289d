#ifndef HSPGNN_BENCH_HPP
#define HSPGNN_BENCH_HPP

#include <string>
#include <vector>

#include "hspgnn/matrix.hpp"

namespace hspgnn {

struct BenchResult {
    std::string method;  // explicit_power | matrix_free | conv_approx
    int m = 0;
    int n = 0;
    int order = 0;
    int repeats = 0;
    double wall_time_ms = 0.0;   // median over repeats
    double max_deviation = 0.0;  // against the matrix-free reference, interior rows
};

// Times three routes through y = sum_m lambda_m H^m X on an M x N window:
//   explicit_power - dense H^m materialization and dense multiplies, O(M^3)
//   matrix_free    - repeated banded application, O(order M N)
//   conv_approx    - k_t-tap convolution of H X with taps fitted through the
//                    derivative-combination solve, O(k_t M N)
// The three outputs must agree within 1e-9 on interior rows before any
// timing is reported. The kernel width grows with the order
// (k_t = max(3, 2 order - 1)) because a centered 3-tap filter can only
// express combinations up to order 2.
std::vector<BenchResult> bench_temporal_mixing(int m_window, int n_nodes, int order, int repeats);

}  // namespace hspgnn

#endif
