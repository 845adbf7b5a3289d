#ifndef HSPGNN_TENSOR_HPP
#define HSPGNN_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "hspgnn/errors.hpp"
#include "hspgnn/matrix.hpp"

namespace hspgnn {

// Dense 2-D float64 tensor participating in reverse-mode differentiation.
//
// Tensors are cheap handles onto shared nodes. Every operation records its
// backward rule on the result node together with a monotone sequence number,
// so backward() can replay the implicit tape in exact reverse execution
// order. A forward/backward pair is confined to one thread; independent
// graphs may live on independent threads.
class Tensor {
public:
    struct Node {
        int rows = 0;
        int cols = 0;
        std::vector<double> data;
        bool requires_grad = false;
        std::vector<double> grad;  // sized iff requires_grad
        std::uint64_t seq = 0;
        std::vector<std::shared_ptr<Node>> parents;
        std::function<void(Node&)> backward_fn;  // empty for leaves
    };

    Tensor() = default;

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor constant(int rows, int cols, double value);
    static Tensor from_data(int rows, int cols, std::vector<double> data, bool requires_grad = false);
    static Tensor from_matrix(const Matrix& m, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    int rows() const { return node_->rows; }
    int cols() const { return node_->cols; }
    std::size_t size() const { return node_->data.size(); }
    bool requires_grad() const { return node_->requires_grad; }

    double value(int r, int c) const { return node_->data[static_cast<std::size_t>(r) * node_->cols + c]; }
    const std::vector<double>& values() const { return node_->data; }
    std::vector<double>& mutable_values() { return node_->data; }

    // Scalar extraction; the tensor must be 1x1.
    double item() const;

    const std::vector<double>& grad() const;
    std::vector<double>& mutable_grad();
    void zero_grad();

    Matrix to_matrix() const;

    std::shared_ptr<Node> node() const { return node_; }
    static Tensor wrap(std::shared_ptr<Node> n) { Tensor t; t.node_ = std::move(n); return t; }

private:
    std::shared_ptr<Node> node_;
};

// --- operations -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor abs(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);       // requires strictly positive entries
Tensor softplus(const Tensor& a);  // ln(1 + e^x), overflow-safe
Tensor square(const Tensor& a);

// Row-wise softmax with per-row max subtraction; rows sum to 1.
Tensor softmax_rows(const Tensor& a);

// Per-column 1-D convolution along the time (row) axis with zero padding of
// (k-1)/2 on both ends; output keeps the input length. Kernel is 1 x k_t or
// k_t x 1 with k_t odd and k_t <= rows.
Tensor conv1d_time(const Tensor& x, const Tensor& kernel);

Tensor transpose(const Tensor& a);
Tensor sum(const Tensor& a);                            // 1x1
Tensor sum_rows(const Tensor& a);                       // 1xN column sums
Tensor slice_rows(const Tensor& a, int r0, int r1);     // rows [r0, r1)
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor add_rowvec(const Tensor& a, const Tensor& v);    // v is 1 x cols, added to each row
Tensor mul_scalar(const Tensor& a, const Tensor& s);    // s is 1x1
Tensor div_scalar(const Tensor& a, const Tensor& s);    // s is 1x1, nonzero

// Rows shifted down by one step with the first row clamped in place:
// out[0] = a[0], out[t] = a[t-1] for t >= 1.
Tensor shift_rows_lag1(const Tensor& a);

// Reverse pass from a 1x1 output. Accumulates into the grad buffer of every
// reachable node with requires_grad, then consumes the recorded rules.
void backward(const Tensor& scalar_output);

// Central-difference verification of reverse-mode gradients.
// Runs f once analytically and perturbs every entry of every leaf by +-h,
// returning max |analytic - numeric| / max(1, |numeric|).
using TensorFn = std::function<Tensor(const std::vector<Tensor>&)>;
double grad_check(const TensorFn& f, const std::vector<Tensor>& leaves, double h = 1e-5);

}  // namespace hspgnn

#endif
