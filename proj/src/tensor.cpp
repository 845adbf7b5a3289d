#include "hspgnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

namespace hspgnn {

namespace {

thread_local std::uint64_t g_seq_counter = 0;

std::shared_ptr<Tensor::Node> make_node(int rows, int cols, bool requires_grad) {
    if (rows <= 0 || cols <= 0) throw DimensionError("tensor dimensions must be positive");
    auto n = std::make_shared<Tensor::Node>();
    n->rows = rows;
    n->cols = cols;
    n->data.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    n->requires_grad = requires_grad;
    if (requires_grad) n->grad.assign(n->data.size(), 0.0);
    n->seq = ++g_seq_counter;
    return n;
}

std::shared_ptr<Tensor::Node> result_node(int rows, int cols, std::initializer_list<Tensor> inputs) {
    bool rg = false;
    for (const auto& t : inputs) rg = rg || t.requires_grad();
    auto n = make_node(rows, cols, rg);
    if (rg)
        for (const auto& t : inputs) n->parents.push_back(t.node());
    return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + ")");
}

}  // namespace

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    return wrap(make_node(rows, cols, requires_grad));
}

Tensor Tensor::constant(int rows, int cols, double value) {
    Tensor t = zeros(rows, cols, false);
    for (auto& x : t.mutable_values()) x = value;
    return t;
}

Tensor Tensor::from_data(int rows, int cols, std::vector<double> data, bool requires_grad) {
    if (data.size() != static_cast<std::size_t>(rows) * cols)
        throw DimensionError("Tensor: data length does not match shape");
    Tensor t = zeros(rows, cols, requires_grad);
    t.node_->data = std::move(data);
    return t;
}

Tensor Tensor::from_matrix(const Matrix& m, bool requires_grad) {
    return from_data(m.rows(), m.cols(), m.data(), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    Tensor t = zeros(1, 1, requires_grad);
    t.node_->data[0] = value;
    return t;
}

double Tensor::item() const {
    if (rows() != 1 || cols() != 1) throw ContractError("item(): tensor is not scalar");
    return node_->data[0];
}

const std::vector<double>& Tensor::grad() const {
    if (!node_->requires_grad) throw ContractError("grad(): tensor does not require gradients");
    return node_->grad;
}

std::vector<double>& Tensor::mutable_grad() {
    if (!node_->requires_grad) throw ContractError("grad(): tensor does not require gradients");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Matrix Tensor::to_matrix() const {
    return Matrix(rows(), cols(), node_->data);
}

// --- helpers shared by backward rules ---------------------------------------

namespace {

// Accumulate g into the grad buffer of parent node p if it tracks gradients.
inline void accumulate(const std::shared_ptr<Tensor::Node>& p, const std::vector<double>& g) {
    if (!p->requires_grad) return;
    for (std::size_t i = 0; i < g.size(); ++i) p->grad[i] += g[i];
}

}  // namespace

// --- operations -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()) + ")");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    auto out = result_node(m, n, {a, b});
    const auto& ad = a.values();
    const auto& bd = b.values();
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = ad[static_cast<std::size_t>(i) * k + p];
            if (av == 0.0) continue;
            const std::size_t brow = static_cast<std::size_t>(p) * n;
            const std::size_t orow = static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) out->data[orow + j] += av * bd[brow + j];
        }
    }
    if (out->requires_grad) {
        auto an = a.node(), bn = b.node();
        out->backward_fn = [an, bn, m, k, n](Tensor::Node& self) {
            // da = g . b^T, db = a^T . g
            if (an->requires_grad) {
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        double s = 0.0;
                        for (int j = 0; j < n; ++j)
                            s += self.grad[static_cast<std::size_t>(i) * n + j] *
                                 bn->data[static_cast<std::size_t>(p) * n + j];
                        an->grad[static_cast<std::size_t>(i) * k + p] += s;
                    }
            }
            if (bn->requires_grad) {
                for (int p = 0; p < k; ++p)
                    for (int j = 0; j < n; ++j) {
                        double s = 0.0;
                        for (int i = 0; i < m; ++i)
                            s += an->data[static_cast<std::size_t>(i) * k + p] *
                                 self.grad[static_cast<std::size_t>(i) * n + j];
                        bn->grad[static_cast<std::size_t>(p) * n + j] += s;
                    }
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    auto out = result_node(a.rows(), a.cols(), {a, b});
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a.values()[i] + b.values()[i];
    if (out->requires_grad) {
        auto an = a.node(), bn = b.node();
        out->backward_fn = [an, bn](Tensor::Node& self) {
            accumulate(an, self.grad);
            accumulate(bn, self.grad);
        };
    }
    return Tensor::wrap(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    auto out = result_node(a.rows(), a.cols(), {a, b});
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a.values()[i] - b.values()[i];
    if (out->requires_grad) {
        auto an = a.node(), bn = b.node();
        out->backward_fn = [an, bn](Tensor::Node& self) {
            accumulate(an, self.grad);
            if (bn->requires_grad)
                for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
        };
    }
    return Tensor::wrap(out);
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "hadamard");
    auto out = result_node(a.rows(), a.cols(), {a, b});
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a.values()[i] * b.values()[i];
    if (out->requires_grad) {
        auto an = a.node(), bn = b.node();
        out->backward_fn = [an, bn](Tensor::Node& self) {
            if (an->requires_grad)
                for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * bn->data[i];
            if (bn->requires_grad)
                for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i] * an->data[i];
        };
    }
    return Tensor::wrap(out);
}

namespace {

// Shared skeleton for unary pointwise ops. dfn receives (input, output).
Tensor unary_op(const Tensor& a, double (*fn)(double), double (*dfn)(double, double)) {
    auto out = result_node(a.rows(), a.cols(), {a});
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = fn(a.values()[i]);
    if (out->requires_grad) {
        auto an = a.node();
        out->backward_fn = [an, dfn](Tensor::Node& self) {
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                an->grad[i] += self.grad[i] * dfn(an->data[i], self.data[i]);
        };
    }
    return Tensor::wrap(out);
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus_scalar(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

}  // namespace

Tensor tanh(const Tensor& a) {
    return unary_op(a, [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(a, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Tensor neg(const Tensor& a) {
    return unary_op(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor abs(const Tensor& a) {
    return unary_op(a, [](double x) { return std::fabs(x); },
                    [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor exp(const Tensor& a) {
    return unary_op(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    for (double x : a.values())
        if (!(x > 0.0)) throw NumericError("log: non-positive input");
    return unary_op(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor softplus(const Tensor& a) {
    return unary_op(a, softplus_scalar, [](double x, double) { return sigmoid_scalar(x); });
}

Tensor square(const Tensor& a) {
    return unary_op(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor scale(const Tensor& a, double s) {
    auto out = result_node(a.rows(), a.cols(), {a});
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = s * a.values()[i];
    if (out->requires_grad) {
        auto an = a.node();
        out->backward_fn = [an, s](Tensor::Node& self) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += s * self.grad[i];
        };
    }
    return Tensor::wrap(out);
}

Tensor softmax_rows(const Tensor& a) {
    for (double x : a.values())
        if (!std::isfinite(x)) throw NumericError("softmax_rows: non-finite input");
    const int m = a.rows(), n = a.cols();
    auto out = result_node(m, n, {a});
    for (int i = 0; i < m; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * n;
        double mx = a.values()[row];
        for (int j = 1; j < n; ++j) mx = std::max(mx, a.values()[row + j]);
        double denom = 0.0;
        for (int j = 0; j < n; ++j) {
            out->data[row + j] = std::exp(a.values()[row + j] - mx);
            denom += out->data[row + j];
        }
        for (int j = 0; j < n; ++j) out->data[row + j] /= denom;
    }
    if (out->requires_grad) {
        auto an = a.node();
        out->backward_fn = [an, m, n](Tensor::Node& self) {
            // dx_i = y_i * (g_i - sum_j g_j y_j), per row
            for (int i = 0; i < m; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * n;
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += self.grad[row + j] * self.data[row + j];
                for (int j = 0; j < n; ++j)
                    an->grad[row + j] += self.data[row + j] * (self.grad[row + j] - dot);
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor conv1d_time(const Tensor& x, const Tensor& kernel) {
    const int m = x.rows(), n = x.cols();
    const int kt = static_cast<int>(kernel.size());
    if (kernel.rows() != 1 && kernel.cols() != 1)
        throw DimensionError("conv1d_time: kernel must be a vector");
    if (kt % 2 == 0) throw ConfigurationError("conv1d_time: kernel width must be odd");
    if (kt > m) throw ConfigurationError("conv1d_time: kernel wider than the window");
    const int half = (kt - 1) / 2;
    auto out = result_node(m, n, {x, kernel});
    const auto& xd = x.values();
    const auto& kd = kernel.values();
    for (int t = 0; t < m; ++t) {
        for (int d = 0; d < kt; ++d) {
            const int src = t + d - half;
            if (src < 0 || src >= m) continue;  // zero padding
            const double kv = kd[d];
            if (kv == 0.0) continue;
            const std::size_t orow = static_cast<std::size_t>(t) * n;
            const std::size_t srow = static_cast<std::size_t>(src) * n;
            for (int j = 0; j < n; ++j) out->data[orow + j] += kv * xd[srow + j];
        }
    }
    if (out->requires_grad) {
        auto xn = x.node(), kn = kernel.node();
        out->backward_fn = [xn, kn, m, n, kt, half](Tensor::Node& self) {
            for (int t = 0; t < m; ++t) {
                for (int d = 0; d < kt; ++d) {
                    const int src = t + d - half;
                    if (src < 0 || src >= m) continue;
                    const std::size_t orow = static_cast<std::size_t>(t) * n;
                    const std::size_t srow = static_cast<std::size_t>(src) * n;
                    if (xn->requires_grad) {
                        const double kv = kn->data[d];
                        if (kv != 0.0)
                            for (int j = 0; j < n; ++j) xn->grad[srow + j] += kv * self.grad[orow + j];
                    }
                    if (kn->requires_grad) {
                        double s = 0.0;
                        for (int j = 0; j < n; ++j) s += self.grad[orow + j] * xn->data[srow + j];
                        kn->grad[d] += s;
                    }
                }
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor transpose(const Tensor& a) {
    const int m = a.rows(), n = a.cols();
    auto out = result_node(n, m, {a});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out->data[static_cast<std::size_t>(j) * m + i] = a.values()[static_cast<std::size_t>(i) * n + j];
    if (out->requires_grad) {
        auto an = a.node();
        out->backward_fn = [an, m, n](Tensor::Node& self) {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    an->grad[static_cast<std::size_t>(i) * n + j] +=
                        self.grad[static_cast<std::size_t>(j) * m + i];
        };
    }
    return Tensor::wrap(out);
}

Tensor sum(const Tensor& a) {
    auto out = result_node(1, 1, {a});
    double s = 0.0;
    for (double x : a.values()) s += x;
    out->data[0] = s;
    if (out->requires_grad) {
        auto an = a.node();
        out->backward_fn = [an](Tensor::Node& self) {
            for (auto& g : an->grad) g += self.grad[0];
        };
    }
    return Tensor::wrap(out);
}

Tensor sum_rows(const Tensor& a) {
    const int m = a.rows(), n = a.cols();
    auto out = result_node(1, n, {a});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out->data[j] += a.values()[static_cast<std::size_t>(i) * n + j];
    if (out->requires_grad) {
        auto an = a.node();
        out->backward_fn = [an, m, n](Tensor::Node& self) {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) an->grad[static_cast<std::size_t>(i) * n + j] += self.grad[j];
        };
    }
    return Tensor::wrap(out);
}

Tensor slice_rows(const Tensor& a, int r0, int r1) {
    if (r0 < 0 || r1 > a.rows() || r0 >= r1) throw DimensionError("slice_rows: bad range");
    const int n = a.cols(), h = r1 - r0;
    auto out = result_node(h, n, {a});
    std::copy(a.values().begin() + static_cast<std::size_t>(r0) * n,
              a.values().begin() + static_cast<std::size_t>(r1) * n, out->data.begin());
    if (out->requires_grad) {
        auto an = a.node();
        out->backward_fn = [an, r0, h, n](Tensor::Node& self) {
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < n; ++j)
                    an->grad[static_cast<std::size_t>(r0 + i) * n + j] +=
                        self.grad[static_cast<std::size_t>(i) * n + j];
        };
    }
    return Tensor::wrap(out);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: empty input");
    const int n = parts[0].cols();
    int m = 0;
    bool rg = false;
    for (const auto& p : parts) {
        if (p.cols() != n) throw DimensionError("concat_rows: column mismatch");
        m += p.rows();
        rg = rg || p.requires_grad();
    }
    auto out = make_node(m, n, rg);
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p.values().begin(), p.values().end(), out->data.begin() + off);
        off += p.size();
        if (rg) out->parents.push_back(p.node());
    }
    if (rg) {
        std::vector<std::shared_ptr<Tensor::Node>> nodes;
        nodes.reserve(parts.size());
        for (const auto& p : parts) nodes.push_back(p.node());
        out->backward_fn = [nodes](Tensor::Node& self) {
            std::size_t off2 = 0;
            for (const auto& pn : nodes) {
                if (pn->requires_grad)
                    for (std::size_t i = 0; i < pn->data.size(); ++i) pn->grad[i] += self.grad[off2 + i];
                off2 += pn->data.size();
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
    if (v.rows() != 1 || v.cols() != a.cols()) throw DimensionError("add_rowvec: v must be 1 x cols(a)");
    const int m = a.rows(), n = a.cols();
    auto out = result_node(m, n, {a, v});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out->data[static_cast<std::size_t>(i) * n + j] =
                a.values()[static_cast<std::size_t>(i) * n + j] + v.values()[j];
    if (out->requires_grad) {
        auto an = a.node(), vn = v.node();
        out->backward_fn = [an, vn, m, n](Tensor::Node& self) {
            if (an->requires_grad) accumulate(an, self.grad);
            if (vn->requires_grad)
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) vn->grad[j] += self.grad[static_cast<std::size_t>(i) * n + j];
        };
    }
    return Tensor::wrap(out);
}

Tensor mul_scalar(const Tensor& a, const Tensor& s) {
    if (s.rows() != 1 || s.cols() != 1) throw DimensionError("mul_scalar: s must be 1x1");
    auto out = result_node(a.rows(), a.cols(), {a, s});
    const double sv = s.values()[0];
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = sv * a.values()[i];
    if (out->requires_grad) {
        auto an = a.node(), sn = s.node();
        out->backward_fn = [an, sn](Tensor::Node& self) {
            const double sv2 = sn->data[0];
            if (an->requires_grad)
                for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += sv2 * self.grad[i];
            if (sn->requires_grad) {
                double acc = 0.0;
                for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * an->data[i];
                sn->grad[0] += acc;
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor div_scalar(const Tensor& a, const Tensor& s) {
    if (s.rows() != 1 || s.cols() != 1) throw DimensionError("div_scalar: s must be 1x1");
    const double sv = s.values()[0];
    if (sv == 0.0) throw NumericError("div_scalar: division by zero");
    auto out = result_node(a.rows(), a.cols(), {a, s});
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a.values()[i] / sv;
    if (out->requires_grad) {
        auto an = a.node(), sn = s.node();
        out->backward_fn = [an, sn](Tensor::Node& self) {
            const double sv2 = sn->data[0];
            if (an->requires_grad)
                for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] / sv2;
            if (sn->requires_grad) {
                double acc = 0.0;
                for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * an->data[i];
                sn->grad[0] += -acc / (sv2 * sv2);
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor shift_rows_lag1(const Tensor& a) {
    const int m = a.rows(), n = a.cols();
    auto out = result_node(m, n, {a});
    for (int t = 0; t < m; ++t) {
        const int src = std::max(t - 1, 0);
        std::copy(a.values().begin() + static_cast<std::size_t>(src) * n,
                  a.values().begin() + static_cast<std::size_t>(src + 1) * n,
                  out->data.begin() + static_cast<std::size_t>(t) * n);
    }
    if (out->requires_grad) {
        auto an = a.node();
        out->backward_fn = [an, m, n](Tensor::Node& self) {
            for (int t = 0; t < m; ++t) {
                const int src = std::max(t - 1, 0);
                for (int j = 0; j < n; ++j)
                    an->grad[static_cast<std::size_t>(src) * n + j] +=
                        self.grad[static_cast<std::size_t>(t) * n + j];
            }
        };
    }
    return Tensor::wrap(out);
}

// --- reverse pass -----------------------------------------------------------

void backward(const Tensor& scalar_output) {
    if (!scalar_output.defined()) throw ContractError("backward: undefined tensor");
    if (scalar_output.rows() != 1 || scalar_output.cols() != 1)
        throw ContractError("backward: output must be scalar (1x1)");

    // Collect the reachable subgraph, then replay rules in exact reverse
    // execution order (descending sequence number).
    std::vector<std::shared_ptr<Tensor::Node>> order;
    std::unordered_set<Tensor::Node*> seen;
    std::vector<std::shared_ptr<Tensor::Node>> stack{scalar_output.node()};
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        if (!seen.insert(n.get()).second) continue;
        order.push_back(n);
        for (const auto& p : n->parents) stack.push_back(p);
    }
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a->seq > b->seq; });

    auto root = scalar_output.node();
    if (root->requires_grad) root->grad[0] += 1.0;

    for (auto& n : order) {
        if (n->backward_fn) {
            n->backward_fn(*n);
            // Consume the tape: rules run once, then the graph is released.
            n->backward_fn = nullptr;
            n->parents.clear();
        }
    }
}

double grad_check(const TensorFn& f, const std::vector<Tensor>& leaves, double h) {
    for (const auto& l : leaves)
        if (!l.requires_grad()) throw ContractError("grad_check: every leaf must require gradients");

    for (auto l : leaves) l.zero_grad();
    Tensor y = f(leaves);
    if (y.rows() != 1 || y.cols() != 1) throw ContractError("grad_check: f must return a scalar");
    backward(y);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(leaves.size());
    for (const auto& l : leaves) analytic.push_back(l.grad());

    double max_err = 0.0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        Tensor leaf = leaves[li];
        auto& vals = leaf.mutable_values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + h;
            const double up = f(leaves).item();
            vals[i] = saved - h;
            const double dn = f(leaves).item();
            vals[i] = saved;
            const double numeric = (up - dn) / (2.0 * h);
            if (!std::isfinite(numeric) || !std::isfinite(analytic[li][i]))
                throw NumericError("grad_check: non-finite value");
            const double err = std::fabs(analytic[li][i] - numeric) / std::max(1.0, std::fabs(numeric));
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

}  // namespace hspgnn
