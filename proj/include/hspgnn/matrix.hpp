#ifndef HSPGNN_MATRIX_HPP
#define HSPGNN_MATRIX_HPP

#include <vector>

#include "hspgnn/errors.hpp"

namespace hspgnn {

// Plain dense row-major matrix of doubles. Used for everything that does not
// participate in gradient accumulation: graph operators, data pipelines,
// oracles. The differentiable counterpart is Tensor.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) throw DimensionError("Matrix: negative dimension");
    }
    Matrix(int rows, int cols, std::vector<double> data);

    static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }
    static Matrix identity(int n);
    static Matrix filled(int rows, int cols, double v);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    Matrix operator*(const Matrix& rhs) const;
    Matrix operator+(const Matrix& rhs) const;
    Matrix operator-(const Matrix& rhs) const;
    Matrix scaled(double s) const;
    Matrix transposed() const;
    Matrix hadamard(const Matrix& rhs) const;

    double frobenius_norm() const;
    double max_abs() const;
    double max_abs_diff(const Matrix& rhs) const;
    bool all_finite() const;
    bool is_symmetric(double tol) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

}  // namespace hspgnn

#endif
