// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "graphfree/error.hpp"

namespace graphfree {

// Dense row-major matrix of doubles. All model math in this library runs on
// matrices small enough (hundreds of rows) that a cache-aware triple loop is
// the right tool; no external BLAS so results are bit-reproducible.
class matrix {
  public:
    matrix() = default;
    matrix(int rows, int cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) fail(errc::argument, "matrix: negative dimension");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double &operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

    double *data() { return data_.data(); }
    const double *data() const { return data_.data(); }

    bool same_shape(const matrix &o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    void fill(double v) { data_.assign(data_.size(), v); }

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// out = a * b
matrix matmul(const matrix &a, const matrix &b);
// out = a^T * b
matrix matmul_tn(const matrix &a, const matrix &b);
// out = a * b^T
matrix matmul_nt(const matrix &a, const matrix &b);

void add_inplace(matrix &a, const matrix &b, double scale = 1.0);
void scale_inplace(matrix &a, double s);
double max_abs(const matrix &a);
double frobenius_norm(const matrix &a);
bool all_finite(const matrix &a);

// Numerically safe logistic helpers shared by the Bernoulli structure model
// and softmax heads.
inline double sigmoid(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow for large |x|.
inline double log_sigmoid(double x) {
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

// Row-wise softmax.
matrix row_softmax(const matrix &logits);

} // namespace graphfree
