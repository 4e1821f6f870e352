// SPDX-License-Identifier: Apache-2.0
#include "graphfree/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace graphfree {

matrix matmul(const matrix &a, const matrix &b) {
    if (a.cols() != b.rows()) fail(errc::argument, "matmul: inner dimensions differ");
    matrix out(a.rows(), b.cols());
    const int n = a.rows(), k = a.cols(), m = b.cols();
    for (int i = 0; i < n; ++i) {
        const double *arow = a.data() + static_cast<size_t>(i) * k;
        double *orow = out.data() + static_cast<size_t>(i) * m;
        for (int p = 0; p < k; ++p) {
            const double aip = arow[p];
            if (aip == 0.0) continue;
            const double *brow = b.data() + static_cast<size_t>(p) * m;
            for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
        }
    }
    return out;
}

matrix matmul_tn(const matrix &a, const matrix &b) {
    if (a.rows() != b.rows()) fail(errc::argument, "matmul_tn: row counts differ");
    matrix out(a.cols(), b.cols());
    const int n = a.rows(), k = a.cols(), m = b.cols();
    for (int p = 0; p < n; ++p) {
        const double *arow = a.data() + static_cast<size_t>(p) * k;
        const double *brow = b.data() + static_cast<size_t>(p) * m;
        for (int i = 0; i < k; ++i) {
            const double api = arow[i];
            if (api == 0.0) continue;
            double *orow = out.data() + static_cast<size_t>(i) * m;
            for (int j = 0; j < m; ++j) orow[j] += api * brow[j];
        }
    }
    return out;
}

matrix matmul_nt(const matrix &a, const matrix &b) {
    if (a.cols() != b.cols()) fail(errc::argument, "matmul_nt: column counts differ");
    matrix out(a.rows(), b.rows());
    const int n = a.rows(), k = a.cols(), m = b.rows();
    for (int i = 0; i < n; ++i) {
        const double *arow = a.data() + static_cast<size_t>(i) * k;
        double *orow = out.data() + static_cast<size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double *brow = b.data() + static_cast<size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            orow[j] = acc;
        }
    }
    return out;
}

void add_inplace(matrix &a, const matrix &b, double scale) {
    if (!a.same_shape(b)) fail(errc::argument, "add_inplace: shape mismatch");
    double *pa = a.data();
    const double *pb = b.data();
    for (size_t i = 0; i < a.size(); ++i) pa[i] += scale * pb[i];
}

void scale_inplace(matrix &a, double s) {
    double *p = a.data();
    for (size_t i = 0; i < a.size(); ++i) p[i] *= s;
}

double max_abs(const matrix &a) {
    double m = 0.0;
    const double *p = a.data();
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(p[i]));
    return m;
}

double frobenius_norm(const matrix &a) {
    double s = 0.0;
    const double *p = a.data();
    for (size_t i = 0; i < a.size(); ++i) s += p[i] * p[i];
    return std::sqrt(s);
}

bool all_finite(const matrix &a) {
    const double *p = a.data();
    for (size_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

matrix row_softmax(const matrix &logits) {
    matrix out(logits.rows(), logits.cols());
    for (int i = 0; i < logits.rows(); ++i) {
        double mx = logits(i, 0);
        for (int j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (int j = 0; j < logits.cols(); ++j) {
            double e = std::exp(logits(i, j) - mx);
            out(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < logits.cols(); ++j) out(i, j) /= sum;
    }
    return out;
}

} // namespace graphfree
