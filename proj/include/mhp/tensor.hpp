#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhp {

/// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 tensors.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    Tensor(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != static_cast<std::size_t>(r) * c)
            throw std::invalid_argument("Tensor: data size does not match shape");
    }

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double v) {
        Tensor t(r, c);
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }
    static Tensor scalar(double v) { return full(1, 1, v); }
    static Tensor row(std::vector<double> values) {
        int n = static_cast<int>(values.size());
        return Tensor(1, n, std::move(values));
    }

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    double item() const {
        if (size() != 1) throw std::invalid_argument("Tensor::item on non-scalar");
        return data[0];
    }
    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

namespace ten {

inline void check_same(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows) +
                                    "x" + std::to_string(a.cols) + " vs " + std::to_string(b.rows) +
                                    "x" + std::to_string(b.cols) + ")");
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F&& f, const char* op) {
    check_same(a, b, op);
    Tensor out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = f(a.data[i], b.data[i]);
    return out;
}

template <class F>
Tensor map(const Tensor& a, F&& f) {
    Tensor out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = f(a.data[i]);
    return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) { return zip(a, b, [](double x, double y) { return x + y; }, "add"); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return zip(a, b, [](double x, double y) { return x - y; }, "sub"); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return zip(a, b, [](double x, double y) { return x * y; }, "mul"); }
inline Tensor div(const Tensor& a, const Tensor& b) { return zip(a, b, [](double x, double y) { return x / y; }, "div"); }
inline Tensor neg(const Tensor& a) { return map(a, [](double x) { return -x; }); }
inline Tensor scale(const Tensor& a, double c) { return map(a, [c](double x) { return c * x; }); }

inline void add_into(Tensor& acc, const Tensor& g) {
    check_same(acc, g, "add_into");
    for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += g.data[i];
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: inner dimension mismatch (" + std::to_string(a.cols) +
                                    " vs " + std::to_string(b.rows) + ")");
    Tensor out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

inline Tensor transpose(const Tensor& a) {
    Tensor out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

// Broadcast a 1xC row vector across every row of m.
inline Tensor add_rowvec(const Tensor& m, const Tensor& r) {
    if (r.rows != 1 || r.cols != m.cols) throw std::invalid_argument("add_rowvec: bad row vector shape");
    Tensor out = m;
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out(i, j) += r.data[j];
    return out;
}
inline Tensor mul_rowvec(const Tensor& m, const Tensor& r) {
    if (r.rows != 1 || r.cols != m.cols) throw std::invalid_argument("mul_rowvec: bad row vector shape");
    Tensor out = m;
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out(i, j) *= r.data[j];
    return out;
}
inline Tensor div_rowvec(const Tensor& m, const Tensor& r) {
    if (r.rows != 1 || r.cols != m.cols) throw std::invalid_argument("div_rowvec: bad row vector shape");
    Tensor out = m;
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out(i, j) /= r.data[j];
    return out;
}
// Broadcast an Rx1 column vector across every column of m.
inline Tensor mul_colvec(const Tensor& m, const Tensor& c) {
    if (c.cols != 1 || c.rows != m.rows) throw std::invalid_argument("mul_colvec: bad column vector shape");
    Tensor out = m;
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out(i, j) *= c.data[i];
    return out;
}

inline Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    return Tensor::scalar(s);
}
inline Tensor row_sum(const Tensor& a) {
    Tensor out(a.rows, 1);
    for (int i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols; ++j) s += a(i, j);
        out(i, 0) = s;
    }
    return out;
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows) throw std::invalid_argument("concat_cols: row count mismatch");
    Tensor out(a.rows, a.cols + b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < a.cols; ++j) out(i, j) = a(i, j);
        for (int j = 0; j < b.cols; ++j) out(i, a.cols + j) = b(i, j);
    }
    return out;
}
inline Tensor concat_rows(const Tensor& a, const Tensor& b) {
    if (a.cols != b.cols) throw std::invalid_argument("concat_rows: column count mismatch");
    Tensor out(a.rows + b.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.size());
    return out;
}

inline Tensor gather_rows(const Tensor& a, const std::vector<int>& idx) {
    Tensor out(static_cast<int>(idx.size()), a.cols);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= a.rows) throw std::invalid_argument("gather_rows: index out of range");
        for (int j = 0; j < a.cols; ++j) out(static_cast<int>(k), j) = a(idx[k], j);
    }
    return out;
}

inline Tensor gather_elems(const Tensor& a, const std::vector<std::pair<int, int>>& idx) {
    Tensor out(1, static_cast<int>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        auto [i, j] = idx[k];
        if (i < 0 || i >= a.rows || j < 0 || j >= a.cols)
            throw std::invalid_argument("gather_elems: index out of range");
        out(0, static_cast<int>(k)) = a(i, j);
    }
    return out;
}

inline Tensor stack_rows(const std::vector<Tensor>& rows) {
    if (rows.empty()) throw std::invalid_argument("stack_rows: empty input");
    int c = rows.front().cols;
    Tensor out(static_cast<int>(rows.size()), c);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].rows != 1 || rows[i].cols != c) throw std::invalid_argument("stack_rows: bad row shape");
        std::copy(rows[i].data.begin(), rows[i].data.end(), out.data.begin() + i * c);
    }
    return out;
}

// Numerically stable softplus at unit temperature: log(1 + e^x).
inline double softplus0(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// phi(a) = (e^{delta*a} - 1) / a, the zero-order-hold input factor; the
// removable singularity at delta*a -> 0 is taken by series expansion.
inline double exprel_delta(double a, double delta) {
    double x = delta * a;
    if (std::abs(x) < 1e-6) return delta * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0);
    return std::expm1(x) / a;
}
// d/da of exprel_delta(a, delta) = delta^2 * ((x-1)e^x + 1)/x^2 with x = delta*a.
inline double exprel_delta_da(double a, double delta) {
    double x = delta * a;
    if (std::abs(x) < 1e-6)
        return delta * delta * (0.5 + x / 3.0 + x * x / 8.0 + x * x * x / 30.0);
    return ((x - 1.0) * std::exp(x) + 1.0) / (a * a);
}

inline Tensor softmax_rows(const Tensor& a) {
    Tensor out(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i) {
        double m = a(i, 0);
        for (int j = 1; j < a.cols; ++j) m = std::max(m, a(i, j));
        double s = 0.0;
        for (int j = 0; j < a.cols; ++j) {
            double e = std::exp(a(i, j) - m);
            out(i, j) = e;
            s += e;
        }
        for (int j = 0; j < a.cols; ++j) out(i, j) /= s;
    }
    return out;
}

inline Tensor logsumexp_rows(const Tensor& a) {
    Tensor out(a.rows, 1);
    for (int i = 0; i < a.rows; ++i) {
        double m = a(i, 0);
        for (int j = 1; j < a.cols; ++j) m = std::max(m, a(i, j));
        double s = 0.0;
        for (int j = 0; j < a.cols; ++j) s += std::exp(a(i, j) - m);
        out(i, 0) = m + std::log(s);
    }
    return out;
}

constexpr double kLayerNormEps = 1e-5;

// Per-row layer norm with learnable 1xC scale/offset.
inline Tensor layer_norm_rows(const Tensor& x, const Tensor& scale, const Tensor& offset) {
    if (scale.rows != 1 || scale.cols != x.cols || offset.rows != 1 || offset.cols != x.cols)
        throw std::invalid_argument("layer_norm_rows: bad scale/offset shape");
    Tensor out(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i) {
        double mean = 0.0;
        for (int j = 0; j < x.cols; ++j) mean += x(i, j);
        mean /= x.cols;
        double var = 0.0;
        for (int j = 0; j < x.cols; ++j) {
            double d = x(i, j) - mean;
            var += d * d;
        }
        var /= x.cols;
        double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        for (int j = 0; j < x.cols; ++j)
            out(i, j) = (x(i, j) - mean) * inv * scale.data[j] + offset.data[j];
    }
    return out;
}

}  // namespace ten
}  // namespace mhp
