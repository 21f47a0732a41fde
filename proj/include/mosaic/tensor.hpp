// tensor.hpp — dense row-major double matrices, plus the handful of
// elementwise helpers the rest of the library leans on. Images, masks and
// weight matrices all use the same type; a 1×1 tensor doubles as a scalar.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mosaic/common.hpp"

namespace mosaic {

struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data[0] = v;
        return t;
    }

    int size() const { return rows * cols; }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    double& operator[](int i) { return data[i]; }
    double operator[](int i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double min() const { return *std::min_element(data.begin(), data.end()); }
    double max() const { return *std::max_element(data.begin(), data.end()); }

    double sum() const {
        double s = 0.0;
        for (double v : data) s += v;
        return s;
    }

    double mean() const { return size() > 0 ? sum() / size() : 0.0; }

    double norm2() const {
        double s = 0.0;
        for (double v : data) s += v * v;
        return std::sqrt(s);
    }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b))
        throw NumericalError(std::string(where) + ": shape mismatch " + a.shape_str() +
                             " vs " + b.shape_str());
}

inline Tensor operator+(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "tensor add");
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

inline Tensor operator-(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "tensor sub");
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

inline Tensor operator*(const Tensor& a, double s) {
    Tensor out = a;
    for (double& v : out.data) v *= s;
    return out;
}

inline Tensor operator*(double s, const Tensor& a) { return a * s; }

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "hadamard");
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

// C = A · B
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows)
        throw NumericalError("matmul: inner dimensions disagree " + a.shape_str() + " · " +
                             b.shape_str());
    Tensor out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
        }
    }
    return out;
}

// C = A · Bᵀ
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.cols != b.cols)
        throw NumericalError("matmul_nt: inner dimensions disagree " + a.shape_str() +
                             " · " + b.shape_str() + "ᵀ");
    Tensor out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(j, k);
            out.at(i, j) = s;
        }
    return out;
}

// C = Aᵀ · B
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows)
        throw NumericalError("matmul_tn: inner dimensions disagree " + a.shape_str() +
                             "ᵀ · " + b.shape_str());
    Tensor out(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k)
        for (int i = 0; i < a.cols; ++i) {
            const double aki = a.at(k, i);
            if (aki == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out.at(i, j) += aki * b.at(k, j);
        }
    return out;
}

inline Tensor transpose(const Tensor& a) {
    Tensor out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

inline Tensor random_normal(int rows, int cols, Rng& rng, double stddev = 1.0) {
    Tensor out(rows, cols);
    for (double& v : out.data) v = stddev * rng.normal();
    return out;
}

inline Tensor random_uniform(int rows, int cols, Rng& rng, double lo, double hi) {
    Tensor out(rows, cols);
    for (double& v : out.data) v = rng.uniform(lo, hi);
    return out;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// ── Binary masks ────────────────────────────────────────────────────────────

struct Bitmap {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> data;

    Bitmap() = default;
    Bitmap(int r, int c, std::uint8_t fill = 0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    int size() const { return rows * cols; }
    std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    int count() const {
        int n = 0;
        for (auto v : data) n += v ? 1 : 0;
        return n;
    }

    bool operator==(const Bitmap& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

inline Tensor to_tensor(const Bitmap& m) {
    Tensor t(m.rows, m.cols);
    for (int i = 0; i < m.size(); ++i) t[i] = m.data[i] ? 1.0 : 0.0;
    return t;
}

inline int intersection_count(const Bitmap& a, const Bitmap& b) {
    int n = 0;
    for (int i = 0; i < a.size(); ++i) n += (a.data[i] && b.data[i]) ? 1 : 0;
    return n;
}

}  // namespace mosaic
