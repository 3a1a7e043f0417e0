/*
   Copyright 2026 The gwi Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "gwi/error.hpp"

namespace gwi {

/// Real 2-vector.
struct Vec2 {
    std::array<double, 2> c{};

    constexpr Vec2() = default;
    constexpr Vec2(double a, double b) : c{a, b} {}

    constexpr double& operator[](std::size_t i) { return c[i]; }
    constexpr double operator[](std::size_t i) const { return c[i]; }

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a[0] + b[0], a[1] + b[1]}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a[0] - b[0], a[1] - b[1]}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a[0], s * a[1]}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return s * a; }
    constexpr Vec2& operator+=(Vec2 b) {
        c[0] += b[0];
        c[1] += b[1];
        return *this;
    }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

inline constexpr double dot(Vec2 a, Vec2 b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(Vec2 a) { return std::hypot(a[0], a[1]); }

/// Integer state of a two-type population, (type 1 count, type 2 count).
struct Counts {
    std::array<std::int64_t, 2> c{};

    constexpr Counts() = default;
    constexpr Counts(std::int64_t a, std::int64_t b) : c{a, b} {}

    constexpr std::int64_t& operator[](std::size_t i) { return c[i]; }
    constexpr std::int64_t operator[](std::size_t i) const { return c[i]; }
    constexpr Vec2 real() const {
        return {static_cast<double>(c[0]), static_cast<double>(c[1])};
    }
    constexpr std::int64_t total() const { return c[0] + c[1]; }
    friend constexpr bool operator==(const Counts&, const Counts&) = default;
};

/// Row-major real 2x2 matrix.
struct Mat2 {
    std::array<double, 4> e{};

    constexpr Mat2() = default;
    constexpr Mat2(double a11, double a12, double a21, double a22) : e{a11, a12, a21, a22} {}

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 zero() { return {}; }
    static constexpr Mat2 outer(Vec2 a, Vec2 b) {
        return {a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]};
    }
    static constexpr Mat2 from_columns(Vec2 c1, Vec2 c2) { return {c1[0], c2[0], c1[1], c2[1]}; }

    constexpr double& operator()(std::size_t i, std::size_t j) { return e[2 * i + j]; }
    constexpr double operator()(std::size_t i, std::size_t j) const { return e[2 * i + j]; }

    constexpr Vec2 row(std::size_t i) const { return {e[2 * i], e[2 * i + 1]}; }
    constexpr Vec2 col(std::size_t j) const { return {e[j], e[2 + j]}; }

    constexpr double det() const { return e[0] * e[3] - e[1] * e[2]; }
    constexpr double trace() const { return e[0] + e[3]; }
    constexpr Mat2 transpose() const { return {e[0], e[2], e[1], e[3]}; }
    /// Transpose of the cofactor matrix, so that A * A.adjugate() == det(A) * I.
    constexpr Mat2 adjugate() const { return {e[3], -e[1], -e[2], e[0]}; }
    Mat2 inverse() const {
        const double d = det();
        if (d == 0.0) throw DomainError("inverse of a singular 2x2 matrix");
        const Mat2 adj = adjugate();
        return {adj.e[0] / d, adj.e[1] / d, adj.e[2] / d, adj.e[3] / d};
    }

    friend constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
        return {a.e[0] + b.e[0], a.e[1] + b.e[1], a.e[2] + b.e[2], a.e[3] + b.e[3]};
    }
    friend constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
        return {a.e[0] - b.e[0], a.e[1] - b.e[1], a.e[2] - b.e[2], a.e[3] - b.e[3]};
    }
    friend constexpr Mat2 operator*(double s, const Mat2& a) {
        return {s * a.e[0], s * a.e[1], s * a.e[2], s * a.e[3]};
    }
    friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
        return {a.e[0] * b.e[0] + a.e[1] * b.e[2], a.e[0] * b.e[1] + a.e[1] * b.e[3],
                a.e[2] * b.e[0] + a.e[3] * b.e[2], a.e[2] * b.e[1] + a.e[3] * b.e[3]};
    }
    friend constexpr Vec2 operator*(const Mat2& a, Vec2 x) {
        return {a.e[0] * x[0] + a.e[1] * x[1], a.e[2] * x[0] + a.e[3] * x[1]};
    }
    constexpr Mat2& operator+=(const Mat2& b) {
        for (std::size_t i = 0; i < 4; ++i) e[i] += b.e[i];
        return *this;
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

/// Quadratic form <A x, x>.
inline constexpr double quad(const Mat2& a, Vec2 x) { return dot(a * x, x); }

inline double max_abs(const Mat2& a) {
    double m = 0.0;
    for (double v : a.e) m = std::max(m, std::abs(v));
    return m;
}

/// Row-major 4x4 matrix, used for Kronecker products of 2x2 matrices.
/// Index convention: (A (x) B)(2i+k, 2j+l) = A(i,j) * B(k,l).
struct Tensor4 {
    std::array<double, 16> e{};

    static Tensor4 identity() {
        Tensor4 t;
        for (std::size_t i = 0; i < 4; ++i) t(i, i) = 1.0;
        return t;
    }

    constexpr double& operator()(std::size_t i, std::size_t j) { return e[4 * i + j]; }
    constexpr double operator()(std::size_t i, std::size_t j) const { return e[4 * i + j]; }

    double trace() const { return e[0] + e[5] + e[10] + e[15]; }

    friend Tensor4 operator+(const Tensor4& a, const Tensor4& b) {
        Tensor4 r;
        for (std::size_t i = 0; i < 16; ++i) r.e[i] = a.e[i] + b.e[i];
        return r;
    }
    friend Tensor4 operator*(double s, const Tensor4& a) {
        Tensor4 r;
        for (std::size_t i = 0; i < 16; ++i) r.e[i] = s * a.e[i];
        return r;
    }
    friend Tensor4 operator*(const Tensor4& a, const Tensor4& b) {
        Tensor4 r;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t k = 0; k < 4; ++k) {
                const double aik = a(i, k);
                for (std::size_t j = 0; j < 4; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }
    Tensor4& operator+=(const Tensor4& b) {
        for (std::size_t i = 0; i < 16; ++i) e[i] += b.e[i];
        return *this;
    }
};

inline Tensor4 kron2(const Mat2& a, const Mat2& b) {
    Tensor4 t;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                for (std::size_t l = 0; l < 2; ++l) t(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
    return t;
}

/// Column vector a (x) b, laid out as a 4-vector.
inline std::array<double, 4> kron_vec(Vec2 a, Vec2 b) {
    return {a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]};
}

/// Outer product of two 4-vectors: column times row.
inline Tensor4 outer4(const std::array<double, 4>& col, const std::array<double, 4>& row) {
    Tensor4 t;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) t(i, j) = col[i] * row[j];
    return t;
}

/// Symmetric PSD square root through the closed-form 2x2 eigendecomposition.
/// Eigenvalues in [-1e-12, 0) are clamped to zero; anything more negative, or an
/// asymmetry beyond 1e-10, is rejected as an invalid covariance.
inline Mat2 sqrt_psd_2x2(const Mat2& v) {
    if (std::abs(v(0, 1) - v(1, 0)) > 1e-10) throw DomainError("sqrt_psd_2x2: matrix is not symmetric");
    const double a = v(0, 0);
    const double b = 0.5 * (v(0, 1) + v(1, 0));
    const double d = v(1, 1);
    const double half_tr = 0.5 * (a + d);
    const double r = std::hypot(0.5 * (a - d), b);
    double l1 = half_tr + r;
    double l2 = half_tr - r;
    if (l2 < -1e-12) throw DomainError("sqrt_psd_2x2: matrix has a negative eigenvalue");
    l1 = std::max(l1, 0.0);
    l2 = std::max(l2, 0.0);
    if (r == 0.0) {
        const double s = std::sqrt(l1);
        return {s, 0.0, 0.0, s};
    }
    // Unit eigenvector for l1; pick the better-conditioned of the two formulas.
    Vec2 q = (a >= d) ? Vec2{l1 - d, b} : Vec2{b, l1 - a};
    q = (1.0 / norm(q)) * q;
    const Mat2 p1 = Mat2::outer(q, q);
    const Mat2 p2 = Mat2::identity() - p1;
    return std::sqrt(l1) * p1 + std::sqrt(l2) * p2;
}

}  // namespace gwi
