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

// Conditional least squares estimation of the offspring mean matrix and of the
// criticality parameter, with the immigration mean treated as known.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gwi/error.hpp"
#include "gwi/laws.hpp"
#include "gwi/linalg.hpp"
#include "gwi/model.hpp"
#include "gwi/simulate.hpp"

namespace gwi {

__extension__ typedef __int128 int128;

struct NormalEquations {
    Mat2 A;                  // sum X_{k-1} X_{k-1}^T
    Mat2 B;                  // sum (X_k - m_eps) X_{k-1}^T
    Mat2 adjugate_A;
    double det_A = 0.0;
    bool det_positive = false;  // sharp test for the event det(A_n) > 0
    bool det_exact = false;     // det_positive decided in integer arithmetic
    std::optional<Mat2> D;   // sum M_k X_{k-1}^T, when the true model is known
};

namespace detail {

inline constexpr int128 kExactEntryLimit = static_cast<int128>(1) << 62;

inline int128 abs128(int128 v) { return v < 0 ? -v : v; }

}  // namespace detail

/// Normal equations of the CLS problem from X_0..X_n. A_n and the integer part
/// of B_n are accumulated exactly.
inline NormalEquations normal_equations(const Trajectory& traj, Vec2 m_eps) {
    if (traj.states.size() < 2) throw DomainError("normal equations need n >= 1");
    std::array<int128, 3> a{};      // a11, a12, a22
    std::array<int128, 4> cross{};  // sum X_k X_{k-1}^T, row-major
    std::array<int128, 2> prev_sum{};
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        const Counts& p = traj.states[k - 1];
        const Counts& x = traj.states[k];
        const int128 p0 = p[0], p1 = p[1];
        a[0] += p0 * p0;
        a[1] += p0 * p1;
        a[2] += p1 * p1;
        cross[0] += static_cast<int128>(x[0]) * p0;
        cross[1] += static_cast<int128>(x[0]) * p1;
        cross[2] += static_cast<int128>(x[1]) * p0;
        cross[3] += static_cast<int128>(x[1]) * p1;
        prev_sum[0] += p0;
        prev_sum[1] += p1;
    }
    NormalEquations ne;
    const auto d = [](int128 v) { return static_cast<double>(v); };
    ne.A = {d(a[0]), d(a[1]), d(a[1]), d(a[2])};
    ne.adjugate_A = ne.A.adjugate();
    const Vec2 s{d(prev_sum[0]), d(prev_sum[1])};
    ne.B = Mat2{d(cross[0]), d(cross[1]), d(cross[2]), d(cross[3])} - Mat2::outer(m_eps, s);

    const bool small = detail::abs128(a[0]) < detail::kExactEntryLimit &&
                       detail::abs128(a[1]) < detail::kExactEntryLimit &&
                       detail::abs128(a[2]) < detail::kExactEntryLimit;
    if (small) {
        const int128 det = a[0] * a[2] - a[1] * a[1];
        ne.det_A = d(det);
        ne.det_positive = det > 0;
        ne.det_exact = true;
    } else {
        ne.det_A = ne.A.det();
        const double scale = max_abs(ne.A);
        ne.det_positive = ne.det_A > 1e-9 * scale * scale;
    }
    return ne;
}

/// Also fills D_n = sum M_k X_{k-1}^T from the true model.
inline NormalEquations normal_equations(const Trajectory& traj, const GwiModel& model) {
    NormalEquations ne = normal_equations(traj, model.m_eps());
    const auto m = martingale_differences(traj, model);
    Mat2 dn;
    for (std::size_t k = 1; k < traj.states.size(); ++k)
        dn += Mat2::outer(m[k - 1], traj.states[k - 1].real());
    ne.D = dn;
    return ne;
}

struct ClsEstimate {
    std::optional<Mat2> m_hat;
    std::optional<double> rho_hat;
    double det_A = 0.0;
    double discriminant = 0.0;  // of m_hat; meaningful only on Omega_n
    bool on_omega_n = false;
    bool on_omega_tilde_n = false;
};

/// (alpha - delta)^2 + 4 beta gamma of an arbitrary real 2x2 matrix.
inline double discriminant(const Mat2& m) {
    const double diff = m(0, 0) - m(1, 1);
    return diff * diff + 4.0 * m(0, 1) * m(1, 0);
}

/// Spectral radius formula applied to an estimate; absent when the estimate has
/// complex eigenvalues. No projection onto valid mean matrices is applied.
inline std::optional<double> cls_criticality(const Mat2& m_hat) {
    const double disc = discriminant(m_hat);
    if (disc < 0.0) return std::nullopt;
    return 0.5 * (m_hat(0, 0) + m_hat(1, 1) + std::sqrt(disc));
}

inline ClsEstimate cls_offspring_mean(const NormalEquations& ne) {
    ClsEstimate est;
    est.det_A = ne.det_A;
    est.on_omega_n = ne.det_positive;
    if (!est.on_omega_n) return est;
    const Mat2 m_hat = (1.0 / ne.det_A) * (ne.B * ne.adjugate_A);
    est.m_hat = m_hat;
    est.discriminant = discriminant(m_hat);
    est.rho_hat = cls_criticality(m_hat);
    est.on_omega_tilde_n = est.rho_hat.has_value();
    return est;
}

inline ClsEstimate estimate_cls(const Trajectory& traj, Vec2 m_eps) {
    return cls_offspring_mean(normal_equations(traj, m_eps));
}

struct DetIdentity {
    double det_direct = 0.0;
    double det_uv = 0.0;
};

/// det(A_n) directly and through (sum U^2)(sum V^2) - (sum UV)^2.
inline DetIdentity det_identity_check(const Trajectory& traj, const GwiModel& model) {
    const NormalEquations ne = normal_equations(traj, model.m_eps());
    const DerivedSeries s = uv_decompose(traj, model);
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (std::size_t k = 0; k + 1 < s.U.size(); ++k) {
        uu += s.U[k] * s.U[k];
        vv += s.V[k] * s.V[k];
        uv += s.U[k] * s.V[k];
    }
    return {ne.det_A, uu * vv - uv * uv};
}

/// Moments of the stationary law needed by the subcritical limit covariance.
struct StationaryTensors {
    Vec2 mean;                    // E X
    Mat2 second;                  // E X X^T
    std::array<Mat2, 2> third{};  // third[i](j, l) = E X_i X_j X_l
    std::size_t samples = 0;
};

/// Time averages over a single long path after a burn-in, which converge to the
/// stationary moments for a subcritical model.
inline StationaryTensors stationary_tensors_time_average(const GwiModel& model, std::size_t n,
                                                         std::uint64_t seed,
                                                         std::size_t burn_in = 1000,
                                                         std::uint64_t replication = 0) {
    if (model.criticality().kind != CriticalityKind::Subcritical)
        throw DomainError("stationary tensors need a subcritical model");
    long double s1[2]{}, s2[2][2]{}, s3[2][2][2]{};
    Counts x{0, 0};
    for (std::size_t k = 1; k <= burn_in + n; ++k) {
        auto eng = make_stream(seed, StreamLabel::Simulation, replication, k);
        x = step_once(model, x, eng);
        if (k <= burn_in) continue;
        const long double v[2] = {static_cast<long double>(x[0]), static_cast<long double>(x[1])};
        for (int i = 0; i < 2; ++i) {
            s1[i] += v[i];
            for (int j = 0; j < 2; ++j) {
                s2[i][j] += v[i] * v[j];
                for (int l = 0; l < 2; ++l) s3[i][j][l] += v[i] * v[j] * v[l];
            }
        }
    }
    const long double inv = 1.0L / static_cast<long double>(n);
    StationaryTensors t;
    t.samples = n;
    for (int i = 0; i < 2; ++i) {
        t.mean[static_cast<std::size_t>(i)] = static_cast<double>(s1[i] * inv);
        for (int j = 0; j < 2; ++j) {
            t.second(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                static_cast<double>(s2[i][j] * inv);
            for (int l = 0; l < 2; ++l)
                t.third[static_cast<std::size_t>(i)](static_cast<std::size_t>(j), static_cast<std::size_t>(l)) =
                    static_cast<double>(s3[i][j][l] * inv);
        }
    }
    return t;
}

struct SubcriticalCovariance {
    Tensor4 EZ2;           // E(Z (x) Z) of the normal limit of n^{1/2}(m_hat - m)
    double var_rho = 0.0;  // Tr[(R (x) R) E(Z (x) Z)]
};

namespace detail {
inline std::array<double, 4> flatten(const Mat2& m) { return {m(0, 0), m(0, 1), m(1, 0), m(1, 1)}; }
}  // namespace detail

inline SubcriticalCovariance subcritical_limit_covariance(const GwiModel& model,
                                                          const StationaryTensors& st) {
    if (model.criticality().kind != CriticalityKind::Subcritical)
        throw DomainError("subcritical_limit_covariance requires a subcritical model");
    const Mat2& sigma = st.second;
    const double scale = std::max(1.0, max_abs(sigma));
    if (std::abs(sigma.det()) <= 1e-12 * scale * scale) {
        std::string failed;
        const auto singular = [](const Mat2& v) { return std::abs(v.det()) <= 1e-14; };
        if (singular(model.v_xi(0))) failed += " V_xi1";
        if (singular(model.v_xi(1))) failed += " V_xi2";
        if (singular(model.v_eps())) failed += " V_eps";
        throw DomainError("stationary E[X X^T] is singular; none of V_xi1, V_xi2, V_eps is invertible (singular:" +
                          failed + ")");
    }
    Tensor4 inner;
    for (int i = 0; i < 2; ++i)
        inner += outer4(detail::flatten(model.v_xi(i)), detail::flatten(st.third[static_cast<std::size_t>(i)]));
    inner += outer4(detail::flatten(model.v_eps()), detail::flatten(sigma));
    const Mat2 sigma_inv = sigma.inverse();
    SubcriticalCovariance out;
    out.EZ2 = inner * kron2(sigma_inv, sigma_inv);
    const Mat2 r = grad_spectral_radius(model.mean());
    out.var_rho = (kron2(r, r) * out.EZ2).trace();
    return out;
}

}  // namespace gwi
