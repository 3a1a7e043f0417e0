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

// Euler-Maruyama sampling of the limit diffusion of a critical process and the
// functionals that describe the limit laws of the CLS estimators.
//
// The diffusion is
//   dM_t = sqrt(Y_t^+) Vbar^{1/2} dW_t,   M_0 = 0,   Y_t = <u_L, M_t + t m_eps>,
// with W and an independent Wiener process W~ (both two-dimensional).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "gwi/error.hpp"
#include "gwi/estimate.hpp"
#include "gwi/laws.hpp"
#include "gwi/linalg.hpp"
#include "gwi/model.hpp"
#include "gwi/rng.hpp"
#include "gwi/simulate.hpp"

namespace gwi {

inline constexpr double kDefaultDt = 5e-4;
inline constexpr double kDegeneratePathTol = 1e-12;

/// Normalizing factor of the nondegenerate m_xi limit: sqrt(1 - lambda^2) or
/// sqrt(1 - lambda).
enum class MxiScaling { OneMinusLambdaSquared, OneMinusLambda };

/// Integrand of the W~ term in the degenerate m_xi limit: Y^{1/2} dW~ or Y dW~.
enum class DegenerateNoise { SqrtY, LinearY };

/// Everything the limit side needs from a critical model.
struct LimitConstants {
    Vec2 u_left, v_left, u_right, v_right;
    Vec2 m_eps;
    Mat2 vbar;
    Mat2 vbar_sqrt;
    double lambda = 0.0;   // second eigenvalue, alpha + delta - 1
    double drift = 0.0;    // <u_L, m_eps>
    double diff_u = 0.0;   // <Vbar u_L, u_L>
    double vbar_v = 0.0;   // <Vbar v_L, v_L>
    double veps_v = 0.0;   // <V_eps v_L, v_L>
    double vl_meps = 0.0;  // <v_L, m_eps>
    MxiScaling mxi_scaling = MxiScaling::OneMinusLambdaSquared;
    DegenerateNoise degenerate_noise = DegenerateNoise::SqrtY;

    bool degenerate() const { return std::abs(vbar_v) <= kDegeneratePathTol; }
    /// <v_L,m_eps>^2/(1-lambda)^2 + <V_eps v_L,v_L>/(1-lambda^2).
    double M() const {
        return vl_meps * vl_meps / ((1.0 - lambda) * (1.0 - lambda)) + veps_v / (1.0 - lambda * lambda);
    }
};

inline LimitConstants limit_constants(const GwiModel& model) {
    const Mat2 vbar = mixed_variance(model);
    const SpectralData s = model.spectral();
    LimitConstants c;
    c.u_left = s.u_left;
    c.v_left = s.v_left;
    c.u_right = s.u_right;
    c.v_right = s.v_right;
    c.m_eps = model.m_eps();
    c.vbar = vbar;
    c.vbar_sqrt = sqrt_psd_2x2(vbar);
    c.lambda = s.lambda_minus;
    c.drift = dot(s.u_left, model.m_eps());
    c.diff_u = quad(vbar, s.u_left);
    c.vbar_v = quad(vbar, s.v_left);
    c.veps_v = quad(model.v_eps(), s.v_left);
    c.vl_meps = dot(s.v_left, model.m_eps());
    return c;
}

struct SdeConfig {
    LimitConstants constants;
    double dt = kDefaultDt;
    /// Each step sums this many finer Gaussian increments. A path with
    /// (dt, substeps = 2) uses exactly the increments of the path with
    /// (dt / 2, substeps = 1), which gives common random numbers across grids.
    int substeps = 1;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    std::uint64_t attempt = 0;
    /// Seed of the W~ stream; defaults to `seed`.
    std::optional<std::uint64_t> tilde_seed{};
};

struct SdePath {
    double dt = 0.0;
    std::vector<double> Y;     // Y_i at t_i = i dt, clamped at 0
    std::vector<Vec2> M;       // M_i
    std::vector<Vec2> dW;      // increments of W on [t_i, t_{i+1})
    std::vector<Vec2> dWt;     // increments of W~
    std::size_t clamp_events = 0;
    double max_identity_residual = 0.0;  // max |Y_i - <u_L, M_i + t_i m_eps>| before clamping

    std::size_t steps() const { return dW.size(); }
};

inline std::size_t grid_steps(double dt) {
    if (!(dt > 0.0 && dt <= 0.01)) throw DomainError("dt must lie in (0, 0.01]");
    const auto n = static_cast<std::size_t>(std::llround(1.0 / dt));
    if (std::abs(static_cast<double>(n) * dt - 1.0) > 1e-9) throw DomainError("dt must divide 1");
    return n;
}

inline SdePath simulate_limit_path(const SdeConfig& cfg) {
    if (cfg.substeps < 1) throw DomainError("substeps must be positive");
    const LimitConstants& c = cfg.constants;
    const std::size_t n = grid_steps(cfg.dt);
    auto eng_w = make_stream(cfg.seed, StreamLabel::LimitW, cfg.path_index, cfg.attempt);
    auto eng_wt =
        make_stream(cfg.tilde_seed.value_or(cfg.seed), StreamLabel::LimitWTilde, cfg.path_index, cfg.attempt);
    std::normal_distribution<double> norm_w, norm_wt;
    const double sub_sd = std::sqrt(cfg.dt / cfg.substeps);

    SdePath p;
    p.dt = cfg.dt;
    p.Y.reserve(n + 1);
    p.M.reserve(n + 1);
    p.dW.reserve(n);
    p.dWt.reserve(n);
    p.Y.push_back(0.0);
    p.M.emplace_back(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 dw, dwt;
        for (int s = 0; s < cfg.substeps; ++s) {
            dw += sub_sd * Vec2{norm_w(eng_w), norm_w(eng_w)};
            dwt += sub_sd * Vec2{norm_wt(eng_wt), norm_wt(eng_wt)};
        }
        const Vec2 m_next = p.M.back() + std::sqrt(std::max(p.Y.back(), 0.0)) * (c.vbar_sqrt * dw);
        const double t = static_cast<double>(i + 1) * cfg.dt;
        const double y_raw = dot(c.u_left, m_next) + t * c.drift;
        const double y_check = dot(c.u_left, m_next + t * c.m_eps);
        p.max_identity_residual = std::max(p.max_identity_residual, std::abs(y_raw - y_check));
        double y = y_raw;
        if (y < 0.0) {
            y = 0.0;
            ++p.clamp_events;
        }
        p.dW.push_back(dw);
        p.dWt.push_back(dwt);
        p.M.push_back(m_next);
        p.Y.push_back(y);
    }
    return p;
}

/// Left-point (Ito) sums of a path over [0, 1].
struct PathIntegrals {
    double int_y = 0.0;        // int Y dt
    double int_y2 = 0.0;       // int Y^2 dt
    Vec2 int_y_dwt;            // int Y dW~
    Vec2 int_sqrty_dwt;        // int Y^{1/2} dW~
    Vec2 int_y_dm;             // int Y dM
    Vec2 m1;                   // M_1
    double int_y_dy_centered = 0.0;  // int Y d(Y - t drift)
};

inline PathIntegrals path_integrals(const SdePath& p, double drift) {
    PathIntegrals r;
    const std::size_t n = p.steps();
    for (std::size_t i = 0; i < n; ++i) {
        const double y = p.Y[i];
        r.int_y += y * p.dt;
        r.int_y2 += y * y * p.dt;
        r.int_y_dwt += y * p.dWt[i];
        r.int_sqrty_dwt += std::sqrt(y) * p.dWt[i];
        r.int_y_dm += y * (p.M[i + 1] - p.M[i]);
        const double t0 = static_cast<double>(i) * p.dt;
        const double t1 = static_cast<double>(i + 1) * p.dt;
        r.int_y_dy_centered += y * ((p.Y[i + 1] - drift * t1) - (p.Y[i] - drift * t0));
    }
    r.m1 = p.M.back();
    return r;
}

/// Raised when a path is too close to zero for a functional to be defined; the
/// Monte Carlo driver resamples such paths and counts them.
class DegeneratePathError : public DomainError {
public:
    explicit DegeneratePathError(const std::string& what) : DomainError(what) {}
};

/// Limit of n^{1/2}(m_hat - m) when <Vbar v_L, v_L> > 0.
inline Mat2 functional_mxi(const SdePath& p, const LimitConstants& c) {
    if (!(c.vbar_v > 0.0)) throw DomainError("functional_mxi needs <Vbar v_L, v_L> > 0");
    const PathIntegrals r = path_integrals(p, c.drift);
    if (r.int_y <= kDegeneratePathTol) throw DegeneratePathError("int Y dt vanishes on this path");
    const double scale_lambda =
        c.mxi_scaling == MxiScaling::OneMinusLambdaSquared ? 1.0 - c.lambda * c.lambda : 1.0 - c.lambda;
    const double factor = std::sqrt(scale_lambda) / std::sqrt(c.vbar_v) / r.int_y;
    return Mat2::outer(factor * (c.vbar_sqrt * r.int_y_dwt), c.v_left);
}

/// Limit of n(rho_hat - 1): int Y d(Y - t drift) / int Y^2 dt.
inline double functional_rho(const SdePath& p, const LimitConstants& c) {
    const PathIntegrals r = path_integrals(p, c.drift);
    if (r.int_y2 <= kDegeneratePathTol) throw DegeneratePathError("int Y^2 dt vanishes on this path");
    return r.int_y_dy_centered / r.int_y2;
}

struct DegenerateTerms {
    double I1 = 0.0, I2 = 0.0;
    Vec2 I3, I4;
};

inline DegenerateTerms degenerate_terms(const SdePath& p, const LimitConstants& c) {
    const PathIntegrals r = path_integrals(p, c.drift);
    const double one_minus = 1.0 - c.lambda;
    const double one_minus_sq = 1.0 - c.lambda * c.lambda;
    DegenerateTerms t;
    t.I1 = c.vl_meps * c.vl_meps / (one_minus * one_minus) * (r.int_y2 - r.int_y * r.int_y);
    t.I2 = c.veps_v / one_minus_sq * r.int_y2;
    t.I3 = (c.vl_meps / one_minus) * (r.int_y2 * r.m1 - r.int_y * r.int_y_dm);
    const Vec2 noise = c.degenerate_noise == DegenerateNoise::SqrtY ? r.int_sqrty_dwt : r.int_y_dwt;
    t.I4 = (std::sqrt(c.veps_v) / std::sqrt(one_minus_sq) * r.int_y2) * (c.vbar_sqrt * noise);
    return t;
}

/// Limit of (m_hat - m), unscaled, when <Vbar v_L, v_L> = 0.
inline Mat2 functional_mxi_degenerate(const SdePath& p, const LimitConstants& c) {
    if (!c.degenerate()) throw DomainError("functional_mxi_degenerate needs <Vbar v_L, v_L> = 0");
    if (!(c.M() > 0.0))
        throw DomainError("functional_mxi_degenerate needs M > 0; no unique CLS estimator exists");
    const DegenerateTerms t = degenerate_terms(p, c);
    const double den = t.I1 + t.I2;
    if (den <= kDegeneratePathTol) throw DegeneratePathError("I1 + I2 vanishes on this path");
    return Mat2::outer((1.0 / den) * (t.I3 + t.I4), c.v_left);
}

/// <row_i(w), v> / |v|^2; for a matrix of the form c v^T this recovers c_i.
inline double row_projection(const Mat2& w, Vec2 v, std::size_t row = 0) {
    return dot(w.row(row), v) / dot(v, v);
}

/// Finite-n scalings of the sums and estimation errors of a critical path.
struct ScaledStatistics {
    std::size_t n = 0;
    double sum_uu_n3 = 0.0;   // n^-3 sum U_{k-1}^2
    double sum_vv_n2 = 0.0;   // n^-2 sum V_{k-1}^2
    double sum_uv_n52 = 0.0;  // n^-5/2 sum U_{k-1} V_{k-1}
    double sum_vv_n1 = 0.0;   // n^-1 sum V_{k-1}^2
    double sum_uv_n2 = 0.0;   // n^-2 sum U_{k-1} V_{k-1}
    double det_n5 = 0.0;      // n^-5 det A_n
    double det_n4 = 0.0;      // n^-4 det A_n
    std::optional<Mat2> m_err;         // m_hat - m
    std::optional<Mat2> m_err_sqrt_n;  // n^{1/2} (m_hat - m)
    std::optional<double> rho_err_n;   // n (rho_hat - 1)
};

inline ScaledStatistics scaled_statistics(const Trajectory& traj, const GwiModel& model) {
    const DerivedSeries s = uv_decompose(traj, model);
    const NormalEquations ne = normal_equations(traj, model.m_eps());
    const ClsEstimate est = cls_offspring_mean(ne);
    ScaledStatistics out;
    out.n = traj.length();
    const double n = static_cast<double>(out.n);
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (std::size_t k = 1; k <= out.n; ++k) {
        uu += s.U[k - 1] * s.U[k - 1];
        vv += s.V[k - 1] * s.V[k - 1];
        uv += s.U[k - 1] * s.V[k - 1];
    }
    out.sum_uu_n3 = uu / (n * n * n);
    out.sum_vv_n2 = vv / (n * n);
    out.sum_uv_n52 = uv / std::pow(n, 2.5);
    out.sum_vv_n1 = vv / n;
    out.sum_uv_n2 = uv / (n * n);
    out.det_n5 = ne.det_A / std::pow(n, 5.0);
    out.det_n4 = ne.det_A / std::pow(n, 4.0);
    if (est.m_hat) {
        out.m_err = *est.m_hat - model.mean().matrix();
        out.m_err_sqrt_n = std::sqrt(n) * *out.m_err;
    }
    if (est.rho_hat) out.rho_err_n = n * (*est.rho_hat - 1.0);
    return out;
}

}  // namespace gwi
