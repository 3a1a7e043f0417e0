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

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gwi/limit.hpp"
#include "gwi/presets.hpp"

using namespace gwi;

namespace {

/// Constants whose diffusion only moves orthogonally to u_L = (1, 1).
LimitConstants no_u_diffusion(double drift) {
    LimitConstants c;
    c.u_left = {1, 1};
    c.v_left = {-0.5, 0.5};
    c.u_right = {0.5, 0.5};
    c.v_right = {-1, 1};
    c.m_eps = {drift / 2, drift / 2};
    c.vbar = Mat2{0.25, -0.25, -0.25, 0.25};
    c.vbar_sqrt = sqrt_psd_2x2(c.vbar);
    c.drift = drift;
    c.diff_u = quad(c.vbar, c.u_left);
    c.vbar_v = quad(c.vbar, c.v_left);
    return c;
}

/// A path with Y_t = t, M = 0 and no noise.
SdePath linear_path(double dt) {
    SdePath p;
    p.dt = dt;
    const std::size_t n = grid_steps(dt);
    for (std::size_t i = 0; i <= n; ++i) {
        p.Y.push_back(static_cast<double>(i) * dt);
        p.M.emplace_back(0.0, 0.0);
    }
    p.dW.assign(n, Vec2{});
    p.dWt.assign(n, Vec2{});
    return p;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TEST(LimitConstants, ModelAValues) {
    const LimitConstants c = limit_constants(presets::modelA());
    EXPECT_NEAR(c.drift, 1.0, 1e-12);
    EXPECT_NEAR(c.lambda, -0.4, 1e-12);
    EXPECT_GT(c.diff_u, 0.0);
    EXPECT_GT(c.vbar_v, 0.0);
    EXPECT_FALSE(c.degenerate());
    EXPECT_LT(max_abs(c.vbar_sqrt * c.vbar_sqrt - c.vbar), 1e-12);
}

TEST(LimitConstants, ModelDIsDegenerateWithPositiveM) {
    const LimitConstants c = limit_constants(presets::modelD());
    EXPECT_TRUE(c.degenerate());
    EXPECT_NEAR(c.M(), 0.25, 1e-12);
    EXPECT_NEAR(c.lambda, 0.0, 1e-12);
    const LimitConstants d0 = limit_constants(presets::modelD_deterministic_immigration());
    EXPECT_TRUE(d0.degenerate());
    EXPECT_NEAR(d0.M(), 0.0, 1e-12);
}

TEST(LimitPath, GridValidation) {
    EXPECT_EQ(grid_steps(5e-4), 2000u);
    EXPECT_EQ(grid_steps(0.01), 100u);
    EXPECT_THROW(grid_steps(0.0), DomainError);
    EXPECT_THROW(grid_steps(0.02), DomainError);
    EXPECT_THROW(grid_steps(0.003), DomainError);
    SdeConfig cfg{.constants = limit_constants(presets::modelA())};
    cfg.substeps = 0;
    EXPECT_THROW(simulate_limit_path(cfg), DomainError);
}

TEST(LimitPath, NoDiffusionAlongULeftGivesLinearY) {
    const LimitConstants c = no_u_diffusion(1.3);
    ASSERT_EQ(c.diff_u, 0.0);
    const SdePath p = simulate_limit_path({.constants = c, .dt = 1e-3, .seed = 4});
    ASSERT_EQ(p.Y.size(), 1001u);
    for (std::size_t i = 0; i < p.Y.size(); ++i) EXPECT_EQ(p.Y[i], static_cast<double>(i) * 1e-3 * 1.3);
    EXPECT_EQ(p.clamp_events, 0u);
    EXPECT_EQ(functional_rho(p, c), 0.0);
}

TEST(LimitPath, NoImmigrationMeanStaysAtZero) {
    LimitConstants c = limit_constants(presets::modelA());
    c.m_eps = {0, 0};
    c.drift = 0.0;
    const SdePath p = simulate_limit_path({.constants = c, .seed = 1});
    for (double y : p.Y) EXPECT_EQ(y, 0.0);
    EXPECT_THROW(functional_rho(p, c), DegeneratePathError);
    EXPECT_THROW(functional_mxi(p, c), DegeneratePathError);
}

TEST(LimitPath, InvariantsOnModelA) {
    const LimitConstants c = limit_constants(presets::modelA());
    const int paths = 10000;
    double s = 0.0, s2 = 0.0;
    std::size_t clamps = 0, steps = 0;
    for (int r = 0; r < paths; ++r) {
        const SdePath p = simulate_limit_path({.constants = c, .dt = 1e-3, .seed = 21,
                                               .path_index = static_cast<std::uint64_t>(r)});
        ASSERT_EQ(p.M.front(), (Vec2{0, 0}));
        ASSERT_EQ(p.Y.front(), 0.0);
        ASSERT_LT(p.max_identity_residual, 1e-10);
        for (double y : p.Y) ASSERT_GE(y, 0.0);
        s += p.Y.back();
        s2 += p.Y.back() * p.Y.back();
        clamps += p.clamp_events;
        steps += p.steps();
    }
    const double mean = s / paths;
    const double sd = std::sqrt((s2 / paths - mean * mean) / paths);
    EXPECT_NEAR(mean, c.drift, 4 * sd);
    EXPECT_LT(static_cast<double>(clamps) / static_cast<double>(steps), 1e-3);
}

TEST(LimitPath, SameConfigIsBitwiseReproducible) {
    const SdeConfig cfg{.constants = limit_constants(presets::modelA()), .seed = 8, .path_index = 3};
    const SdePath a = simulate_limit_path(cfg);
    const SdePath b = simulate_limit_path(cfg);
    EXPECT_EQ(a.Y, b.Y);
    EXPECT_EQ(functional_rho(a, cfg.constants), functional_rho(b, cfg.constants));
}

TEST(LimitPath, SubstepsReproduceTheFinerGridIncrements) {
    const LimitConstants c = limit_constants(presets::modelA());
    const SdePath coarse = simulate_limit_path({.constants = c, .dt = 1e-3, .substeps = 2, .seed = 5});
    const SdePath fine = simulate_limit_path({.constants = c, .dt = 5e-4, .seed = 5});
    ASSERT_EQ(fine.steps(), 2 * coarse.steps());
    for (std::size_t i = 0; i < coarse.steps(); ++i) {
        const Vec2 sum = fine.dW[2 * i] + fine.dW[2 * i + 1];
        EXPECT_NEAR(coarse.dW[i][0], sum[0], 1e-14);
        EXPECT_NEAR(coarse.dW[i][1], sum[1], 1e-14);
    }
}

TEST(LimitPath, TildeSeedChangesOnlyTheSecondNoise) {
    const LimitConstants c = limit_constants(presets::modelA());
    const SdePath a = simulate_limit_path({.constants = c, .seed = 2, .path_index = 1});
    const SdePath b = simulate_limit_path({.constants = c, .seed = 2, .path_index = 1, .tilde_seed = 99});
    EXPECT_EQ(a.Y, b.Y);
    EXPECT_NE(functional_mxi(a, c), functional_mxi(b, c));
    EXPECT_EQ(functional_rho(a, c), functional_rho(b, c));
}

TEST(FunctionalMxi, IsRankOneAlongVLeft) {
    const LimitConstants c = limit_constants(presets::modelA());
    for (std::uint64_t r = 0; r < 20; ++r) {
        const Mat2 w = functional_mxi(simulate_limit_path({.constants = c, .seed = 6, .path_index = r}), c);
        EXPECT_NEAR(w.det(), 0.0, 1e-12 * std::max(1.0, max_abs(w) * max_abs(w)));
        for (std::size_t row = 0; row < 2; ++row)
            EXPECT_NEAR(w(row, 0) * c.v_left[1], w(row, 1) * c.v_left[0], 1e-12 * std::max(1.0, max_abs(w)));
    }
}

TEST(FunctionalMxi, VanishesWithoutTheSecondNoise) {
    const LimitConstants c = limit_constants(presets::modelA());
    SdePath p = simulate_limit_path({.constants = c, .seed = 3});
    std::fill(p.dWt.begin(), p.dWt.end(), Vec2{});
    EXPECT_EQ(functional_mxi(p, c), Mat2::zero());
}

TEST(FunctionalMxi, MedianIsNearZero) {
    const LimitConstants c = limit_constants(presets::modelA());
    std::vector<double> proj;
    for (std::uint64_t r = 0; r < 4000; ++r)
        proj.push_back(row_projection(functional_mxi(simulate_limit_path({.constants = c, .dt = 2e-3, .seed = 13,
                                                                          .path_index = r}),
                                                      c),
                                      c.v_left));
    const double q25 = quantile(proj, 0.25), q75 = quantile(proj, 0.75);
    EXPECT_LT(std::abs(quantile(proj, 0.5)), 0.1 * (q75 - q25));
    EXPECT_LT(std::abs(q25 + q75), 0.15 * (q75 - q25));
}

TEST(FunctionalMxi, RequiresNondegenerateVariance) {
    const LimitConstants d = limit_constants(presets::modelD());
    EXPECT_THROW(functional_mxi(linear_path(1e-2), d), DomainError);
}

TEST(FunctionalRho, LinearPathGivesZero) {
    LimitConstants c = no_u_diffusion(1.0);
    EXPECT_EQ(functional_rho(linear_path(1e-3), c), 0.0);
}

TEST(FunctionalRho, HandComputedOnAShortGrid) {
    // Y = 0, 1, 3 on dt = 0.5 with drift 0: int Y dY = 1 * 2, int Y^2 dt = 0.5.
    SdePath p;
    p.dt = 0.5;
    p.Y = {0, 1, 3};
    p.M.assign(3, Vec2{});
    p.dW.assign(2, Vec2{});
    p.dWt.assign(2, Vec2{});
    LimitConstants c;
    EXPECT_DOUBLE_EQ(functional_rho(p, c), 4.0);
}

TEST(FunctionalMxiDegenerate, PreconditionsAndZeroNoise) {
    const LimitConstants d0 = limit_constants(presets::modelD_deterministic_immigration());
    EXPECT_THROW(functional_mxi_degenerate(linear_path(1e-2), d0), DomainError);
    EXPECT_THROW(functional_mxi_degenerate(linear_path(1e-2), limit_constants(presets::modelA())), DomainError);

    const LimitConstants d = limit_constants(presets::modelD());
    SdePath p = simulate_limit_path({.constants = d, .seed = 9});
    std::fill(p.dWt.begin(), p.dWt.end(), Vec2{});
    for (std::size_t i = 0; i < p.M.size(); ++i) p.M[i] = Vec2{};
    EXPECT_EQ(functional_mxi_degenerate(p, d), Mat2::zero());
}

TEST(FunctionalMxiDegenerate, FirstTermIsNonnegativeAndResultIsAlongVLeft) {
    const LimitConstants d = limit_constants(presets::modelD());
    for (std::uint64_t r = 0; r < 200; ++r) {
        const SdePath p = simulate_limit_path({.constants = d, .dt = 2e-3, .seed = 10, .path_index = r});
        const DegenerateTerms t = degenerate_terms(p, d);
        EXPECT_GE(t.I1, -1e-12);
        EXPECT_GE(t.I2, 0.0);
        const Mat2 w = functional_mxi_degenerate(p, d);
        EXPECT_NEAR(w.det(), 0.0, 1e-12 * std::max(1.0, max_abs(w) * max_abs(w)));
    }
}

TEST(FunctionalMxiDegenerate, NoiseVariantsDifferOnlyInTheFourthTerm) {
    LimitConstants d = limit_constants(presets::modelD());
    const SdePath p = simulate_limit_path({.constants = d, .seed = 12});
    const DegenerateTerms a = degenerate_terms(p, d);
    d.degenerate_noise = DegenerateNoise::LinearY;
    const DegenerateTerms b = degenerate_terms(p, d);
    EXPECT_EQ(a.I1, b.I1);
    EXPECT_EQ(a.I2, b.I2);
    EXPECT_EQ(a.I3, b.I3);
}

TEST(RowProjection, RecoversTheColumnFactor) {
    const Vec2 v{-0.5, 0.5};
    const Mat2 w = Mat2::outer({3.0, -2.0}, v);
    EXPECT_DOUBLE_EQ(row_projection(w, v, 0), 3.0);
    EXPECT_DOUBLE_EQ(row_projection(w, v, 1), -2.0);
}

TEST(ScaledStatistics, HandTrajectoryUnderModelA) {
    Trajectory t;
    t.states = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    const ScaledStatistics s = scaled_statistics(t, presets::modelA());
    EXPECT_EQ(s.n, 3u);
    // U = 0, 1, 1 and V = 0, -1/2, 1/2 at k - 1 = 0, 1, 2.
    EXPECT_NEAR(s.sum_uu_n3, 2.0 / 27, 1e-15);
    EXPECT_NEAR(s.sum_vv_n2, 0.5 / 9, 1e-15);
    EXPECT_NEAR(s.sum_vv_n1, 0.5 / 3, 1e-15);
    EXPECT_NEAR(s.sum_uv_n52, 0.0, 1e-15);
    EXPECT_NEAR(s.det_n5, 1.0 / 243, 1e-15);
    EXPECT_NEAR(s.det_n4, 1.0 / 81, 1e-15);
    ASSERT_TRUE(s.m_err);
    EXPECT_LT(max_abs(*s.m_err - Mat2{-0.8, -0.2, -0.2, 0.2}), 1e-12);
    EXPECT_LT(max_abs(*s.m_err_sqrt_n - std::sqrt(3.0) * Mat2{-0.8, -0.2, -0.2, 0.2}), 1e-12);
    ASSERT_TRUE(s.rho_err_n);
    EXPECT_NEAR(*s.rho_err_n, 3.0 * (std::sqrt(2.0) / 2 - 1.0), 1e-12);
}

TEST(ScaledStatistics, ZeroTrajectoryGivesZeros) {
    Trajectory t;
    t.states.assign(6, Counts{0, 0});
    const ScaledStatistics s = scaled_statistics(t, presets::modelA());
    EXPECT_EQ(s.sum_uu_n3, 0.0);
    EXPECT_EQ(s.sum_vv_n2, 0.0);
    EXPECT_EQ(s.sum_uv_n52, 0.0);
    EXPECT_EQ(s.det_n5, 0.0);
    EXPECT_FALSE(s.m_err);
    EXPECT_FALSE(s.rho_err_n);
}

TEST(ScaledStatistics, CrossTermVanishesOnAverage) {
    const GwiModel a = presets::modelA();
    const int reps = 2000;
    double s = 0.0, s2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        const double x =
            scaled_statistics(simulate_gwi(a, 2000, 31, {.replication = static_cast<std::uint64_t>(r)}), a).sum_uv_n52;
        s += x;
        s2 += x * x;
    }
    const double mean = s / reps;
    const double sd = std::sqrt((s2 / reps - mean * mean) / reps);
    EXPECT_NEAR(mean, 0.0, 4 * sd);
}
