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

// Prints one PASS/FAIL line per acceptance criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gwi/gwi.hpp"

using namespace gwi;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// 1. Exact identities.
void identities(Outcome& o) {
    std::mt19937_64 rng(20261019);
    std::uniform_real_distribution<double> ud(0.01, 1.5);
    std::uniform_int_distribution<long> kd(0, 20);
    double putzer = 0.0, eig = 0.0;
    for (int t = 0; t < 200; ++t) {
        const MeanMatrix mm(ud(rng), ud(rng), ud(rng), ud(rng));
        const Mat2 m = mm.matrix();
        const long k = kd(rng);
        Mat2 p = Mat2::identity();
        for (long i = 0; i < k; ++i) p = p * m;
        putzer = std::max(putzer, max_abs(p - matrix_power_putzer(mm, k)) / std::max(1.0, max_abs(p)));
        const SpectralData s = eigen_decompose(mm);
        const auto dev = [](Vec2 a, Vec2 b) { return std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1])); };
        eig = std::max({eig, dev(m * s.u_right, s.lambda_plus * s.u_right),
                        dev(m.transpose() * s.u_left, s.lambda_plus * s.u_left),
                        dev(m * s.v_right, s.lambda_minus * s.v_right),
                        dev(m.transpose() * s.v_left, s.lambda_minus * s.v_left),
                        std::abs(s.u_right[0] + s.u_right[1] - 1.0), std::abs(dot(s.u_right, s.u_left) - 1.0),
                        std::abs(dot(s.v_right, s.v_left) - 1.0), std::abs(dot(s.u_right, s.v_left)),
                        std::abs(dot(s.v_right, s.u_left))});
    }
    const GwiModel a = presets::modelA();
    const SpectralData s = a.spectral();
    const Mat2 m = a.mean().matrix();
    double xuv = 0.0, det = 0.0, adj = 0.0, dn = 0.0;
    for (std::uint64_t r = 0; r < 50; ++r) {
        const Trajectory t = simulate_gwi(a, 200, 1, {.replication = r});
        const DerivedSeries d = uv_decompose(t, a);
        for (std::size_t k = 0; k < t.states.size(); ++k) {
            const Vec2 x = t.states[k].real();
            const Vec2 back = d.U[k] * s.u_right + d.V[k] * s.v_right;
            xuv = std::max(xuv, std::max(std::abs(back[0] - x[0]), std::abs(back[1] - x[1])) / std::max(1.0, norm(x)));
        }
        const DetIdentity di = det_identity_check(t, a);
        det = std::max(det, rel_err(di.det_direct, di.det_uv));
        const NormalEquations ne = normal_equations(t, a);
        adj = std::max(adj, max_abs(ne.A * ne.adjugate_A - ne.det_A * Mat2::identity()) / std::max(1.0, std::abs(ne.det_A)));
        dn = std::max(dn, max_abs(*ne.D - (ne.B - m * ne.A)) / std::max(1.0, max_abs(ne.A)));
    }
    o.detail << "putzer=" << putzer << " eigen=" << eig << " xuv=" << xuv << " det_uv=" << det << " adj=" << adj
             << " D_n=" << dn;
    o.require(putzer < 1e-10, "Putzer");
    o.require(eig < 1e-12, "eigen relations");
    o.require(xuv < 1e-8, "X = U u_R + V v_R");
    o.require(det < 1e-8, "det A_n through U, V");
    o.require(adj < 1e-8, "adjugate");
    o.require(dn < 1e-8, "D_n = B_n - m A_n");
}

// 2. Hand example.
void hand_example(Outcome& o) {
    Trajectory t;
    t.states = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    const NormalEquations ne = normal_equations(t, {1, 1});
    const ClsEstimate e = cls_offspring_mean(ne);
    o.require(e.m_hat && *e.m_hat == Mat2{-1, 0, 0, 0}, "m_hat");
    o.require(e.rho_hat && *e.rho_hat == 0.0, "rho_hat");
    o.require(ne.det_A == 1.0 && ne.det_exact, "det A_3");
    o.detail << "m_hat=[[-1,0],[0,0]] rho_hat=0 det=1 exact";
}

// 3. Conditional moments.
void conditional_moments(Outcome& o) {
    const ConditionalVarianceReport v = conditional_variance_check(presets::modelD(), {2, 3}, 100000, 3);
    const ThirdMomentReport t3d = third_moment_check(presets::modelD(), {1, 1}, 100000, 4);
    const ThirdMomentReport t3a = third_moment_check(presets::modelA(), {2, 3}, 100000, 5);
    o.detail << "var z=" << v.max_z << " var_uv z=" << v.max_z_uv << " third(D) z=" << t3d.max_z
             << " third(A) z=" << t3a.max_z;
    o.require(max_abs(v.target - Mat2{1.5, 1.0, 1.0, 1.5}) < 1e-12, "target");
    o.require(v.max_z < 4.0 && v.max_z_uv < 4.0, "variance within 4 sigma");
    o.require(t3d.max_z < 4.0 && t3a.max_z < 4.0, "third moment within 4 sigma");
}

// 4. Subcritical consistency and normality.
void subcritical(Outcome& o) {
    const GwiModel c = presets::modelC();
    const Mat2 m = c.mean().matrix();
    const auto improved = parallel_replications(200, workers(), [&](std::size_t r) {
        const Trajectory full = simulate_gwi(c, 100000, 40, {.replication = r});
        Trajectory head;
        head.states.assign(full.states.begin(), full.states.begin() + 1001);
        const ClsEstimate small = estimate_cls(head, c.m_eps());
        const ClsEstimate big = estimate_cls(full, c.m_eps());
        if (!small.m_hat || !big.m_hat) return false;
        return max_abs(*big.m_hat - m) < max_abs(*small.m_hat - m);
    });
    const double frac = static_cast<double>(std::count(improved.begin(), improved.end(), true)) / 200.0;

    const StationaryTensors st = stationary_tensors_time_average(c, 1000000, 41);
    const SubcriticalCovariance cov = subcritical_limit_covariance(c, st);
    const McConfig mc{.reps = 2000, .n = 2000, .seed = 42, .workers = workers()};
    const auto z = run_estimator_mc_matrix(c, mc);
    Mat2 mean;
    std::size_t count = 0;
    for (const auto& x : z)
        if (x) {
            mean += *x;
            ++count;
        }
    mean = (1.0 / static_cast<double>(count)) * mean;
    Tensor4 emp;
    for (const auto& x : z)
        if (x) emp += kron2(*x - mean, *x - mean);
    emp = (1.0 / static_cast<double>(count - 1)) * emp;
    double peak = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) peak = std::max(peak, std::abs(cov.EZ2(i, j)));
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (std::abs(cov.EZ2(i, j)) > 0.1 * peak)
                worst = std::max(worst, std::abs(emp(i, j) - cov.EZ2(i, j)) / std::abs(cov.EZ2(i, j)));

    const EmpiricalDist rho = run_estimator_mc(c, mc, EstimatorStatistic::RhoSubcritical);
    const double var_rel = std::abs(rho.variance() - cov.var_rho) / cov.var_rho;
    o.detail << "improve=" << frac << " cov worst rel=" << worst << " var_rho emp=" << rho.variance()
             << " theory=" << cov.var_rho << " rel=" << var_rel;
    o.require(frac >= 0.95, "consistency");
    o.require(worst <= 0.15, "covariance");
    o.require(var_rel <= 0.15, "rho variance");
}

// 5. Critical nondegenerate limit.
void critical_limit(Outcome& o) {
    const GwiModel a = presets::modelA();
    const LimitConstants k = limit_constants(a);
    const McConfig mc{.reps = 4000, .n = 1000, .seed = 50, .dt = 5e-4, .workers = workers()};
    const ComparisonReport rho = mc_compare(a, mc, EstimatorStatistic::RhoCritical, k);
    const ComparisonReport mxi = mc_compare(a, mc, EstimatorStatistic::MxiProjection, k);
    o.detail << "ks rho=" << rho.ks << " ks mxi=" << mxi.ks << " failures=" << rho.failures_estimator << "/"
             << mxi.failures_estimator;
    o.require(rho.ks <= 0.08, "rho KS");
    o.require(mxi.ks <= 0.08, "m_xi projection KS");
}

// 6. Degenerate critical regime.
void degenerate(Outcome& o) {
    const GwiModel d = presets::modelD();
    const ScaledStatistics s = scaled_statistics(simulate_gwi(d, 100000, 60), d);
    const double vv_rel = std::abs(s.sum_vv_n1 - 0.25) / 0.25;
    const McConfig mc{.reps = 3000, .n = 2000, .seed = 61, .dt = 5e-4, .workers = workers()};
    const ComparisonReport r =
        mc_compare(d, mc, EstimatorStatistic::MxiDegenerateProjection, limit_constants(d));
    const bool flagged = degeneracy_indicators(presets::modelD_deterministic_immigration()).full_degenerate;
    const bool d_clear = !degeneracy_indicators(d).full_degenerate;
    o.detail << "n^-1 sum V^2=" << s.sum_vv_n1 << " ks=" << r.ks << " full-degenerate flagged=" << flagged;
    o.require(vv_rel <= 0.05, "n^-1 sum V^2");
    o.require(r.ks <= 0.10, "degenerate KS");
    o.require(flagged && d_clear, "full-degenerate detector");
}

// 7. Existence probabilities.
void existence(Outcome& o) {
    for (const auto& [name, model] : {std::pair{"A", presets::modelA()}, std::pair{"C", presets::modelC()}}) {
        const auto est = parallel_replications(1000, workers(), [&](std::size_t r) {
            const ClsEstimate e = estimate_cls(simulate_gwi(model, 1000, 70, {.replication = r}), model.m_eps());
            return std::pair{e.on_omega_n, e.on_omega_tilde_n};
        });
        double p = 0, pt = 0;
        for (const auto& [a, b] : est) {
            p += a;
            pt += b;
        }
        p /= 1000;
        pt /= 1000;
        o.detail << name << ": P(Omega)=" << p << " P(Omega~)=" << pt << " ";
        o.require(p >= 0.99 && pt >= 0.99, std::string("existence ") + name);
    }
}

// 8. Moment scaling.
void moments(Outcome& o) {
    const int w = workers();
    const MomentScalingReport a = moment_scaling_check(presets::modelA(), 2, {100, 200, 400, 800}, 2000, 80, w);
    const MomentScalingReport d = moment_scaling_check(presets::modelD(), 2, {100, 200, 400, 800}, 2000, 81, w);
    const MomentScalingReport c =
        moment_scaling_check(presets::modelC(), 4, {100, 300, 1000, 3000, 10000}, 2000, 82, w);
    o.detail << "A ratios x=" << a.ratio_x << " u=" << a.ratio_u << " v=" << a.ratio_v
             << "; D E V^2 ratio=" << d.ratio_v_raw << "; C E|X|^4 ratio=" << c.ratio_x;
    o.require(a.ratio_x < 3 && a.ratio_u < 3 && a.ratio_v < 3, "model A");
    o.require(d.ratio_v_raw < 2, "model D");
    o.require(c.ratio_x < 2, "model C");
}

// 9. SDE sanity.
void sde(Outcome& o) {
    LimitConstants c;
    c.u_left = {1, 1};
    c.v_left = {-0.5, 0.5};
    c.m_eps = {0.35, 0.4};
    c.drift = 0.75;
    c.vbar = Mat2{0.25, -0.25, -0.25, 0.25};
    c.vbar_sqrt = sqrt_psd_2x2(c.vbar);
    bool exact = quad(c.vbar, c.u_left) == 0.0;
    for (std::uint64_t r = 0; r < 20 && exact; ++r) {
        const SdePath p = simulate_limit_path({.constants = c, .seed = 90, .path_index = r});
        for (std::size_t i = 0; i < p.Y.size(); ++i)
            if (p.Y[i] != c.drift * (static_cast<double>(i) * p.dt)) exact = false;
    }

    const LimitConstants k = limit_constants(presets::modelA());
    McConfig coarse{.reps = 10000, .seed = 91, .dt = 1e-3, .substeps = 2, .workers = workers()};
    McConfig fine = coarse;
    fine.dt = 5e-4;
    fine.substeps = 1;
    const EmpiricalDist qc = run_limit_mc(k, coarse, LimitFunctional::Rho);
    const EmpiricalDist qf = run_limit_mc(k, fine, LimitFunctional::Rho);
    double worst = 0.0;
    o.detail << "Y=drift*t exact=" << exact << " quantiles(dt,dt/2):";
    for (double q : {0.05, 0.5, 0.95}) {
        const double a = qc.quantile(q), b = qf.quantile(q);
        o.detail << " " << a << "/" << b;
        worst = std::max(worst, rel_err(a, b));
    }
    o.detail << " worst rel=" << worst;
    o.require(exact, "linear Y");
    o.require(worst < 0.02, "dt halving");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"exact identities", identities},
        {"CLS hand example", hand_example},
        {"conditional moments", conditional_moments},
        {"subcritical consistency and normality", subcritical},
        {"critical nondegenerate limit", critical_limit},
        {"degenerate critical regime", degenerate},
        {"existence probabilities", existence},
        {"moment scaling", moments},
        {"SDE sanity", sde},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "[exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::printf("%s criterion %zu (%s): %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.str().c_str(), secs);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
