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

// Monte Carlo campaigns: estimator-side and limit-side samples, two-sample
// comparison, and moment checks from frozen states or along trajectories.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gwi/error.hpp"
#include "gwi/estimate.hpp"
#include "gwi/laws.hpp"
#include "gwi/limit.hpp"
#include "gwi/linalg.hpp"
#include "gwi/model.hpp"
#include "gwi/rng.hpp"
#include "gwi/simulate.hpp"

namespace gwi {

inline constexpr double kDefaultComputeBudget = 2e10;

struct McConfig {
    std::size_t reps = 1000;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    double dt = kDefaultDt;
    int substeps = 1;
    int workers = 1;
    double compute_budget = kDefaultComputeBudget;  // bound on reps * n (or reps / dt)

    void validate_for_estimator() const {
        if (reps < 1) throw ConfigError("reps must be at least 1");
        if (n < 1) throw ConfigError("n must be at least 1");
        if (workers < 1) throw ConfigError("workers must be at least 1");
        if (static_cast<double>(reps) * static_cast<double>(n) > compute_budget)
            throw ConfigError("reps * n exceeds the compute budget");
    }
    void validate_for_limit() const {
        if (reps < 1) throw ConfigError("reps must be at least 1");
        if (workers < 1) throw ConfigError("workers must be at least 1");
        if (!(dt > 0.0 && dt <= 0.01)) throw ConfigError("dt must lie in (0, 0.01]");
        if (std::abs(std::round(1.0 / dt) * dt - 1.0) > 1e-9) throw ConfigError("dt must divide 1");
        if (substeps < 1) throw ConfigError("substeps must be at least 1");
        if (static_cast<double>(reps) * static_cast<double>(substeps) / dt > compute_budget)
            throw ConfigError("reps / dt exceeds the compute budget");
    }
};

/// Sorted sample with failure and resample tallies.
struct EmpiricalDist {
    std::vector<double> values;
    std::size_t failures = 0;
    std::size_t resamples = 0;

    std::size_t count() const { return values.size(); }

    static EmpiricalDist from_optional(const std::vector<std::optional<double>>& raw) {
        EmpiricalDist d;
        d.values.reserve(raw.size());
        for (const auto& v : raw) {
            if (v && std::isfinite(*v))
                d.values.push_back(*v);
            else
                ++d.failures;
        }
        std::sort(d.values.begin(), d.values.end());
        return d;
    }

    static EmpiricalDist from_values(std::vector<double> v) {
        EmpiricalDist d;
        d.values = std::move(v);
        std::sort(d.values.begin(), d.values.end());
        return d;
    }

    double mean() const {
        if (values.empty()) throw DomainError("mean of an empty sample");
        long double s = 0.0L;
        for (double v : values) s += v;
        return static_cast<double>(s / static_cast<long double>(values.size()));
    }

    double variance() const {
        if (values.size() < 2) throw DomainError("variance needs at least two values");
        const double mu = mean();
        long double s = 0.0L;
        for (double v : values) s += (v - mu) * (v - mu);
        return static_cast<double>(s / static_cast<long double>(values.size() - 1));
    }

    /// Linear interpolation between order statistics (the usual "type 7" rule).
    double quantile(double p) const {
        if (values.empty()) throw DomainError("quantile of an empty sample");
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
        const double h = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    }
};

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
inline double ks_statistic(const EmpiricalDist& a, const EmpiricalDist& b) {
    if (a.values.empty() || b.values.empty()) throw DomainError("KS statistic needs nonempty samples");
    const auto& x = a.values;
    const auto& y = b.values;
    const double na = static_cast<double>(x.size());
    const double nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    while (i < x.size() && j < y.size()) {
        const double t = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= t) ++i;
        while (j < y.size() && y[j] <= t) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

inline constexpr std::array<double, 7> kReportLevels{0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99};

struct ComparisonReport {
    std::string statistic;
    std::size_t reps = 0;
    std::size_t failures_estimator = 0;
    std::size_t failures_limit = 0;
    std::size_t resamples_limit = 0;
    double ks = 0.0;
    std::array<double, 7> quantiles_estimator{};
    std::array<double, 7> quantiles_limit{};
    double runtime_seconds = 0.0;
};

inline ComparisonReport compare(const EmpiricalDist& estimator_side, const EmpiricalDist& limit_side,
                                std::string statistic, std::size_t reps) {
    ComparisonReport r;
    r.statistic = std::move(statistic);
    r.reps = reps;
    r.failures_estimator = estimator_side.failures;
    r.failures_limit = limit_side.failures;
    r.resamples_limit = limit_side.resamples;
    r.ks = ks_statistic(estimator_side, limit_side);
    for (std::size_t i = 0; i < kReportLevels.size(); ++i) {
        r.quantiles_estimator[i] = estimator_side.quantile(kReportLevels[i]);
        r.quantiles_limit[i] = limit_side.quantile(kReportLevels[i]);
    }
    return r;
}

/// Runs f(0), ..., f(reps - 1) on a pool of `workers` threads and returns the
/// results in replication order. The first exception thrown by any task is
/// rethrown after all workers have stopped.
template <class F>
auto parallel_replications(std::size_t reps, int workers, F&& f) {
    using R = decltype(f(std::size_t{0}));
    std::vector<std::optional<R>> slots(reps);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const auto work = [&] {
        for (;;) {
            if (stop.load()) return;
            const std::size_t r = next.fetch_add(1);
            if (r >= reps) return;
            try {
                slots[r].emplace(f(r));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                stop.store(true);
            }
        }
    };
    const int pool = std::max(1, std::min<int>(workers, static_cast<int>(std::min<std::size_t>(reps, 1024))));
    if (pool == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(pool));
        for (int t = 0; t < pool; ++t) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    std::vector<R> out;
    out.reserve(reps);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

enum class EstimatorStatistic {
    RhoCritical,              // n (rho_hat - 1)
    MxiProjection,            // <row_1(n^{1/2}(m_hat - m)), v_L> / |v_L|^2
    MxiEntry,                 // n^{1/2} (m_hat - m)(1, 1)
    MxiDegenerateProjection,  // <row_1(m_hat - m), v_L> / |v_L|^2
    MxiDegenerateEntry,       // (m_hat - m)(1, 1)
    RhoSubcritical,           // n^{1/2} (rho_hat - rho)
    MxiSubcriticalEntry,      // n^{1/2} (m_hat - m)(1, 1)
};

enum class LimitFunctional {
    Rho,                    // functional_rho
    MxiProjection,          // v_L-projection of row 1 of functional_mxi
    MxiEntry,               // (1, 1) entry of functional_mxi
    MxiDegenerateProjection,
    MxiDegenerateEntry,
};

inline std::string_view to_string(EstimatorStatistic s) {
    switch (s) {
        case EstimatorStatistic::RhoCritical: return "rho_critical";
        case EstimatorStatistic::MxiProjection: return "mxi_projection";
        case EstimatorStatistic::MxiEntry: return "mxi_entry";
        case EstimatorStatistic::MxiDegenerateProjection: return "mxi_degenerate_projection";
        case EstimatorStatistic::MxiDegenerateEntry: return "mxi_degenerate_entry";
        case EstimatorStatistic::RhoSubcritical: return "rho_subcritical";
        case EstimatorStatistic::MxiSubcriticalEntry: return "mxi_subcritical_entry";
    }
    return "unknown";
}

inline std::string_view to_string(LimitFunctional f) {
    switch (f) {
        case LimitFunctional::Rho: return "rho_critical";
        case LimitFunctional::MxiProjection: return "mxi_projection";
        case LimitFunctional::MxiEntry: return "mxi_entry";
        case LimitFunctional::MxiDegenerateProjection: return "mxi_degenerate_projection";
        case LimitFunctional::MxiDegenerateEntry: return "mxi_degenerate_entry";
    }
    return "unknown";
}

/// Limit functional that describes the same quantity as an estimator statistic.
inline std::optional<LimitFunctional> matching_functional(EstimatorStatistic s) {
    switch (s) {
        case EstimatorStatistic::RhoCritical: return LimitFunctional::Rho;
        case EstimatorStatistic::MxiProjection: return LimitFunctional::MxiProjection;
        case EstimatorStatistic::MxiEntry: return LimitFunctional::MxiEntry;
        case EstimatorStatistic::MxiDegenerateProjection: return LimitFunctional::MxiDegenerateProjection;
        case EstimatorStatistic::MxiDegenerateEntry: return LimitFunctional::MxiDegenerateEntry;
        default: return std::nullopt;
    }
}

namespace detail {

inline bool is_degenerate_statistic(EstimatorStatistic s) {
    return s == EstimatorStatistic::MxiDegenerateProjection || s == EstimatorStatistic::MxiDegenerateEntry;
}

inline void check_statistic_preconditions(const GwiModel& model, EstimatorStatistic s) {
    const CriticalityKind kind = model.criticality().kind;
    if (s == EstimatorStatistic::RhoSubcritical || s == EstimatorStatistic::MxiSubcriticalEntry) {
        if (kind != CriticalityKind::Subcritical)
            throw DomainError(std::string(to_string(s)) + " needs a subcritical model");
        return;
    }
    if (kind != CriticalityKind::Critical) throw DomainError(std::string(to_string(s)) + " needs a critical model");
    const DegeneracyIndicators d = degeneracy_indicators(model);
    const bool degenerate = std::abs(d.vbar_v) <= kDegeneratePathTol;
    if (s == EstimatorStatistic::MxiProjection || s == EstimatorStatistic::MxiEntry) {
        if (degenerate) throw DomainError(std::string(to_string(s)) + " needs <Vbar v_L, v_L> > 0");
    } else if (is_degenerate_statistic(s)) {
        if (!degenerate) throw DomainError(std::string(to_string(s)) + " needs <Vbar v_L, v_L> = 0");
    }
}

}  // namespace detail

/// Value of an estimator statistic on one trajectory; absent off Omega_n (or
/// off Omega~_n for the rho statistics).
inline std::optional<double> estimator_statistic(const Trajectory& traj, const GwiModel& model,
                                                 EstimatorStatistic s) {
    const ClsEstimate est = estimate_cls(traj, model.m_eps());
    const double n = static_cast<double>(traj.length());
    switch (s) {
        case EstimatorStatistic::RhoCritical:
            if (!est.rho_hat) return std::nullopt;
            return n * (*est.rho_hat - 1.0);
        case EstimatorStatistic::RhoSubcritical:
            if (!est.rho_hat) return std::nullopt;
            return std::sqrt(n) * (*est.rho_hat - model.criticality().rho);
        default: break;
    }
    if (!est.m_hat) return std::nullopt;
    const Mat2 err = *est.m_hat - model.mean().matrix();
    switch (s) {
        case EstimatorStatistic::MxiProjection:
            return std::sqrt(n) * row_projection(err, model.spectral().v_left);
        case EstimatorStatistic::MxiEntry:
        case EstimatorStatistic::MxiSubcriticalEntry:
            return std::sqrt(n) * err(0, 0);
        case EstimatorStatistic::MxiDegenerateProjection:
            return row_projection(err, model.spectral().v_left);
        case EstimatorStatistic::MxiDegenerateEntry:
            return err(0, 0);
        default: break;
    }
    return std::nullopt;
}

/// One statistic value per replication r, from the trajectory (mc.seed, r).
inline EmpiricalDist run_estimator_mc(const GwiModel& model, const McConfig& mc, EstimatorStatistic s,
                                      const SimOptions& base = {}) {
    mc.validate_for_estimator();
    detail::check_statistic_preconditions(model, s);
    const auto raw = parallel_replications(mc.reps, mc.workers, [&](std::size_t r) {
        SimOptions opt = base;
        opt.replication = r;
        return estimator_statistic(simulate_gwi(model, mc.n, mc.seed, opt), model, s);
    });
    return EmpiricalDist::from_optional(raw);
}

/// n^{1/2}(m_hat - m) per replication, absent off Omega_n.
inline std::vector<std::optional<Mat2>> run_estimator_mc_matrix(const GwiModel& model, const McConfig& mc) {
    mc.validate_for_estimator();
    const Mat2 m = model.mean().matrix();
    return parallel_replications(mc.reps, mc.workers, [&](std::size_t r) -> std::optional<Mat2> {
        SimOptions opt;
        opt.replication = r;
        const ClsEstimate est = estimate_cls(simulate_gwi(model, mc.n, mc.seed, opt), model.m_eps());
        if (!est.m_hat) return std::nullopt;
        return std::sqrt(static_cast<double>(mc.n)) * (*est.m_hat - m);
    });
}

/// Sample E(Z (x) Z) over the present values.
inline Tensor4 empirical_kron_second_moment(const std::vector<std::optional<Mat2>>& z) {
    Tensor4 sum;
    std::size_t count = 0;
    for (const auto& v : z) {
        if (!v) continue;
        sum += kron2(*v, *v);
        ++count;
    }
    if (count == 0) throw DomainError("no replication produced an estimate");
    return (1.0 / static_cast<double>(count)) * sum;
}

inline std::optional<double> limit_functional_value(const SdePath& p, const LimitConstants& c,
                                                    LimitFunctional f) {
    switch (f) {
        case LimitFunctional::Rho: return functional_rho(p, c);
        case LimitFunctional::MxiProjection: return row_projection(functional_mxi(p, c), c.v_left);
        case LimitFunctional::MxiEntry: return functional_mxi(p, c)(0, 0);
        case LimitFunctional::MxiDegenerateProjection:
            return row_projection(functional_mxi_degenerate(p, c), c.v_left);
        case LimitFunctional::MxiDegenerateEntry: return functional_mxi_degenerate(p, c)(0, 0);
    }
    return std::nullopt;
}

inline constexpr std::uint64_t kMaxPathAttempts = 1000;

struct LimitSamples {
    std::vector<std::optional<double>> values;  // in path order
    std::size_t resamples = 0;
};

/// One functional value per limit path r, in path order. Paths on which the
/// functional is undefined are redrawn on a fresh attempt stream and counted.
inline LimitSamples limit_samples(const LimitConstants& constants, const McConfig& mc, LimitFunctional f,
                                  std::optional<std::uint64_t> tilde_seed = std::nullopt) {
    mc.validate_for_limit();
    const bool deg = f == LimitFunctional::MxiDegenerateProjection || f == LimitFunctional::MxiDegenerateEntry;
    if (deg && !constants.degenerate())
        throw DomainError("degenerate functional needs <Vbar v_L, v_L> = 0");
    if ((f == LimitFunctional::MxiProjection || f == LimitFunctional::MxiEntry) && constants.degenerate())
        throw DomainError("functional_mxi needs <Vbar v_L, v_L> > 0");
    struct Draw {
        std::optional<double> value;
        std::size_t resamples = 0;
    };
    const auto raw = parallel_replications(mc.reps, mc.workers, [&](std::size_t r) {
        SdeConfig cfg;
        cfg.constants = constants;
        cfg.dt = mc.dt;
        cfg.substeps = mc.substeps;
        cfg.seed = mc.seed;
        cfg.path_index = r;
        cfg.tilde_seed = tilde_seed;
        Draw d;
        for (std::uint64_t attempt = 0; attempt < kMaxPathAttempts; ++attempt) {
            cfg.attempt = attempt;
            try {
                d.value = limit_functional_value(simulate_limit_path(cfg), constants, f);
                return d;
            } catch (const DegeneratePathError&) {
                ++d.resamples;
            }
        }
        return d;
    });
    LimitSamples out;
    out.values.reserve(raw.size());
    for (const auto& d : raw) {
        out.values.push_back(d.value);
        out.resamples += d.resamples;
    }
    return out;
}

inline EmpiricalDist run_limit_mc(const LimitConstants& constants, const McConfig& mc, LimitFunctional f,
                                  std::optional<std::uint64_t> tilde_seed = std::nullopt) {
    const LimitSamples s = limit_samples(constants, mc, f, tilde_seed);
    EmpiricalDist out = EmpiricalDist::from_optional(s.values);
    out.resamples = s.resamples;
    return out;
}

/// Estimator-side versus limit-side samples of a critical-regime statistic.
inline ComparisonReport mc_compare(const GwiModel& model, const McConfig& mc, EstimatorStatistic s,
                                   const LimitConstants& constants) {
    const auto start = std::chrono::steady_clock::now();
    const auto f = matching_functional(s);
    if (!f) throw DomainError(std::string(to_string(s)) + " has no limit functional counterpart");
    const EmpiricalDist est = run_estimator_mc(model, mc, s);
    const EmpiricalDist lim = run_limit_mc(constants, mc, *f);
    ComparisonReport rep = compare(est, lim, std::string(to_string(s)), mc.reps);
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

// ---------------------------------------------------------------------------
// Moment checks

struct MomentScalingRow {
    std::size_t k = 0;
    double x_norm = 0.0;  // E|X_k|^l / k^l (critical) or E|X_k|^l (subcritical)
    double u = 0.0;       // E|U_k|^l / k^l
    double v = 0.0;       // E|V_k|^l / k^{l/2}
    double v_raw = 0.0;   // E|V_k|^l
};

struct MomentScalingReport {
    int ell = 2;
    bool critical = false;
    bool has_uv = false;
    std::vector<MomentScalingRow> rows;
    double ratio_x = 1.0;  // max / min across the grid
    double ratio_u = 1.0;
    double ratio_v = 1.0;
    double ratio_v_raw = 1.0;
};

namespace detail {

inline double spread_ratio(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*hi == 0.0) return 1.0;
    if (*lo <= 0.0) return std::numeric_limits<double>::infinity();
    return *hi / *lo;
}

}  // namespace detail

/// Monte Carlo moments along the trajectory at the grid points, with the
/// scalings under which they stay bounded.
inline MomentScalingReport moment_scaling_check(const GwiModel& model, int ell, std::vector<std::size_t> k_grid,
                                                std::size_t reps, std::uint64_t seed, int workers = 1) {
    if (ell < 1 || ell > kMaxMomentOrder) throw DomainError("moment order must lie in 1..8");
    if (k_grid.empty()) throw DomainError("k grid must be nonempty");
    if (reps < 1) throw DomainError("reps must be at least 1");
    std::sort(k_grid.begin(), k_grid.end());
    k_grid.erase(std::unique(k_grid.begin(), k_grid.end()), k_grid.end());
    if (k_grid.front() < 1) throw DomainError("grid points must be at least 1");
    const Criticality crit = model.criticality();
    if (crit.kind == CriticalityKind::Supercritical) throw DomainError("moment scaling needs a non-supercritical model");

    MomentScalingReport rep;
    rep.ell = ell;
    rep.critical = crit.kind == CriticalityKind::Critical;
    rep.has_uv = rep.critical && model.positively_regular();
    Vec2 ul, vl;
    if (rep.has_uv) {
        const SpectralData s = model.spectral();
        ul = s.u_left;
        vl = s.v_left;
    }
    const std::size_t g = k_grid.size();
    const std::size_t kmax = k_grid.back();
    const double l = static_cast<double>(ell);
    const auto per_rep = parallel_replications(reps, workers, [&](std::size_t r) {
        std::vector<std::array<double, 3>> vals(g);
        Counts x{0, 0};
        std::size_t gi = 0;
        for (std::size_t k = 1; k <= kmax; ++k) {
            auto eng = make_stream(seed, StreamLabel::Simulation, r, k);
            x = step_once(model, x, eng);
            if (k == k_grid[gi]) {
                const Vec2 xr = x.real();
                vals[gi] = {std::pow(norm(xr), l), rep.has_uv ? std::pow(std::abs(dot(ul, xr)), l) : 0.0,
                            rep.has_uv ? std::pow(std::abs(dot(vl, xr)), l) : 0.0};
                if (++gi == g) break;
            }
        }
        return vals;
    });
    std::vector<double> xs, us, vs, vraws;
    for (std::size_t i = 0; i < g; ++i) {
        long double sx = 0.0L, su = 0.0L, sv = 0.0L;
        for (const auto& v : per_rep) {
            sx += v[i][0];
            su += v[i][1];
            sv += v[i][2];
        }
        const long double inv = 1.0L / static_cast<long double>(reps);
        const double k = static_cast<double>(k_grid[i]);
        MomentScalingRow row;
        row.k = k_grid[i];
        const double ex = static_cast<double>(sx * inv);
        row.x_norm = rep.critical ? ex / std::pow(k, l) : ex;
        row.u = static_cast<double>(su * inv) / std::pow(k, l);
        row.v_raw = static_cast<double>(sv * inv);
        row.v = row.v_raw / std::pow(k, l / 2.0);
        rep.rows.push_back(row);
        xs.push_back(row.x_norm);
        us.push_back(row.u);
        vs.push_back(row.v);
        vraws.push_back(row.v_raw);
    }
    rep.ratio_x = detail::spread_ratio(xs);
    if (rep.has_uv) {
        rep.ratio_u = detail::spread_ratio(us);
        rep.ratio_v = detail::spread_ratio(vs);
        rep.ratio_v_raw = detail::spread_ratio(vraws);
    }
    return rep;
}

/// Empirical one-step covariance of M_k from a frozen state against
/// X_1 V_xi1 + X_2 V_xi2 + V_eps and, for positively regular critical models,
/// against U Vbar + V V~ + V_eps.
struct ConditionalVarianceReport {
    Counts state;
    std::size_t reps = 0;
    Mat2 empirical;
    Mat2 target;
    std::optional<Mat2> target_uv;
    double max_z = 0.0;
    double max_z_uv = 0.0;
};

namespace detail {

inline double z_score(double mean, double sd, double target, std::size_t n) {
    const double se = sd / std::sqrt(static_cast<double>(n));
    if (se == 0.0) return mean == target ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(mean - target) / se;
}

/// One-step martingale differences from a frozen state.
inline std::vector<Vec2> one_step_differences(const GwiModel& model, Counts state, std::size_t reps,
                                              std::uint64_t seed, Sampler sampler) {
    const Vec2 cond_mean = model.mean_raw() * state.real() + model.m_eps();
    std::vector<Vec2> out;
    out.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        auto eng = make_stream(seed, StreamLabel::OneStep, r);
        out.push_back(step_once(model, state, eng, sampler, std::numeric_limits<std::int64_t>::max()).real() -
                      cond_mean);
    }
    return out;
}

}  // namespace detail

inline ConditionalVarianceReport conditional_variance_check(const GwiModel& model, Counts state, std::size_t reps,
                                                            std::uint64_t seed, Sampler sampler = Sampler::Grouped) {
    if (reps < 10'000) throw DomainError("conditional variance check needs at least 1e4 draws");
    if (state[0] < 0 || state[1] < 0) throw DomainError("state must be nonnegative");
    ConditionalVarianceReport rep;
    rep.state = state;
    rep.reps = reps;
    const Vec2 xs = state.real();
    rep.target = xs[0] * model.v_xi(0) + xs[1] * model.v_xi(1) + model.v_eps();
    if (model.positively_regular() && model.criticality().kind == CriticalityKind::Critical) {
        const SpectralData s = model.spectral();
        rep.target_uv = dot(s.u_left, xs) * mixed_variance(model) + dot(s.v_left, xs) * tilde_variance(model) +
                        model.v_eps();
    }
    const auto m = detail::one_step_differences(model, state, reps, seed, sampler);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            long double s1 = 0.0L, s2 = 0.0L;
            for (const Vec2& d : m) {
                const long double p = static_cast<long double>(d[i]) * d[j];
                s1 += p;
                s2 += p * p;
            }
            const long double nn = static_cast<long double>(reps);
            const double mean = static_cast<double>(s1 / nn);
            const double var = std::max(0.0, static_cast<double>((s2 - s1 * s1 / nn) / (nn - 1)));
            rep.empirical(i, j) = mean;
            rep.max_z = std::max(rep.max_z, detail::z_score(mean, std::sqrt(var), rep.target(i, j), reps));
            if (rep.target_uv)
                rep.max_z_uv =
                    std::max(rep.max_z_uv, detail::z_score(mean, std::sqrt(var), (*rep.target_uv)(i, j), reps));
        }
    }
    return rep;
}

/// Empirical third-moment tensor of the one-step M_k against
/// X_1 E[(xi_1 - E xi_1)^(x)3] + X_2 E[(xi_2 - E xi_2)^(x)3] + E[(eps - E eps)^(x)3].
struct ThirdMomentReport {
    Counts state;
    std::size_t reps = 0;
    std::array<double, 8> empirical{};  // index 4 i + 2 j + l
    std::array<double, 8> target{};
    double max_z = 0.0;
};

inline ThirdMomentReport third_moment_check(const GwiModel& model, Counts state, std::size_t reps, std::uint64_t seed,
                                            Sampler sampler = Sampler::Grouped) {
    if (reps < 100'000) throw DomainError("third moment check needs at least 1e5 draws");
    if (state[0] < 0 || state[1] < 0) throw DomainError("state must be nonnegative");
    ThirdMomentReport rep;
    rep.state = state;
    rep.reps = reps;
    const MomentSummary k1 = exact_moments(model.offspring(0), 3);
    const MomentSummary k2 = exact_moments(model.offspring(1), 3);
    const MomentSummary ke = exact_moments(model.immigration(), 3);
    const Vec2 xs = state.real();
    const auto m = detail::one_step_differences(model, state, reps, seed, sampler);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            for (int l = 0; l < 2; ++l) {
                const std::vector<int> idx{i, j, l};
                const std::size_t t = static_cast<std::size_t>(4 * i + 2 * j + l);
                rep.target[t] =
                    xs[0] * k1.tensor_entry(idx) + xs[1] * k2.tensor_entry(idx) + ke.tensor_entry(idx);
                long double s1 = 0.0L, s2 = 0.0L;
                for (const Vec2& d : m) {
                    const long double p = static_cast<long double>(d[static_cast<std::size_t>(i)]) *
                                          d[static_cast<std::size_t>(j)] * d[static_cast<std::size_t>(l)];
                    s1 += p;
                    s2 += p * p;
                }
                const long double nn = static_cast<long double>(reps);
                const double mean = static_cast<double>(s1 / nn);
                const double var = std::max(0.0, static_cast<double>((s2 - s1 * s1 / nn) / (nn - 1)));
                rep.empirical[t] = mean;
                rep.max_z = std::max(rep.max_z, detail::z_score(mean, std::sqrt(var), rep.target[t], reps));
            }
        }
    }
    return rep;
}

/// (1/n) sum X_{k-1} X_{k-1}^T along one path against the stationary E[X X^T].
struct SllnReport {
    std::size_t n = 0;
    Mat2 time_average;
    Mat2 stationary;
    double relative_error = 0.0;  // Frobenius
};

inline SllnReport sllna_check(const GwiModel& model, std::size_t n, std::uint64_t seed,
                              std::uint64_t replication = 0) {
    if (model.criticality().kind != CriticalityKind::Subcritical) throw DomainError("sllna_check needs a subcritical model");
    if (n < 1) throw DomainError("n must be at least 1");
    SllnReport rep;
    rep.n = n;
    rep.stationary = stationary_second_moment(model);
    long double s[3]{};
    Counts x{0, 0};
    for (std::size_t k = 1; k <= n; ++k) {
        const long double a = static_cast<long double>(x[0]), b = static_cast<long double>(x[1]);
        s[0] += a * a;
        s[1] += a * b;
        s[2] += b * b;
        auto eng = make_stream(seed, StreamLabel::Simulation, replication, k);
        x = step_once(model, x, eng);
    }
    const long double inv = 1.0L / static_cast<long double>(n);
    rep.time_average = {static_cast<double>(s[0] * inv), static_cast<double>(s[1] * inv),
                        static_cast<double>(s[1] * inv), static_cast<double>(s[2] * inv)};
    const Mat2 d = rep.time_average - rep.stationary;
    const auto frob = [](const Mat2& a) {
        return std::sqrt(a(0, 0) * a(0, 0) + a(0, 1) * a(0, 1) + a(1, 0) * a(1, 0) + a(1, 1) * a(1, 1));
    };
    rep.relative_error = frob(d) / frob(rep.stationary);
    return rep;
}

}  // namespace gwi
