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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gwi/error.hpp"
#include "gwi/laws.hpp"
#include "gwi/linalg.hpp"
#include "gwi/model.hpp"
#include "gwi/rng.hpp"

namespace gwi {

inline constexpr std::int64_t kDefaultPopulationCap = 1'000'000'000;

/// How one generation is drawn. PerIndividual draws every offspring vector
/// separately; Grouped draws the multinomial atom counts of each type at once,
/// which has the same law and costs O(atoms) per step.
enum class Sampler { PerIndividual, Grouped };

struct SimOptions {
    std::uint64_t replication = 0;
    std::int64_t population_cap = kDefaultPopulationCap;
    Sampler sampler = Sampler::Grouped;
};

struct Trajectory {
    std::vector<Counts> states;  // X_0 .. X_n, X_0 = 0
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;

    std::size_t length() const { return states.empty() ? 0 : states.size() - 1; }
};

/// Inverse-CDF draw of one atom.
template <class Engine>
Counts sample_law(const FiniteLaw& law, Engine& eng) {
    const auto& cum = law.cumulative();
    const double u = eng.uniform();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
    return law.atoms()[idx].point;
}

namespace detail {

template <class Engine>
void add_offspring_grouped(const FiniteLaw& law, std::int64_t count, Engine& eng, Counts& out) {
    const auto& atoms = law.atoms();
    std::int64_t remaining = count;
    double rest = 1.0;
    for (std::size_t j = 0; j < atoms.size() && remaining > 0; ++j) {
        std::int64_t c = remaining;
        if (j + 1 < atoms.size()) {
            const double p = std::clamp(atoms[j].prob / rest, 0.0, 1.0);
            if (p < 1.0) {
                std::binomial_distribution<std::int64_t> bin(remaining, p);
                c = bin(eng);
            }
            rest -= atoms[j].prob;
        }
        out[0] += c * atoms[j].point[0];
        out[1] += c * atoms[j].point[1];
        remaining -= c;
    }
}

template <class Engine>
void add_offspring_individual(const FiniteLaw& law, std::int64_t count, Engine& eng, Counts& out) {
    for (std::int64_t j = 0; j < count; ++j) {
        const Counts p = sample_law(law, eng);
        out[0] += p[0];
        out[1] += p[1];
    }
}

}  // namespace detail

/// One generation from a given state: offspring of every individual plus one
/// immigration vector.
template <class Engine>
Counts step_once(const GwiModel& model, Counts prev, Engine& eng, Sampler sampler = Sampler::Grouped,
                 std::int64_t population_cap = kDefaultPopulationCap) {
    Counts next{0, 0};
    for (int type = 0; type < 2; ++type) {
        if (sampler == Sampler::Grouped)
            detail::add_offspring_grouped(model.offspring(type), prev[static_cast<std::size_t>(type)], eng,
                                          next);
        else
            detail::add_offspring_individual(model.offspring(type), prev[static_cast<std::size_t>(type)],
                                             eng, next);
    }
    const Counts imm = sample_law(model.immigration(), eng);
    next[0] += imm[0];
    next[1] += imm[1];
    if (next.total() > population_cap)
        throw ResourceError("population exceeded the cap of " + std::to_string(population_cap));
    return next;
}

/// Simulates X_0 = 0, X_1, ..., X_n. Generation k draws from its own stream
/// (seed, replication, k), so the result is a pure function of its arguments.
inline Trajectory simulate_gwi(const GwiModel& model, std::size_t n, std::uint64_t seed,
                               const SimOptions& opt = {}) {
    if (n < 1) throw DomainError("trajectory length must be at least 1");
    Trajectory traj;
    traj.seed = seed;
    traj.replication = opt.replication;
    traj.states.reserve(n + 1);
    traj.states.emplace_back(0, 0);
    for (std::size_t k = 1; k <= n; ++k) {
        auto eng = make_stream(seed, StreamLabel::Simulation, opt.replication, k);
        traj.states.push_back(step_once(model, traj.states.back(), eng, opt.sampler, opt.population_cap));
    }
    return traj;
}

/// E(X_k) = sum_{j<k} m^j m_eps from X_0 = 0, with Putzer powers when the mean
/// matrix is positively regular and repeated products otherwise.
inline Vec2 exact_mean(const GwiModel& model, long k) {
    Vec2 s;
    if (model.positively_regular()) {
        for (long j = 0; j < k; ++j) s += matrix_power_putzer(model.mean(), j) * model.m_eps();
        return s;
    }
    Vec2 term = model.m_eps();
    for (long j = 0; j < k; ++j) {
        s += term;
        term = model.mean_raw() * term;
    }
    return s;
}

/// M_k = X_k - m X_{k-1} - m_eps for k = 1..n.
inline std::vector<Vec2> martingale_differences(const Trajectory& traj, const GwiModel& model) {
    const Mat2& m = model.mean_raw();
    const Vec2 me = model.m_eps();
    std::vector<Vec2> out;
    out.reserve(traj.length());
    for (std::size_t k = 1; k < traj.states.size(); ++k)
        out.push_back(traj.states[k].real() - m * traj.states[k - 1].real() - me);
    return out;
}

struct DerivedSeries {
    std::vector<Vec2> M;    // k = 1..n, M[k-1] = M_k
    std::vector<double> U;  // k = 0..n
    std::vector<double> V;  // k = 0..n
};

/// U_k = <u_L, X_k> and V_k = <v_L, X_k>, with the martingale differences.
inline DerivedSeries uv_decompose(const Trajectory& traj, const GwiModel& model,
                                  double tol = kCriticalityTol) {
    if (model.criticality(tol).kind != CriticalityKind::Critical)
        throw DomainError("uv_decompose requires a critical model");
    const SpectralData s = model.spectral();
    DerivedSeries out;
    out.M = martingale_differences(traj, model);
    out.U.reserve(traj.states.size());
    out.V.reserve(traj.states.size());
    for (const Counts& x : traj.states) {
        out.U.push_back(dot(s.u_left, x.real()));
        out.V.push_back(dot(s.v_left, x.real()));
    }
    return out;
}

}  // namespace gwi
