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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gwi/error.hpp"
#include "gwi/linalg.hpp"
#include "gwi/model.hpp"

namespace gwi {

inline constexpr int kMaxMomentOrder = 8;

struct Atom {
    Counts point;
    double prob = 0.0;
};

/// Probability law on Z_+^2 with finitely many atoms.
class FiniteLaw {
public:
    FiniteLaw() = delete;

    explicit FiniteLaw(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
        if (atoms_.empty()) throw ConfigError("law needs at least one atom");
        double total = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            const Atom& a = atoms_[i];
            if (a.point[0] < 0 || a.point[1] < 0)
                throw ConfigError("law atoms must be nonnegative integer points");
            if (!(a.prob > 0.0) || !std::isfinite(a.prob))
                throw ConfigError("law atom probabilities must be positive");
            for (std::size_t j = 0; j < i; ++j)
                if (atoms_[j].point == a.point) throw ConfigError("law atoms must be distinct points");
            total += a.prob;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ConfigError("law probabilities must sum to 1");
        cumulative_.reserve(atoms_.size());
        double acc = 0.0;
        for (const Atom& a : atoms_) {
            acc += a.prob;
            cumulative_.push_back(acc);
        }
        cumulative_.back() = 1.0;
    }

    static FiniteLaw point_mass(Counts p) { return FiniteLaw({{p, 1.0}}); }

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    const std::vector<double>& cumulative() const { return cumulative_; }

    Vec2 mean() const {
        Vec2 m;
        for (const Atom& a : atoms_) m += a.prob * a.point.real();
        return m;
    }

    bool deterministic() const { return atoms_.size() == 1; }

private:
    std::vector<Atom> atoms_;
    std::vector<double> cumulative_;
};

/// Mean, covariance and central moments up to a fixed order of a law on R^2.
///
/// A central moment tensor of order r is symmetric, so it is stored as its r+1
/// distinct entries: central(r, a) = E[d1^a d2^(r-a)] with d = x - mean.
class MomentSummary {
public:
    MomentSummary(Vec2 mean, int max_order, std::vector<std::vector<double>> central)
        : mean_(mean), max_order_(max_order), central_(std::move(central)) {}

    Vec2 mean() const { return mean_; }
    int max_order() const { return max_order_; }

    Mat2 cov() const {
        if (max_order_ < 2) throw DomainError("covariance needs moments of order 2");
        return {central(2, 2), central(2, 1), central(2, 1), central(2, 0)};
    }

    double central(int order, int count_first) const {
        if (order < 0 || order > max_order_) throw DomainError("moment order out of range");
        return central_[static_cast<std::size_t>(order)][static_cast<std::size_t>(count_first)];
    }

    /// Entry (i1, ..., ir) of the order-r tensor E[d^{(x)r}], indices in {0, 1}.
    double tensor_entry(const std::vector<int>& index) const {
        const int r = static_cast<int>(index.size());
        const int a = static_cast<int>(std::count(index.begin(), index.end(), 0));
        return central(r, a);
    }

    /// E[<w, d>^r].
    double projected(int order, Vec2 w) const {
        double s = 0.0;
        double binom = 1.0;
        for (int a = 0; a <= order; ++a) {
            s += binom * std::pow(w[0], a) * std::pow(w[1], order - a) * central(order, a);
            binom = binom * (order - a) / (a + 1);
        }
        return s;
    }

private:
    Vec2 mean_;
    int max_order_;
    std::vector<std::vector<double>> central_;
};

inline MomentSummary exact_moments(const FiniteLaw& law, int max_order = 4) {
    if (max_order < 1 || max_order > kMaxMomentOrder)
        throw DomainError("moment order must lie in 1..8");
    const Vec2 mu = law.mean();
    std::vector<std::vector<double>> central(static_cast<std::size_t>(max_order) + 1);
    for (int r = 0; r <= max_order; ++r) {
        auto& row = central[static_cast<std::size_t>(r)];
        row.assign(static_cast<std::size_t>(r) + 1, 0.0);
        for (const Atom& atom : law.atoms()) {
            const double d1 = static_cast<double>(atom.point[0]) - mu[0];
            const double d2 = static_cast<double>(atom.point[1]) - mu[1];
            for (int a = 0; a <= r; ++a)
                row[static_cast<std::size_t>(a)] += atom.prob * std::pow(d1, a) * std::pow(d2, r - a);
        }
    }
    return {mu, max_order, std::move(central)};
}

/// Offspring mean matrix from the two offspring laws: column i is the mean of law i.
inline MeanMatrix mean_matrix(const FiniteLaw& offspring1, const FiniteLaw& offspring2) {
    return MeanMatrix(Mat2::from_columns(offspring1.mean(), offspring2.mean()));
}

/// A two-type branching process with immigration given by three finite laws.
/// Derived means and covariances are computed once at construction.
class GwiModel {
public:
    GwiModel(FiniteLaw offspring1, FiniteLaw offspring2, FiniteLaw immigration)
        : offspring_{std::move(offspring1), std::move(offspring2)},
          immigration_(std::move(immigration)),
          mean_raw_(Mat2::from_columns(offspring_[0].mean(), offspring_[1].mean())) {
        try {
            mean_ = MeanMatrix(mean_raw_);
        } catch (const DomainError&) {
            mean_.reset();
        }
        m_eps_ = immigration_.mean();
        if (m_eps_[0] == 0.0 && m_eps_[1] == 0.0)
            throw DomainError("immigration mean must be nonzero");
        v_xi_[0] = exact_moments(offspring_[0], 2).cov();
        v_xi_[1] = exact_moments(offspring_[1], 2).cov();
        v_eps_ = exact_moments(immigration_, 2).cov();
    }

    const FiniteLaw& offspring(int type) const { return offspring_[static_cast<std::size_t>(type)]; }
    const FiniteLaw& immigration() const { return immigration_; }

    /// Validated mean matrix; throws DomainError when positive regularity fails.
    const MeanMatrix& mean() const {
        if (!mean_)
            throw DomainError("offspring mean matrix is not positively regular (needs beta > 0, gamma > 0, alpha + delta > 0)");
        return *mean_;
    }
    /// Column i is the mean of offspring law i, with no regularity requirement.
    const Mat2& mean_raw() const { return mean_raw_; }
    bool positively_regular() const { return mean_.has_value(); }
    Vec2 m_eps() const { return m_eps_; }
    const Mat2& v_xi(int type) const { return v_xi_[static_cast<std::size_t>(type)]; }
    const Mat2& v_eps() const { return v_eps_; }

    Criticality criticality(double tol = kCriticalityTol) const { return classify(mean_raw_, tol); }
    SpectralData spectral() const { return eigen_decompose(mean()); }

private:
    std::array<FiniteLaw, 2> offspring_;
    FiniteLaw immigration_;
    Mat2 mean_raw_;
    std::optional<MeanMatrix> mean_;
    Vec2 m_eps_;
    std::array<Mat2, 2> v_xi_;
    Mat2 v_eps_;
};

inline MeanMatrix mean_matrix(const GwiModel& model) { return model.mean(); }

namespace detail {
inline void require_critical(const GwiModel& model, double tol, const char* what) {
    if (model.criticality(tol).kind != CriticalityKind::Critical)
        throw DomainError(std::string(what) + " requires a critical model");
}
}  // namespace detail

/// sum_i <e_i, u_R> V_xi_i.
inline Mat2 mixed_variance(const GwiModel& model, double tol = kCriticalityTol) {
    detail::require_critical(model, tol, "mixed_variance");
    const Vec2 ur = model.spectral().u_right;
    return ur[0] * model.v_xi(0) + ur[1] * model.v_xi(1);
}

/// sum_i <e_i, v_R> V_xi_i, evaluated from the defining sum.
inline Mat2 tilde_variance(const GwiModel& model, double tol = kCriticalityTol) {
    detail::require_critical(model, tol, "tilde_variance");
    const Vec2 vr = model.spectral().v_right;
    return vr[0] * model.v_xi(0) + vr[1] * model.v_xi(1);
}

struct DegeneracyIndicators {
    double vbar_v = 0.0;          // <Vbar v_L, v_L>
    double vbar_u = 0.0;          // <Vbar u_L, u_L>
    double veps_v = 0.0;          // <V_eps v_L, v_L>
    double vl_meps = 0.0;         // <v_L, m_eps>
    double M = 0.0;               // <v_L,m_eps>^2/(1-lambda)^2 + <V_eps v_L,v_L>/(1-lambda^2)
    bool full_degenerate = false;  // no unique CLS estimator exists
};

inline DegeneracyIndicators degeneracy_indicators(const GwiModel& model,
                                                  double tol = kCriticalityTol) {
    const Mat2 vbar = mixed_variance(model, tol);
    const SpectralData s = model.spectral();
    const double lambda = s.lambda_minus;
    DegeneracyIndicators d;
    d.vbar_v = quad(vbar, s.v_left);
    d.vbar_u = quad(vbar, s.u_left);
    d.veps_v = quad(model.v_eps(), s.v_left);
    d.vl_meps = dot(s.v_left, model.m_eps());
    d.M = d.vl_meps * d.vl_meps / ((1.0 - lambda) * (1.0 - lambda)) +
          d.veps_v / (1.0 - lambda * lambda);
    d.full_degenerate = std::abs(d.vbar_v + d.veps_v + d.vl_meps * d.vl_meps) <= 1e-12;
    return d;
}

/// Offspring laws supported on the diagonal {(k, k)} whose means realize the
/// critical matrix with the given alpha and delta. Such laws put every offspring
/// vector on a line orthogonal to v_L, so <Vbar v_L, v_L> = 0.
///
/// The diagonal support forces gamma = alpha and beta = delta, which together with
/// criticality means alpha + delta = 1.
inline std::pair<FiniteLaw, FiniteLaw> make_degenerate_offspring(double alpha, double delta) {
    if (!(alpha > 0.0 && alpha < 1.0 && delta > 0.0 && delta < 1.0))
        throw DomainError("degenerate offspring needs alpha, delta in (0, 1)");
    if (std::abs(alpha + delta - 1.0) > 1e-12)
        throw DomainError(
            "diagonal-support offspring needs gamma = 1 - delta to equal alpha "
            "(alpha + delta = 1)");
    return {FiniteLaw({{{0, 0}, 1.0 - alpha}, {{1, 1}, alpha}}),
            FiniteLaw({{{0, 0}, 1.0 - delta}, {{1, 1}, delta}})};
}

/// Checks user-supplied laws against the diagonal-support construction.
inline void check_degenerate_offspring(double alpha, double delta, const FiniteLaw& offspring1,
                                       const FiniteLaw& offspring2) {
    const auto expected = make_degenerate_offspring(alpha, delta);
    const std::array<const FiniteLaw*, 2> given{&offspring1, &offspring2};
    const std::array<const FiniteLaw*, 2> want{&expected.first, &expected.second};
    for (std::size_t i = 0; i < 2; ++i) {
        for (const Atom& a : given[i]->atoms())
            if (a.point[0] != a.point[1])
                throw DomainError("degenerate offspring must be supported on the diagonal");
        const Vec2 mg = given[i]->mean();
        const Vec2 mw = want[i]->mean();
        if (std::abs(mg[0] - mw[0]) > 1e-12 || std::abs(mg[1] - mw[1]) > 1e-12)
            throw DomainError("degenerate offspring law mean does not match the requested matrix");
    }
}

/// (I - m)^{-1} m_eps.
inline Vec2 stationary_mean(const GwiModel& model) {
    if (model.criticality().kind != CriticalityKind::Subcritical)
        throw DomainError("stationary law exists only for subcritical models");
    return (Mat2::identity() - model.mean_raw()).inverse() * model.m_eps();
}

/// E[X X^T] under the stationary law, summing
/// sum_i m^i (E X_1 V_1 + E X_2 V_2 + V_eps) (m^T)^i + E X E X^T
/// until the increment drops below tol.
inline Mat2 stationary_second_moment(const GwiModel& model, double tol = 1e-12,
                                     long max_terms = 1'000'000) {
    const Vec2 mu = stationary_mean(model);
    const Mat2& m = model.mean_raw();
    const Mat2 mt = m.transpose();
    Mat2 term = mu[0] * model.v_xi(0) + mu[1] * model.v_xi(1) + model.v_eps();
    Mat2 sum = term;
    for (long i = 1; i < max_terms; ++i) {
        term = m * term * mt;
        sum += term;
        if (max_abs(term) < tol) return sum + Mat2::outer(mu, mu);
    }
    throw DomainError("stationary second moment series did not converge");
}

}  // namespace gwi
