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

// Closed-form spectral algebra of a positively regular 2x2 offspring mean matrix.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "gwi/error.hpp"
#include "gwi/linalg.hpp"

namespace gwi {

inline constexpr double kCriticalityTol = 1e-9;
inline constexpr long kMaxMatrixPower = 1'000'000;

/// Offspring mean matrix [[alpha, beta], [gamma, delta]]. Column i is the mean
/// offspring vector of a type-i individual.
class MeanMatrix {
public:
    MeanMatrix(double alpha, double beta, double gamma, double delta)
        : alpha_(alpha), beta_(beta), gamma_(gamma), delta_(delta) {
        if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma) ||
            !std::isfinite(delta))
            throw DomainError("mean matrix entries must be finite");
        if (!(beta > 0.0 && gamma > 0.0))
            throw DomainError("mean matrix is not positively regular: need beta > 0 and gamma > 0");
        if (alpha < 0.0 || delta < 0.0)
            throw DomainError("mean matrix entries must be nonnegative");
        if (!(alpha + delta > 0.0))
            throw DomainError("mean matrix is not positively regular: need alpha + delta > 0");
    }

    explicit MeanMatrix(const Mat2& m) : MeanMatrix(m(0, 0), m(0, 1), m(1, 0), m(1, 1)) {}

    /// Exactly critical matrix: gamma is derived as (1-alpha)(1-delta)/beta.
    static MeanMatrix critical(double alpha, double delta, double beta) {
        if (!(alpha >= 0.0 && alpha < 1.0 && delta >= 0.0 && delta < 1.0))
            throw DomainError("critical construction needs alpha, delta in [0, 1)");
        if (!(beta > 0.0)) throw DomainError("critical construction needs beta > 0");
        return {alpha, beta, (1.0 - alpha) * (1.0 - delta) / beta, delta};
    }

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double gamma() const { return gamma_; }
    double delta() const { return delta_; }

    Mat2 matrix() const { return {alpha_, beta_, gamma_, delta_}; }

    /// (alpha - delta)^2 + 4 beta gamma, strictly positive here.
    double discriminant() const {
        return (alpha_ - delta_) * (alpha_ - delta_) + 4.0 * beta_ * gamma_;
    }

private:
    double alpha_, beta_, gamma_, delta_;
};

struct SpectralData {
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
    Vec2 u_right;  // Perron vector, coordinates sum to 1
    Vec2 u_left;   // <u_right, u_left> = 1
    Vec2 v_right;
    Vec2 v_left;
};

enum class CriticalityKind { Subcritical, Critical, Supercritical };

inline std::string_view to_string(CriticalityKind k) {
    switch (k) {
        case CriticalityKind::Subcritical: return "Subcritical";
        case CriticalityKind::Critical: return "Critical";
        case CriticalityKind::Supercritical: return "Supercritical";
    }
    return "unknown";
}

struct Criticality {
    CriticalityKind kind;
    double rho;
    /// beta*gamma == (1-alpha)(1-delta) within the tolerance.
    bool critical_identity;
};

inline double spectral_radius(const MeanMatrix& m) {
    return 0.5 * (m.alpha() + m.delta() + std::sqrt(m.discriminant()));
}

inline SpectralData eigen_decompose(const MeanMatrix& m) {
    const double a = m.alpha(), b = m.beta(), g = m.gamma(), d = m.delta();
    const double root = std::sqrt(m.discriminant());
    SpectralData s;
    s.lambda_plus = 0.5 * (a + d + root);
    s.lambda_minus = 0.5 * (a + d - root);
    const double lp = s.lambda_plus;
    const double gap = s.lambda_plus - s.lambda_minus;
    const double ur_norm = b + lp - a;
    s.u_right = (1.0 / ur_norm) * Vec2{b, lp - a};
    s.u_left = (1.0 / gap) * Vec2{g + lp - d, b + lp - a};
    s.v_right = (1.0 / gap) * Vec2{-b - lp + a, g + lp - d};
    s.v_left = (1.0 / ur_norm) * Vec2{-lp + a, b};
    return s;
}

/// m^k = lambda_+^k u_R u_L^T + lambda_-^k v_R v_L^T.
inline Mat2 matrix_power_putzer(const MeanMatrix& m, long k) {
    if (k < 0) throw DomainError("matrix power needs k >= 0");
    if (k > kMaxMatrixPower) throw DomainError("matrix power exponent too large");
    if (k == 0) return Mat2::identity();
    const SpectralData s = eigen_decompose(m);
    const double pk = std::pow(s.lambda_plus, static_cast<double>(k));
    const double mk = std::pow(s.lambda_minus, static_cast<double>(k));
    return pk * Mat2::outer(s.u_right, s.u_left) + mk * Mat2::outer(s.v_right, s.v_left);
}

/// Spectral radius of an arbitrary nonnegative 2x2 matrix, positively regular or not.
inline double spectral_radius(const Mat2& m) {
    const double diff = m(0, 0) - m(1, 1);
    const double disc = std::max(0.0, diff * diff + 4.0 * m(0, 1) * m(1, 0));
    return std::max(std::abs(0.5 * (m.trace() + std::sqrt(disc))), std::abs(0.5 * (m.trace() - std::sqrt(disc))));
}

inline Criticality classify(const Mat2& m, double tol = kCriticalityTol) {
    if (tol < 0.0) throw DomainError("classification tolerance must be nonnegative");
    const double rho = spectral_radius(m);
    CriticalityKind kind = CriticalityKind::Critical;
    if (rho < 1.0 - tol)
        kind = CriticalityKind::Subcritical;
    else if (rho > 1.0 + tol)
        kind = CriticalityKind::Supercritical;
    const double gap = m(0, 1) * m(1, 0) - (1.0 - m(0, 0)) * (1.0 - m(1, 1));
    return {kind, rho, std::abs(gap) <= tol};
}

inline Criticality classify(const MeanMatrix& m, double tol = kCriticalityTol) {
    return classify(m.matrix(), tol);
}

/// Transposed gradient of the spectral radius: R(i,j) = d rho / d m(j,i), so that
/// the first-order change of rho under a perturbation Z is Tr(R Z).
inline Mat2 grad_spectral_radius(const MeanMatrix& m) {
    const double root = std::sqrt(m.discriminant());
    const double a = m.alpha(), b = m.beta(), g = m.gamma(), d = m.delta();
    const double s = 0.5 / root;
    return 0.5 * Mat2::identity() + s * Mat2{a - d, 2.0 * b, 2.0 * g, d - a};
}

}  // namespace gwi
