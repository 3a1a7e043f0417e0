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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gwi/laws.hpp"

namespace gwi::presets {

/// Critical, symmetric: m = [[0.3, 0.7], [0.7, 0.3]]. A type-1 individual has a
/// type-1 child with probability 0.3 and, independently, a type-2 child with
/// probability 0.7; type 2 mirrors this. Immigration is uniform on {0,1}^2.
inline GwiModel modelA() {
    return GwiModel(FiniteLaw({{{0, 0}, 0.21}, {{1, 0}, 0.09}, {{0, 1}, 0.49}, {{1, 1}, 0.21}}),
                    FiniteLaw({{{0, 0}, 0.21}, {{1, 0}, 0.49}, {{0, 1}, 0.09}, {{1, 1}, 0.21}}),
                    FiniteLaw({{{0, 0}, 0.25}, {{1, 0}, 0.25}, {{0, 1}, 0.25}, {{1, 1}, 0.25}}));
}

/// Subcritical, rho = 0.5: m = [[0.2, 0.3], [0.3, 0.2]] with independent
/// Bernoulli children, and immigration uniform on {0,2}^2 so V_eps = I.
inline GwiModel modelC() {
    return GwiModel(FiniteLaw({{{0, 0}, 0.56}, {{1, 0}, 0.14}, {{0, 1}, 0.24}, {{1, 1}, 0.06}}),
                    FiniteLaw({{{0, 0}, 0.56}, {{1, 0}, 0.24}, {{0, 1}, 0.14}, {{1, 1}, 0.06}}),
                    FiniteLaw({{{0, 0}, 0.25}, {{2, 0}, 0.25}, {{0, 2}, 0.25}, {{2, 2}, 0.25}}));
}

/// Degenerate critical: both offspring laws are {(0,0): 1/2, (1,1): 1/2}, so
/// m = [[0.5, 0.5], [0.5, 0.5]] and every offspring vector is diagonal.
/// Immigration is {(1,0): 1/2, (0,1): 1/2}.
inline GwiModel modelD() {
    const FiniteLaw diag({{{0, 0}, 0.5}, {{1, 1}, 0.5}});
    return GwiModel(diag, diag, FiniteLaw({{{1, 0}, 0.5}, {{0, 1}, 0.5}}));
}

/// Model D offspring with immigration fixed at (1,1); the path never leaves
/// the diagonal and no unique CLS estimator exists.
inline GwiModel modelD_deterministic_immigration() {
    const FiniteLaw diag({{{0, 0}, 0.5}, {{1, 1}, 0.5}});
    return GwiModel(diag, diag, FiniteLaw::point_mass({1, 1}));
}

inline const std::vector<std::string>& names() {
    static const std::vector<std::string> n{"modelA", "modelC", "modelD", "modelD_deterministic_immigration"};
    return n;
}

inline std::optional<GwiModel> by_name(std::string_view name) {
    if (name == "modelA") return modelA();
    if (name == "modelC") return modelC();
    if (name == "modelD") return modelD();
    if (name == "modelD_deterministic_immigration") return modelD_deterministic_immigration();
    return std::nullopt;
}

}  // namespace gwi::presets
