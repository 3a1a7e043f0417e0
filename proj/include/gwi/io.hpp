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

// JSON law/model ingestion, CSV emission and atomic file output.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "gwi/error.hpp"
#include "gwi/estimate.hpp"
#include "gwi/laws.hpp"
#include "gwi/mcharness.hpp"
#include "gwi/presets.hpp"
#include "gwi/simulate.hpp"

namespace gwi::io {

using json = nlohmann::json;

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

/// {"atoms": [{"x": [i, j], "p": r}, ...]}
inline FiniteLaw law_from_json(const json& j, const std::string& field) {
    if (!j.is_object()) throw ConfigError(field + ": law must be an object");
    for (const auto& [key, _] : j.items())
        if (key != "atoms") throw ConfigError(field + "." + key + ": unknown field");
    if (!j.contains("atoms") || !j.at("atoms").is_array() || j.at("atoms").empty())
        throw ConfigError(field + ".atoms: expected a nonempty array");
    std::vector<Atom> atoms;
    std::size_t idx = 0;
    for (const auto& a : j.at("atoms")) {
        const std::string where = field + ".atoms[" + std::to_string(idx++) + "]";
        if (!a.is_object()) throw ConfigError(where + ": atom must be an object");
        for (const auto& [key, _] : a.items())
            if (key != "x" && key != "p") throw ConfigError(where + "." + key + ": unknown field");
        if (!a.contains("x") || !a.at("x").is_array() || a.at("x").size() != 2 || !a.at("x")[0].is_number_integer() ||
            !a.at("x")[1].is_number_integer())
            throw ConfigError(where + ".x: expected two integers");
        if (!a.contains("p") || !a.at("p").is_number()) throw ConfigError(where + ".p: expected a number");
        atoms.push_back({{a.at("x")[0].get<std::int64_t>(), a.at("x")[1].get<std::int64_t>()}, a.at("p").get<double>()});
    }
    try {
        return FiniteLaw(std::move(atoms));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

inline json law_to_json(const FiniteLaw& law) {
    json atoms = json::array();
    for (const Atom& a : law.atoms()) atoms.push_back({{"x", {a.point[0], a.point[1]}}, {"p", a.prob}});
    return {{"atoms", atoms}};
}

/// A preset name, {"preset": name}, or {"offspring1", "offspring2", "immigration"}.
inline GwiModel model_from_json(const json& j, const std::string& field = "model") {
    std::optional<std::string> preset;
    if (j.is_string()) {
        preset = j.get<std::string>();
    } else if (j.is_object() && j.contains("preset")) {
        if (j.size() != 1) throw ConfigError(field + ": a preset cannot be combined with other fields");
        if (!j.at("preset").is_string()) throw ConfigError(field + ".preset: expected a string");
        preset = j.at("preset").get<std::string>();
    }
    if (preset) {
        if (auto m = presets::by_name(*preset)) return *m;
        throw ConfigError(field + ": unknown preset '" + *preset + "'");
    }
    if (!j.is_object()) throw ConfigError(field + ": expected a preset name or an object of three laws");
    for (const auto& [key, _] : j.items())
        if (key != "offspring1" && key != "offspring2" && key != "immigration")
            throw ConfigError(field + "." + key + ": unknown field");
    for (const char* key : {"offspring1", "offspring2", "immigration"})
        if (!j.contains(key)) throw ConfigError(field + "." + key + ": missing");
    FiniteLaw l1 = law_from_json(j.at("offspring1"), field + ".offspring1");
    FiniteLaw l2 = law_from_json(j.at("offspring2"), field + ".offspring2");
    FiniteLaw le = law_from_json(j.at("immigration"), field + ".immigration");
    try {
        return GwiModel(std::move(l1), std::move(l2), std::move(le));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

inline json model_to_json(const GwiModel& m) {
    return {{"offspring1", law_to_json(m.offspring(0))},
            {"offspring2", law_to_json(m.offspring(1))},
            {"immigration", law_to_json(m.immigration())}};
}

inline std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "k,x1,x2\n";
    for (std::size_t k = 0; k < traj.states.size(); ++k)
        out += std::to_string(k) + "," + std::to_string(traj.states[k][0]) + "," + std::to_string(traj.states[k][1]) +
               "\n";
    return out;
}

/// Parses `k,x1,x2` rows; k must run 0, 1, 2, ... and X_0 must be 0.
inline Trajectory read_trajectory_csv(std::istream& in, const std::string& name = "trajectory") {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(name + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "k,x1,x2") throw ConfigError(name + ": header must be k,x1,x2");
    Trajectory traj;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::int64_t v[3];
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int c = 0; c < 3; ++c) {
            const auto r = std::from_chars(p, end, v[c]);
            if (r.ec != std::errc{}) throw ConfigError(name + ": malformed row " + std::to_string(row + 1));
            p = r.ptr;
            if (c < 2) {
                if (p == end || *p != ',') throw ConfigError(name + ": malformed row " + std::to_string(row + 1));
                ++p;
            }
        }
        if (p != end) throw ConfigError(name + ": malformed row " + std::to_string(row + 1));
        if (v[0] != static_cast<std::int64_t>(row))
            throw ConfigError(name + ": generation index out of sequence at row " + std::to_string(row + 1));
        if (v[1] < 0 || v[2] < 0) throw ConfigError(name + ": negative count at row " + std::to_string(row + 1));
        traj.states.emplace_back(v[1], v[2]);
        ++row;
    }
    if (traj.states.size() < 2) throw ConfigError(name + ": need at least X_0 and X_1");
    if (traj.states.front() != Counts{0, 0}) throw ConfigError(name + ": X_0 must be (0,0)");
    return traj;
}

inline constexpr const char* kEstimateCsvHeader = "n,seed,exists,disc_ok,a11,a12,a21,a22,rho_hat,det_A\n";

/// One estimate row; absent estimates leave their fields empty with exists=0.
inline std::string estimate_csv_row(std::size_t n, std::uint64_t seed, const ClsEstimate& est) {
    std::string row = std::to_string(n) + "," + std::to_string(seed) + "," + (est.m_hat ? "1" : "0") + "," +
                      (est.on_omega_tilde_n ? "1" : "0") + ",";
    for (std::size_t i = 0; i < 4; ++i) {
        if (est.m_hat) row += format_double((*est.m_hat)(i / 2, i % 2));
        row += ",";
    }
    if (est.rho_hat) row += format_double(*est.rho_hat);
    row += "," + format_double(est.det_A) + "\n";
    return row;
}

inline std::string limit_csv(std::uint64_t seed, std::string_view functional,
                             const std::vector<std::optional<double>>& values) {
    std::string out = "seed,functional,value\n";
    for (const auto& v : values)
        out += std::to_string(seed) + "," + std::string(functional) + "," + (v ? format_double(*v) : "") + "\n";
    return out;
}

inline json quantiles_json(const std::array<double, 7>& q) {
    json o = json::object();
    const char* names[7] = {"q01", "q05", "q25", "q50", "q75", "q95", "q99"};
    for (std::size_t i = 0; i < 7; ++i) o[names[i]] = q[i];
    return o;
}

/// {statistic, reps, failures, ks, quantiles, runtime_seconds}
inline json report_json(const ComparisonReport& r, bool include_runtime = true) {
    json j = {{"statistic", r.statistic},
              {"reps", r.reps},
              {"failures", {{"estimator", r.failures_estimator}, {"limit", r.failures_limit}}},
              {"limit_resamples", r.resamples_limit},
              {"ks", r.ks},
              {"quantiles", {{"estimator", quantiles_json(r.quantiles_estimator)}, {"limit", quantiles_json(r.quantiles_limit)}}}};
    if (include_runtime) j["runtime_seconds"] = r.runtime_seconds;
    return j;
}

/// Writes through a temporary sibling and renames it into place, so a failed
/// run leaves no partial file behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ResourceError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw ResourceError("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ResourceError("cannot move output into place at " + path.string());
    }
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
}

}  // namespace gwi::io
