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

// Subcommand implementations behind the `gwi` executable. Each command takes a
// validated RunConfig and returns the text of its primary output.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwi/error.hpp"
#include "gwi/estimate.hpp"
#include "gwi/io.hpp"
#include "gwi/laws.hpp"
#include "gwi/limit.hpp"
#include "gwi/mcharness.hpp"
#include "gwi/presets.hpp"
#include "gwi/simulate.hpp"

namespace gwi::cli {

using json = nlohmann::json;

struct RunConfig {
    std::optional<GwiModel> model;
    std::optional<Vec2> m_eps;  // estimate from a trajectory file without a model
    std::size_t n = 1000;
    std::size_t reps = 100;
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    double dt = kDefaultDt;
    int substeps = 1;
    int workers = 1;
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> trajectory;
    std::string statistic = "rho_critical";
    std::string check = "scaling";
    int ell = 2;
    std::vector<std::size_t> k_grid{100, 200, 400, 800};
    Counts state{2, 3};
    std::size_t draws = 100'000;
    std::int64_t population_cap = kDefaultPopulationCap;
    Sampler sampler = Sampler::Grouped;
    MxiScaling mxi_scaling = MxiScaling::OneMinusLambdaSquared;
    DegenerateNoise degenerate_noise = DegenerateNoise::SqrtY;
    bool report_runtime = true;
};

namespace detail {

template <class T>
T get_field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(key) + ": wrong type");
    }
}

inline std::size_t positive_size(const json& j, const char* key) {
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) throw ConfigError(std::string(key) + ": expected a positive integer");
    return v.get<std::size_t>();
}

inline std::uint64_t u64(const json& j, const char* key) {
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(std::string(key) + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

}  // namespace detail

/// Builds a RunConfig from a config JSON object. Unknown keys are rejected by name.
inline RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    static const std::vector<std::string> known{
        "model", "m_eps", "n", "reps", "seed", "replication", "dt", "substeps", "workers", "out", "trajectory",
        "statistic", "functional", "check", "ell", "k_grid", "state", "draws", "population_cap", "sampler",
        "mxi_scaling", "degenerate_noise", "report_runtime"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError(key + ": unknown field");
    RunConfig c;
    if (j.contains("model")) c.model = io::model_from_json(j.at("model"));
    if (j.contains("m_eps")) {
        const json& v = j.at("m_eps");
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError("m_eps: expected two numbers");
        c.m_eps = Vec2{v[0].get<double>(), v[1].get<double>()};
    }
    if (j.contains("n")) c.n = detail::positive_size(j, "n");
    if (j.contains("reps")) c.reps = detail::positive_size(j, "reps");
    if (j.contains("seed")) c.seed = detail::u64(j, "seed");
    if (j.contains("replication")) c.replication = detail::u64(j, "replication");
    if (j.contains("dt")) {
        c.dt = detail::get_field<double>(j, "dt");
        if (!(c.dt > 0.0 && c.dt <= 0.01)) throw ConfigError("dt: must lie in (0, 0.01]");
    }
    if (j.contains("substeps")) c.substeps = static_cast<int>(detail::positive_size(j, "substeps"));
    if (j.contains("workers")) c.workers = static_cast<int>(detail::positive_size(j, "workers"));
    if (j.contains("out")) c.out = detail::get_field<std::string>(j, "out");
    if (j.contains("trajectory")) c.trajectory = detail::get_field<std::string>(j, "trajectory");
    if (j.contains("statistic")) c.statistic = detail::get_field<std::string>(j, "statistic");
    if (j.contains("functional")) c.statistic = detail::get_field<std::string>(j, "functional");
    if (j.contains("check")) c.check = detail::get_field<std::string>(j, "check");
    if (j.contains("ell")) {
        c.ell = static_cast<int>(detail::positive_size(j, "ell"));
        if (c.ell > kMaxMomentOrder) throw ConfigError("ell: must be at most 8");
    }
    if (j.contains("k_grid")) {
        const json& v = j.at("k_grid");
        if (!v.is_array() || v.empty()) throw ConfigError("k_grid: expected a nonempty array");
        c.k_grid.clear();
        for (const auto& e : v) {
            if (!e.is_number_integer() || e.get<std::int64_t>() < 1) throw ConfigError("k_grid: entries must be positive integers");
            c.k_grid.push_back(e.get<std::size_t>());
        }
    }
    if (j.contains("state")) {
        const json& v = j.at("state");
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer() ||
            v[0].get<std::int64_t>() < 0 || v[1].get<std::int64_t>() < 0)
            throw ConfigError("state: expected two nonnegative integers");
        c.state = {v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
    }
    if (j.contains("draws")) c.draws = detail::positive_size(j, "draws");
    if (j.contains("population_cap")) c.population_cap = static_cast<std::int64_t>(detail::positive_size(j, "population_cap"));
    if (j.contains("sampler")) {
        const auto s = detail::get_field<std::string>(j, "sampler");
        if (s == "grouped")
            c.sampler = Sampler::Grouped;
        else if (s == "per_individual")
            c.sampler = Sampler::PerIndividual;
        else
            throw ConfigError("sampler: expected grouped or per_individual");
    }
    if (j.contains("mxi_scaling")) {
        const auto s = detail::get_field<std::string>(j, "mxi_scaling");
        if (s == "one_minus_lambda_squared")
            c.mxi_scaling = MxiScaling::OneMinusLambdaSquared;
        else if (s == "one_minus_lambda")
            c.mxi_scaling = MxiScaling::OneMinusLambda;
        else
            throw ConfigError("mxi_scaling: expected one_minus_lambda_squared or one_minus_lambda");
    }
    if (j.contains("degenerate_noise")) {
        const auto s = detail::get_field<std::string>(j, "degenerate_noise");
        if (s == "sqrt_y")
            c.degenerate_noise = DegenerateNoise::SqrtY;
        else if (s == "y")
            c.degenerate_noise = DegenerateNoise::LinearY;
        else
            throw ConfigError("degenerate_noise: expected sqrt_y or y");
    }
    if (j.contains("report_runtime")) c.report_runtime = detail::get_field<bool>(j, "report_runtime");
    return c;
}

namespace detail {

inline const GwiModel& require_model(const RunConfig& c) {
    if (!c.model) throw ConfigError("model: missing");
    return *c.model;
}

inline EstimatorStatistic parse_statistic(const std::string& s) {
    for (auto v : {EstimatorStatistic::RhoCritical, EstimatorStatistic::MxiProjection, EstimatorStatistic::MxiEntry,
                   EstimatorStatistic::MxiDegenerateProjection, EstimatorStatistic::MxiDegenerateEntry,
                   EstimatorStatistic::RhoSubcritical, EstimatorStatistic::MxiSubcriticalEntry})
        if (to_string(v) == s) return v;
    throw ConfigError("statistic: unknown statistic '" + s + "'");
}

inline LimitFunctional parse_functional(const std::string& s) {
    for (auto v : {LimitFunctional::Rho, LimitFunctional::MxiProjection, LimitFunctional::MxiEntry,
                   LimitFunctional::MxiDegenerateProjection, LimitFunctional::MxiDegenerateEntry})
        if (to_string(v) == s) return v;
    throw ConfigError("functional: unknown functional '" + s + "'");
}

inline LimitConstants constants_for(const RunConfig& c) {
    const GwiModel& m = require_model(c);
    if (m.criticality().kind != CriticalityKind::Critical) throw ConfigError("model: limit sampling needs a critical model");
    LimitConstants k = limit_constants(m);
    k.mxi_scaling = c.mxi_scaling;
    k.degenerate_noise = c.degenerate_noise;
    return k;
}

inline McConfig mc_config(const RunConfig& c) {
    McConfig mc;
    mc.reps = c.reps;
    mc.n = c.n;
    mc.seed = c.seed;
    mc.dt = c.dt;
    mc.substeps = c.substeps;
    mc.workers = c.workers;
    return mc;
}

inline json mat_json(const Mat2& m) { return json::array({{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}); }
inline json vec_json(Vec2 v) { return json::array({v[0], v[1]}); }

}  // namespace detail

inline std::string cmd_simulate(const RunConfig& c) {
    SimOptions opt;
    opt.replication = c.replication;
    opt.population_cap = c.population_cap;
    opt.sampler = c.sampler;
    return io::trajectory_csv(simulate_gwi(detail::require_model(c), c.n, c.seed, opt));
}

inline std::string cmd_estimate(const RunConfig& c) {
    std::string out = io::kEstimateCsvHeader;
    if (c.trajectory) {
        std::ifstream in(*c.trajectory);
        if (!in) throw ConfigError("trajectory: cannot open " + c.trajectory->string());
        const Trajectory traj = io::read_trajectory_csv(in, "trajectory");
        Vec2 m_eps;
        if (c.m_eps)
            m_eps = *c.m_eps;
        else
            m_eps = detail::require_model(c).m_eps();
        out += io::estimate_csv_row(traj.length(), c.seed, estimate_cls(traj, m_eps));
        return out;
    }
    const GwiModel& model = detail::require_model(c);
    McConfig mc = detail::mc_config(c);
    mc.validate_for_estimator();
    const auto rows = parallel_replications(c.reps, c.workers, [&](std::size_t r) {
        SimOptions opt;
        opt.replication = r;
        opt.population_cap = c.population_cap;
        opt.sampler = c.sampler;
        return estimate_cls(simulate_gwi(model, c.n, c.seed, opt), model.m_eps());
    });
    for (const ClsEstimate& e : rows) out += io::estimate_csv_row(c.n, c.seed, e);
    return out;
}

inline std::string cmd_limit_sample(const RunConfig& c) {
    const LimitFunctional f = detail::parse_functional(c.statistic);
    const LimitSamples s = limit_samples(detail::constants_for(c), detail::mc_config(c), f);
    return io::limit_csv(c.seed, to_string(f), s.values);
}

inline std::string cmd_mc_compare(const RunConfig& c) {
    const EstimatorStatistic s = detail::parse_statistic(c.statistic);
    if (!matching_functional(s)) throw ConfigError("statistic: '" + c.statistic + "' has no limit counterpart");
    const ComparisonReport r = mc_compare(detail::require_model(c), detail::mc_config(c), s, detail::constants_for(c));
    return io::report_json(r, c.report_runtime).dump(2) + "\n";
}

inline std::string cmd_moments_check(const RunConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    const GwiModel& model = detail::require_model(c);
    json j;
    j["check"] = c.check;
    if (c.check == "scaling") {
        const MomentScalingReport r = moment_scaling_check(model, c.ell, c.k_grid, c.reps, c.seed, c.workers);
        j["ell"] = r.ell;
        j["reps"] = c.reps;
        j["critical"] = r.critical;
        json rows = json::array();
        for (const auto& row : r.rows) {
            json o = {{"k", row.k}, {"x_norm", row.x_norm}};
            if (r.has_uv) {
                o["u"] = row.u;
                o["v"] = row.v;
                o["v_raw"] = row.v_raw;
            }
            rows.push_back(o);
        }
        j["rows"] = rows;
        j["ratio_x"] = r.ratio_x;
        if (r.has_uv) {
            j["ratio_u"] = r.ratio_u;
            j["ratio_v"] = r.ratio_v;
            j["ratio_v_raw"] = r.ratio_v_raw;
        }
    } else if (c.check == "conditional_variance") {
        const ConditionalVarianceReport r = conditional_variance_check(model, c.state, c.draws, c.seed, c.sampler);
        j["state"] = {c.state[0], c.state[1]};
        j["reps"] = r.reps;
        j["empirical"] = detail::mat_json(r.empirical);
        j["target"] = detail::mat_json(r.target);
        j["max_z"] = r.max_z;
        if (r.target_uv) {
            j["target_uv"] = detail::mat_json(*r.target_uv);
            j["max_z_uv"] = r.max_z_uv;
        }
    } else if (c.check == "third_moment") {
        const ThirdMomentReport r = third_moment_check(model, c.state, c.draws, c.seed, c.sampler);
        j["state"] = {c.state[0], c.state[1]};
        j["reps"] = r.reps;
        j["empirical"] = r.empirical;
        j["target"] = r.target;
        j["max_z"] = r.max_z;
    } else if (c.check == "sllna") {
        const SllnReport r = sllna_check(model, c.n, c.seed, c.replication);
        j["n"] = r.n;
        j["time_average"] = detail::mat_json(r.time_average);
        j["stationary"] = detail::mat_json(r.stationary);
        j["relative_error"] = r.relative_error;
    } else {
        throw ConfigError("check: expected scaling, conditional_variance, third_moment or sllna");
    }
    if (c.report_runtime)
        j["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return j.dump(2) + "\n";
}

inline std::string cmd_validate_laws(const RunConfig& c) {
    const GwiModel& model = detail::require_model(c);
    json j;
    j["offspring_mean"] = detail::mat_json(model.mean_raw());
    j["immigration_mean"] = detail::vec_json(model.m_eps());
    j["v_xi1"] = detail::mat_json(model.v_xi(0));
    j["v_xi2"] = detail::mat_json(model.v_xi(1));
    j["v_eps"] = detail::mat_json(model.v_eps());
    j["positively_regular"] = model.positively_regular();
    const Criticality crit = model.criticality();
    j["rho"] = crit.rho;
    j["criticality"] = std::string(to_string(crit.kind));
    if (model.positively_regular() && crit.kind == CriticalityKind::Critical) {
        j["vbar"] = detail::mat_json(mixed_variance(model));
        j["vtilde"] = detail::mat_json(tilde_variance(model));
        const DegeneracyIndicators d = degeneracy_indicators(model);
        j["degeneracy"] = {{"vbar_v", d.vbar_v},   {"vbar_u", d.vbar_u},   {"veps_v", d.veps_v},
                           {"vl_meps", d.vl_meps}, {"M", d.M},             {"full_degenerate", d.full_degenerate}};
        j["unique_cls_estimator"] = !d.full_degenerate;
        if (d.full_degenerate) j["warning"] = "there is no unique CLS estimator";
    }
    return j.dump(2) + "\n";
}

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> s{"simulate", "estimate", "limit-sample", "mc-compare", "moments-check",
                                            "validate-laws"};
    return s;
}

inline std::string dispatch(const std::string& sub, const RunConfig& c) {
    try {
        if (sub == "simulate") return cmd_simulate(c);
        if (sub == "estimate") return cmd_estimate(c);
        if (sub == "limit-sample") return cmd_limit_sample(c);
        if (sub == "mc-compare") return cmd_mc_compare(c);
        if (sub == "moments-check") return cmd_moments_check(c);
        if (sub == "validate-laws") return cmd_validate_laws(c);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    throw ConfigError("unknown subcommand '" + sub + "'");
}

}  // namespace gwi::cli
