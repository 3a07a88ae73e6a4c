#pragma once

// Campaign checkpoint document. Doubles are written as shortest round-trip
// decimals (NaN as null), so parse(serialize(state)) reproduces every field.

#include "coilopt/design_space.hpp"
#include "coilopt/errors.hpp"
#include "coilopt/mfbo/state.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace coilopt::io {

using Json = nlohmann::json;
// Keys keep insertion order so documents diff cleanly.
using OrderedJson = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

class SchemaError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

namespace detail {

inline OrderedJson number(double v) { return std::isnan(v) ? OrderedJson(nullptr) : OrderedJson(v); }

inline double number_of(const OrderedJson& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!j.is_number()) throw SchemaError("expected a number, got " + j.dump());
    return j.get<double>();
}

inline OrderedJson vec(const Eigen::VectorXd& v) {
    OrderedJson a = OrderedJson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
    return a;
}

inline OrderedJson vec(const std::vector<double>& v) {
    OrderedJson a = OrderedJson::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

inline Eigen::VectorXd eigen_of(const OrderedJson& j) {
    if (!j.is_array()) throw SchemaError("expected an array, got " + j.dump());
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number_of(j[i]);
    return v;
}

inline std::vector<double> doubles_of(const OrderedJson& j) {
    if (!j.is_array()) throw SchemaError("expected an array, got " + j.dump());
    std::vector<double> v;
    for (const auto& x : j) v.push_back(number_of(x));
    return v;
}

inline const OrderedJson& at(const OrderedJson& j, const char* key) {
    if (!j.is_object()) throw SchemaError(std::string("expected an object holding '") + key + "'");
    const auto it = j.find(key);
    if (it == j.end()) throw SchemaError(std::string("missing field '") + key + "'");
    return *it;
}

template <class T>
T get(const OrderedJson& j, const char* key) {
    try {
        return at(j, key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("field '") + key + "': " + e.what());
    }
}

inline OrderedJson fidelity(const flow::FidelityVector& z) { return OrderedJson::array({z.axial, z.radial}); }

inline flow::FidelityVector fidelity_of(const OrderedJson& j) {
    if (!j.is_array() || j.size() != 2) throw SchemaError("fidelity must be [axial, radial]");
    return {number_of(j[0]), number_of(j[1])};
}

}  // namespace detail

inline OrderedJson to_json(const geometry::NominalCoil& c) {
    return {{"pitch", c.pitch},         {"coil_radius", c.coil_radius}, {"turns", c.turns},
            {"tube_radius", c.tube_radius}, {"n_c", c.n_c},               {"n_l", c.n_l},
            {"n_p", c.n_p},             {"radius_lo", c.radius_lo},     {"radius_hi", c.radius_hi},
            {"delta_rho_max", c.delta_rho_max}, {"delta_z_max", c.delta_z_max}};
}

inline geometry::NominalCoil coil_from_json(const OrderedJson& j) {
    using detail::get;
    geometry::NominalCoil c;
    c.pitch = get<double>(j, "pitch");
    c.coil_radius = get<double>(j, "coil_radius");
    c.turns = get<int>(j, "turns");
    c.tube_radius = get<double>(j, "tube_radius");
    c.n_c = get<int>(j, "n_c");
    c.n_l = get<int>(j, "n_l");
    c.n_p = get<int>(j, "n_p");
    c.radius_lo = get<double>(j, "radius_lo");
    c.radius_hi = get<double>(j, "radius_hi");
    c.delta_rho_max = get<double>(j, "delta_rho_max");
    c.delta_z_max = get<double>(j, "delta_z_max");
    return c;
}

inline OrderedJson to_json(const geometry::PathParams& p) {
    return {{"delta_rho", detail::vec(p.delta_rho)}, {"delta_z", detail::vec(p.delta_z)}};
}

inline geometry::PathParams path_from_json(const OrderedJson& j) {
    return {detail::doubles_of(detail::at(j, "delta_rho")), detail::doubles_of(detail::at(j, "delta_z"))};
}

inline OrderedJson to_json(const DesignSpace& s) {
    return {{"parameterisation", to_string(s.kind)},
            {"coil", to_json(s.coil)},
            {"fixed_path", to_json(s.fixed_path)},
            {"fidelity", {{"lo", detail::fidelity(s.fidelity.lo)}, {"hi", detail::fidelity(s.fidelity.hi)}}},
            {"labels", s.labels},
            {"x_lo", detail::vec(s.x_lo)},
            {"x_hi", detail::vec(s.x_hi)}};
}

inline DesignSpace space_from_json(const OrderedJson& j) {
    DesignSpace s;
    s.kind = parameterisation_from_string(detail::get<std::string>(j, "parameterisation"));
    s.coil = coil_from_json(detail::at(j, "coil"));
    s.fixed_path = path_from_json(detail::at(j, "fixed_path"));
    const auto& f = detail::at(j, "fidelity");
    s.fidelity.lo = detail::fidelity_of(detail::at(f, "lo"));
    s.fidelity.hi = detail::fidelity_of(detail::at(f, "hi"));
    s.labels = detail::get<std::vector<std::string>>(j, "labels");
    s.x_lo = detail::eigen_of(detail::at(j, "x_lo"));
    s.x_hi = detail::eigen_of(detail::at(j, "x_hi"));
    s.validate();
    return s;
}

inline OrderedJson to_json(const mfbo::CampaignConfig& c) {
    return {{"beta", c.beta},
            {"p_c", c.p_c},
            {"epsilon_gamma", c.epsilon_gamma},
            {"doe_size", c.doe_size},
            {"acquisition_starts", c.acquisition_starts},
            {"polish_starts", c.polish_starts},
            {"max_iterations", c.max_iterations},
            {"fit_restarts", c.fit_restarts},
            {"fit_max_iterations", c.fit_max_iterations},
            {"failure_cost", c.failure_cost},
            {"failure_window", c.failure_window},
            {"keep_raw", c.keep_raw}};
}

inline mfbo::CampaignConfig config_from_json(const OrderedJson& j) {
    using detail::get;
    mfbo::CampaignConfig c;
    c.beta = get<double>(j, "beta");
    c.p_c = get<double>(j, "p_c");
    c.epsilon_gamma = get<double>(j, "epsilon_gamma");
    c.doe_size = get<int>(j, "doe_size");
    c.acquisition_starts = get<int>(j, "acquisition_starts");
    c.polish_starts = get<int>(j, "polish_starts");
    c.max_iterations = get<int>(j, "max_iterations");
    c.fit_restarts = get<int>(j, "fit_restarts");
    c.fit_max_iterations = get<int>(j, "fit_max_iterations");
    c.failure_cost = get<double>(j, "failure_cost");
    c.failure_window = get<int>(j, "failure_window");
    c.keep_raw = get<bool>(j, "keep_raw");
    return c;
}

inline OrderedJson to_json(const rtd::RTDCurve& c) { return {{"theta", detail::vec(c.theta)}, {"e", detail::vec(c.e)}}; }

inline rtd::RTDCurve curve_from_json(const OrderedJson& j) {
    return {detail::doubles_of(detail::at(j, "theta")), detail::doubles_of(detail::at(j, "e"))};
}

inline OrderedJson to_json(const mfbo::Evaluation& e) {
    OrderedJson j = {{"index", e.index},
                     {"iteration", e.iteration},
                     {"stage", mfbo::to_string(e.stage)},
                     {"x", detail::vec(e.x)},
                     {"z_requested", detail::fidelity(e.z_requested)},
                     {"z_rounded", detail::fidelity(e.z)},
                     {"ok", e.ok},
                     {"error", e.error},
                     {"f", detail::number(e.f)},
                     {"n_star", detail::number(e.n_star)},
                     {"mse", detail::number(e.mse)},
                     {"cost", e.cost},
                     {"seed", e.seed},
                     {"wall_clock_stamp", e.wall_clock_stamp},
                     {"rtd_digest", e.rtd_digest},
                     {"rtd", to_json(e.rtd)}};
    if (e.raw)
        j["raw"] = {{"time", detail::vec(e.raw->time)}, {"concentration", detail::vec(e.raw->concentration)}};
    return j;
}

inline mfbo::Evaluation evaluation_from_json(const OrderedJson& j) {
    using detail::get;
    mfbo::Evaluation e;
    e.index = get<int>(j, "index");
    e.iteration = get<int>(j, "iteration");
    e.stage = mfbo::stage_from_string(get<std::string>(j, "stage"));
    e.x = detail::eigen_of(detail::at(j, "x"));
    e.z_requested = detail::fidelity_of(detail::at(j, "z_requested"));
    e.z = detail::fidelity_of(detail::at(j, "z_rounded"));
    if (e.z != e.z.rounded()) throw SchemaError("evaluation " + std::to_string(e.index) + ": z_rounded is not integral");
    e.ok = get<bool>(j, "ok");
    e.error = get<std::string>(j, "error");
    e.f = detail::number_of(detail::at(j, "f"));
    e.n_star = detail::number_of(detail::at(j, "n_star"));
    e.mse = detail::number_of(detail::at(j, "mse"));
    e.cost = get<double>(j, "cost");
    if (!(e.cost > 0.0)) throw SchemaError("evaluation " + std::to_string(e.index) + ": cost must be positive");
    if (e.ok && !std::isfinite(e.f)) throw SchemaError("evaluation " + std::to_string(e.index) + ": ok but f not finite");
    e.seed = get<std::uint64_t>(j, "seed");
    e.wall_clock_stamp = get<double>(j, "wall_clock_stamp");
    e.rtd_digest = get<std::string>(j, "rtd_digest");
    e.rtd = curve_from_json(detail::at(j, "rtd"));
    if (const auto it = j.find("raw"); it != j.end())
        e.raw = rtd::TimeSeries{detail::doubles_of(detail::at(*it, "time")), detail::doubles_of(detail::at(*it, "concentration"))};
    return e;
}

inline OrderedJson to_json(const mfbo::GPHyper& h) {
    return {{"lengthscales", detail::vec(h.lengthscales)},
            {"normalized_lengthscales", detail::vec(h.normalized_lengthscales)},
            {"signal_variance", h.signal_variance},
            {"noise_variance", h.noise_variance},
            {"prior_mean", h.prior_mean},
            {"log_marginal_likelihood", detail::number(h.log_marginal_likelihood)},
            {"log_hyperparameters", detail::vec(h.log_hyperparameters)},
            {"used_default", h.used_default}};
}

inline mfbo::GPHyper hyper_from_json(const OrderedJson& j) {
    mfbo::GPHyper h;
    h.lengthscales = detail::doubles_of(detail::at(j, "lengthscales"));
    h.normalized_lengthscales = detail::doubles_of(detail::at(j, "normalized_lengthscales"));
    h.signal_variance = detail::get<double>(j, "signal_variance");
    h.noise_variance = detail::get<double>(j, "noise_variance");
    h.prior_mean = detail::get<double>(j, "prior_mean");
    h.log_marginal_likelihood = detail::number_of(detail::at(j, "log_marginal_likelihood"));
    h.log_hyperparameters = detail::doubles_of(detail::at(j, "log_hyperparameters"));
    h.used_default = detail::get<bool>(j, "used_default");
    return h;
}

inline OrderedJson to_json(const mfbo::GPSnapshot& s) {
    return {{"iteration", s.iteration},
            {"n_train", s.n_train},
            {"reused_previous", s.reused_previous},
            {"objective", to_json(s.objective)},
            {"cost", to_json(s.cost)}};
}

inline mfbo::GPSnapshot snapshot_from_json(const OrderedJson& j) {
    mfbo::GPSnapshot s;
    s.iteration = detail::get<int>(j, "iteration");
    s.n_train = detail::get<int>(j, "n_train");
    s.reused_previous = detail::get<bool>(j, "reused_previous");
    s.objective = hyper_from_json(detail::at(j, "objective"));
    s.cost = hyper_from_json(detail::at(j, "cost"));
    return s;
}

inline OrderedJson to_json(const mfbo::CampaignState& s) {
    OrderedJson j;
    j["schema_version"] = kSchemaVersion;
    j["parameterisation"] = to_string(s.space.kind);
    j["status"] = mfbo::to_string(s.status);
    j["rng_seed"] = s.rng_seed;
    j["budget_total"] = s.budget_total;
    j["budget_spent"] = s.budget_spent;
    j["iteration"] = s.iteration;
    j["incumbent"] = s.incumbent ? OrderedJson(*s.incumbent) : OrderedJson(nullptr);
    j["space"] = to_json(s.space);
    j["config"] = to_json(s.config);
    if (s.previous_stage) {
        const auto& p = *s.previous_stage;
        j["previous_stage"] = {{"parameterisation", to_string(p.parameterisation)},
                               {"rng_seed", p.rng_seed},
                               {"budget_total", p.budget_total},
                               {"budget_spent", p.budget_spent},
                               {"incumbent_x", detail::vec(p.incumbent_x)},
                               {"incumbent_f", p.incumbent_f},
                               {"frozen_path", to_json(p.frozen_path)}};
    } else {
        j["previous_stage"] = nullptr;
    }
    if (s.finalize) {
        const auto& f = *s.finalize;
        j["finalize"] = {{"predicted_best_x", detail::vec(f.predicted_best_x)},
                         {"predicted_objective", detail::number(f.predicted_objective)},
                         {"predicted_cost", detail::number(f.predicted_cost)},
                         {"evaluated", f.evaluated},
                         {"reason", f.reason}};
    } else {
        j["finalize"] = nullptr;
    }
    j["warnings"] = s.warnings;
    OrderedJson snaps = OrderedJson::array();
    for (const auto& g : s.gp_snapshots) snaps.push_back(to_json(g));
    j["gp_snapshots"] = std::move(snaps);
    OrderedJson hist = OrderedJson::array();
    for (const auto& e : s.history) hist.push_back(to_json(e));
    j["history"] = std::move(hist);
    return j;
}

inline mfbo::CampaignState campaign_from_json(const OrderedJson& j) {
    using detail::at;
    using detail::get;
    const auto version = get<int>(j, "schema_version");
    if (version != kSchemaVersion)
        throw SchemaError("unsupported schema_version " + std::to_string(version) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
    mfbo::CampaignState s;
    s.space = space_from_json(at(j, "space"));
    if (get<std::string>(j, "parameterisation") != to_string(s.space.kind))
        throw SchemaError("parameterisation does not match the design space");
    s.status = mfbo::status_from_string(get<std::string>(j, "status"));
    s.rng_seed = get<std::uint64_t>(j, "rng_seed");
    s.budget_total = get<double>(j, "budget_total");
    s.budget_spent = get<double>(j, "budget_spent");
    s.iteration = get<int>(j, "iteration");
    if (const auto& inc = at(j, "incumbent"); !inc.is_null()) s.incumbent = inc.get<int>();
    s.config = config_from_json(at(j, "config"));
    if (const auto& p = at(j, "previous_stage"); !p.is_null()) {
        mfbo::StageReference r;
        r.parameterisation = parameterisation_from_string(get<std::string>(p, "parameterisation"));
        r.rng_seed = get<std::uint64_t>(p, "rng_seed");
        r.budget_total = get<double>(p, "budget_total");
        r.budget_spent = get<double>(p, "budget_spent");
        r.incumbent_x = detail::eigen_of(at(p, "incumbent_x"));
        r.incumbent_f = get<double>(p, "incumbent_f");
        r.frozen_path = path_from_json(at(p, "frozen_path"));
        s.previous_stage = r;
    }
    if (const auto& f = at(j, "finalize"); !f.is_null()) {
        mfbo::FinalizeRecord r;
        r.predicted_best_x = detail::eigen_of(at(f, "predicted_best_x"));
        r.predicted_objective = detail::number_of(at(f, "predicted_objective"));
        r.predicted_cost = detail::number_of(at(f, "predicted_cost"));
        r.evaluated = get<bool>(f, "evaluated");
        r.reason = get<std::string>(f, "reason");
        s.finalize = r;
    }
    s.warnings = get<std::vector<std::string>>(j, "warnings");
    for (const auto& g : at(j, "gp_snapshots")) s.gp_snapshots.push_back(snapshot_from_json(g));
    double spent = 0.0;
    for (const auto& e : at(j, "history")) {
        s.history.push_back(evaluation_from_json(e));
        const auto& ev = s.history.back();
        if (ev.index != static_cast<int>(s.history.size()) - 1) throw SchemaError("history indices are not consecutive");
        if (ev.x.size() != s.space.x_dim()) throw SchemaError("evaluation " + std::to_string(ev.index) + ": wrong x dimension");
        spent += ev.cost;
    }
    if (spent != s.budget_spent) throw SchemaError("budget_spent does not equal the sum of recorded costs");
    if (s.incumbent) {
        if (*s.incumbent < 0 || *s.incumbent >= static_cast<int>(s.history.size()))
            throw SchemaError("incumbent index out of range");
        const auto& inc = s.history[static_cast<std::size_t>(*s.incumbent)];
        if (!inc.ok || !s.is_top_fidelity(inc)) throw SchemaError("incumbent is not a successful top-fidelity evaluation");
    }
    return s;
}

inline std::string serialize(const mfbo::CampaignState& s) { return to_json(s).dump(1) + "\n"; }

inline mfbo::CampaignState parse_campaign(const std::string& text) {
    OrderedJson j;
    try {
        j = OrderedJson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("campaign document is not valid JSON: ") + e.what());
    }
    return campaign_from_json(j);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write via a temporary file and rename, so an interrupted write never
/// leaves a truncated checkpoint behind.
inline void write_file(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << text;
        if (!out) throw Error("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot rename " + tmp + " to " + path);
}

inline mfbo::CampaignState load_campaign(const std::string& path) { return parse_campaign(read_file(path)); }

inline void save_campaign(const std::string& path, const mfbo::CampaignState& s) { write_file(path, serialize(s)); }

}  // namespace coilopt::io
