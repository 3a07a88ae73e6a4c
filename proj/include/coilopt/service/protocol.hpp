#pragma once

// Request handling for the benchmark service, independent of the transport.
// Every handler is a pure function of its input and the immutable options,
// so identical requests give byte-identical bodies.

#include "coilopt/design_space.hpp"
#include "coilopt/errors.hpp"
#include "coilopt/evaluator.hpp"
#include "coilopt/io/campaign_json.hpp"
#include "coilopt/io/csv.hpp"
#include "coilopt/rtd/rtd.hpp"
#include "coilopt/version.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace coilopt::service {

using io::OrderedJson;

struct ServiceOptions {
    geometry::NominalCoil coil;
    flow::FidelityBox fidelity;
    Parameterisation parameterisation = Parameterisation::cross_section;
    std::uint64_t seed = 0;
    /// Path used by the joint-sequential space when a request does not carry its own.
    std::optional<geometry::PathParams> frozen_path;
};

struct Response {
    int status = 200;
    std::string body;
};

struct FieldError {
    std::string field;
    std::string message;
};

/// Collected validation failures; becomes a 400.
class BadRequest : public InvalidArgument {
public:
    explicit BadRequest(std::vector<FieldError> errors)
        : InvalidArgument(errors.empty() ? "bad request" : errors.front().field + ": " + errors.front().message),
          errors_(std::move(errors)) {}

    const std::vector<FieldError>& errors() const { return errors_; }

private:
    std::vector<FieldError> errors_;
};

inline DesignSpace space_for(const ServiceOptions& o, Parameterisation kind) {
    const auto path = o.frozen_path.value_or(geometry::PathParams::zero(o.coil));
    return DesignSpace::make(kind, o.coil, path, o.fidelity);
}

inline std::string dump(const OrderedJson& j) { return j.dump(); }

inline Response json_response(int status, const OrderedJson& j) { return {status, dump(j)}; }

inline Response error_response(int status, const std::string& kind, const std::string& message,
                               const std::vector<FieldError>& fields = {}) {
    OrderedJson j = {{"error", kind}, {"message", message}};
    OrderedJson arr = OrderedJson::array();
    for (const auto& f : fields) arr.push_back({{"field", f.field}, {"message", f.message}});
    j["fields"] = std::move(arr);
    return json_response(status, j);
}

struct EvaluateRequest {
    DesignSpace space;
    Eigen::VectorXd x;
    flow::FidelityVector z;
    std::uint64_t seed = 0;
};

/// Field-level validation of an evaluate/simulate body. Collects every
/// problem it can find before throwing.
inline EvaluateRequest parse_request(const ServiceOptions& o, const std::string& body) {
    std::vector<FieldError> errs;
    OrderedJson j;
    try {
        j = OrderedJson::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw BadRequest(std::vector<FieldError>{{"body", std::string("not valid JSON: ") + e.what()}});
    }
    if (!j.is_object()) throw BadRequest(std::vector<FieldError>{{"body", "expected a JSON object"}});

    EvaluateRequest r;
    Parameterisation kind = o.parameterisation;
    if (const auto it = j.find("parameterisation"); it != j.end()) {
        if (!it->is_string()) {
            errs.push_back({"parameterisation", "must be a string"});
        } else {
            try {
                kind = parameterisation_from_string(it->get<std::string>());
            } catch (const InvalidArgument& e) {
                errs.push_back({"parameterisation", e.what()});
            }
        }
    }
    bool space_ok = true;
    if (const auto it = j.find("space"); it != j.end()) {
        try {
            r.space = io::space_from_json(*it);
            if (j.contains("parameterisation") && r.space.kind != kind)
                errs.push_back({"space", "parameterisation does not match the space"});
        } catch (const Error& e) {
            errs.push_back({"space", e.what()});
            space_ok = false;
        }
    } else {
        try {
            r.space = space_for(o, kind);
        } catch (const Error& e) {
            errs.push_back({"parameterisation", e.what()});
            space_ok = false;
        }
    }

    if (const auto it = j.find("x"); it == j.end()) {
        errs.push_back({"x", "required"});
    } else if (!it->is_array()) {
        errs.push_back({"x", "must be an array of numbers"});
    } else {
        r.x.resize(static_cast<Eigen::Index>(it->size()));
        bool numeric = true;
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& v = (*it)[i];
            const std::string field = "x[" + std::to_string(i) + "]";
            if (!v.is_number()) {
                errs.push_back({field, "must be a number"});
                numeric = false;
                continue;
            }
            r.x[static_cast<Eigen::Index>(i)] = v.get<double>();
        }
        if (numeric && space_ok) {
            if (r.x.size() != r.space.x_dim()) {
                errs.push_back({"x", "has " + std::to_string(r.x.size()) + " entries, expected " + std::to_string(r.space.x_dim())});
            } else {
                for (Eigen::Index i = 0; i < r.x.size(); ++i)
                    if (!(r.x[i] >= r.space.x_lo[i] && r.x[i] <= r.space.x_hi[i]))
                        errs.push_back({"x[" + std::to_string(i) + "]",
                                        r.space.labels[static_cast<std::size_t>(i)] + " = " + io::format_double(r.x[i]) +
                                            " outside [" + io::format_double(r.space.x_lo[i]) + ", " +
                                            io::format_double(r.space.x_hi[i]) + "]"});
            }
        }
    }

    if (const auto it = j.find("z"); it == j.end()) {
        errs.push_back({"z", "required"});
    } else if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
        errs.push_back({"z", "must be [axial, radial]"});
    } else {
        r.z = {(*it)[0].get<double>(), (*it)[1].get<double>()};
        if (space_ok) {
            const auto& b = r.space.fidelity;
            if (!(r.z.axial >= b.lo.axial && r.z.axial <= b.hi.axial))
                errs.push_back({"z[0]", "axial fidelity " + io::format_double(r.z.axial) + " outside [" +
                                            io::format_double(b.lo.axial) + ", " + io::format_double(b.hi.axial) + "]"});
            if (!(r.z.radial >= b.lo.radial && r.z.radial <= b.hi.radial))
                errs.push_back({"z[1]", "radial fidelity " + io::format_double(r.z.radial) + " outside [" +
                                            io::format_double(b.lo.radial) + ", " + io::format_double(b.hi.radial) + "]"});
        }
    }

    r.seed = o.seed;
    if (const auto it = j.find("seed"); it != j.end()) {
        if (it->is_number_unsigned())
            r.seed = it->get<std::uint64_t>();
        else if (it->is_number_integer() && it->get<std::int64_t>() >= 0)
            r.seed = static_cast<std::uint64_t>(it->get<std::int64_t>());
        else
            errs.push_back({"seed", "must be a non-negative integer"});
    }

    for (const auto& item : j.items())
        if (const auto& key = item.key(); key != "parameterisation" && key != "space" && key != "x" && key != "z" && key != "seed")
            errs.push_back({key, "unknown field"});

    if (!errs.empty()) throw BadRequest(std::move(errs));
    return r;
}

/// Scored evaluation. Shares the scoring path with campaigns so the service
/// and local evaluation agree field for field.
struct EvaluateResult {
    double f = 0.0, n_star = 0.0, mse = 0.0, cost = 0.0;
    flow::FidelityVector z;
    std::uint64_t seed = 0;
    rtd::RTDCurve rtd;
};

inline EvaluateResult evaluate_point(const Evaluator& ev, const DesignSpace& space, const Eigen::VectorXd& x,
                                     const flow::FidelityVector& z, std::uint64_t seed) {
    const auto sim = ev.evaluate(space, x, z, seed);
    if (!(sim.cost > 0.0) || !std::isfinite(sim.cost)) throw SolverFailure("evaluator reported a non-positive cost");
    EvaluateResult r;
    r.rtd = rtd::normalize_rtd(sim.outlet_series);
    const auto fit = rtd::composite_objective(r.rtd);
    if (!std::isfinite(fit.f)) throw SolverFailure("objective is not finite");
    r.f = fit.f;
    r.n_star = fit.n_star;
    r.mse = fit.mse;
    r.cost = sim.cost;
    r.z = z.rounded();
    r.seed = seed;
    return r;
}

inline OrderedJson to_json(const EvaluateResult& r) {
    return {{"f", r.f},
            {"n_star", r.n_star},
            {"mse", r.mse},
            {"cost", r.cost},
            {"z", {r.z.axial, r.z.radial}},
            {"seed", r.seed},
            {"rtd", io::to_json(r.rtd)}};
}

inline OrderedJson to_json(const flow::SimulationResult& r) {
    return {{"time", io::detail::vec(r.outlet_series.time)},
            {"concentration", io::detail::vec(r.outlet_series.concentration)},
            {"cost", r.cost},
            {"fidelity_used", {r.fidelity_used.axial, r.fidelity_used.radial}},
            {"seed", r.seed},
            {"flow_rate", r.flow_rate},
            {"injected_mass", r.injected_mass},
            {"steps", r.steps}};
}

inline flow::SimulationResult simulation_from_json(const OrderedJson& j) {
    using io::detail::at;
    using io::detail::get;
    flow::SimulationResult r;
    r.outlet_series.time = io::detail::doubles_of(at(j, "time"));
    r.outlet_series.concentration = io::detail::doubles_of(at(j, "concentration"));
    r.cost = get<double>(j, "cost");
    r.fidelity_used = io::detail::fidelity_of(at(j, "fidelity_used"));
    r.seed = get<std::uint64_t>(j, "seed");
    r.flow_rate = get<double>(j, "flow_rate");
    r.injected_mass = get<double>(j, "injected_mass");
    r.steps = get<std::int64_t>(j, "steps");
    return r;
}

/// Maps library errors to HTTP status: 422 for geometry, 500 for solver.
template <class F>
Response guarded(F&& body) {
    try {
        return body();
    } catch (const BadRequest& e) {
        return error_response(400, "bad_request", e.what(), e.errors());
    } catch (const GeometryInvalid& e) {
        return error_response(422, "geometry_invalid", e.what());
    } catch (const DegenerateCrossSection& e) {
        return error_response(422, "geometry_invalid", e.what());
    } catch (const DegenerateTangent& e) {
        return error_response(422, "geometry_invalid", e.what());
    } catch (const InvalidArgument& e) {
        return error_response(400, "bad_request", e.what());
    } catch (const std::exception& e) {
        return error_response(500, "solver_failure", e.what());
    }
}

class BenchmarkService {
public:
    explicit BenchmarkService(ServiceOptions options, std::shared_ptr<const Evaluator> evaluator = nullptr)
        : options_(std::move(options)),
          evaluator_(evaluator ? std::move(evaluator) : std::make_shared<SurrogateEvaluator>()) {
        space_for(options_, options_.parameterisation).validate();
    }

    const ServiceOptions& options() const { return options_; }
    const Evaluator& evaluator() const { return *evaluator_; }

    Response health() const { return json_response(200, {{"status", "ok"}, {"version", kVersion}}); }

    Response spaces() const {
        OrderedJson arr = OrderedJson::array();
        for (auto kind : {Parameterisation::cross_section, Parameterisation::coil_path, Parameterisation::joint_sequential}) {
            const auto s = space_for(options_, kind);
            arr.push_back({{"parameterisation", to_string(kind)},
                           {"default", kind == options_.parameterisation},
                           {"labels", s.labels},
                           {"x_lo", io::detail::vec(s.x_lo)},
                           {"x_hi", io::detail::vec(s.x_hi)},
                           {"z_lo", {s.fidelity.lo.axial, s.fidelity.lo.radial}},
                           {"z_hi", {s.fidelity.hi.axial, s.fidelity.hi.radial}},
                           {"space", io::to_json(s)}});
        }
        return json_response(200, {{"seed", options_.seed}, {"spaces", std::move(arr)}});
    }

    Response evaluate(const std::string& body) const {
        return guarded([&] {
            const auto req = parse_request(options_, body);
            return json_response(200, to_json(evaluate_point(*evaluator_, req.space, req.x, req.z, req.seed)));
        });
    }

    /// Raw solver output, the evaluator contract used by remote campaigns.
    Response simulate(const std::string& body) const {
        return guarded([&] {
            const auto req = parse_request(options_, body);
            return json_response(200, to_json(evaluator_->evaluate(req.space, req.x, req.z, req.seed)));
        });
    }

private:
    ServiceOptions options_;
    std::shared_ptr<const Evaluator> evaluator_;
};

}  // namespace coilopt::service
