// coilopt command line: campaigns, geometry export, RTD fitting, analysis
// and the benchmark service. Exit codes: 0 success, 1 usage error, 2 runtime
// failure (JSON diagnostics on stderr).

#include "coilopt/analysis/analysis.hpp"
#include "coilopt/design_space.hpp"
#include "coilopt/evaluator.hpp"
#include "coilopt/geometry/loft.hpp"
#include "coilopt/geometry/stl.hpp"
#include "coilopt/io/campaign_json.hpp"
#include "coilopt/io/csv.hpp"
#include "coilopt/mfbo/campaign.hpp"
#include "coilopt/rtd/rtd.hpp"
#include "coilopt/service/http.hpp"
#include "coilopt/service/protocol.hpp"
#include "coilopt/version.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace coilopt;
using io::OrderedJson;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

// Runtime failure reported as exit code 2.
class CommandFailure : public Error {
public:
    CommandFailure(const std::string& kind, const std::string& message, OrderedJson detail = nullptr)
        : Error(message), kind_(kind), detail_(std::move(detail)) {}
    const std::string& kind() const { return kind_; }
    const OrderedJson& detail() const { return detail_; }

private:
    std::string kind_;
    OrderedJson detail_;
};

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const io::SchemaError*>(&e)) return "schema_error";
    if (dynamic_cast<const GeometryInvalid*>(&e)) return "geometry_invalid";
    if (dynamic_cast<const DegenerateCrossSection*>(&e)) return "geometry_invalid";
    if (dynamic_cast<const DegenerateTangent*>(&e)) return "geometry_invalid";
    if (dynamic_cast<const SolverFailure*>(&e)) return "solver_failure";
    if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid_argument";
    if (dynamic_cast<const Error*>(&e)) return "error";
    return "internal";
}

struct SpaceOptions {
    std::string kind = "cross-section";
    int n_c = 0, n_l = 0, n_p = 0;
    std::string from_stage;

    void add_to(CLI::App* cmd, const std::string& default_kind) {
        kind = default_kind;
        cmd->add_option("--space", kind, "Parameterisation")
            ->check(CLI::IsMember({"cross-section", "coil-path", "joint-sequential"}))
            ->capture_default_str();
        cmd->add_option("--n-c", n_c, "Inducing points per cross-section")->check(CLI::Range(3, 64));
        cmd->add_option("--n-l", n_l, "Cross-sections along the coil")->check(CLI::Range(1, 64));
        cmd->add_option("--n-p", n_p, "Inducing points along the path")->check(CLI::Range(2, 64));
        cmd->add_option("--from-stage", from_stage, "Completed coil-path checkpoint whose incumbent path is frozen (joint-sequential)");
    }

    geometry::NominalCoil coil() const {
        geometry::NominalCoil c;
        if (n_c) c.n_c = n_c;
        if (n_l) c.n_l = n_l;
        if (n_p) c.n_p = n_p;
        return c;
    }

    Parameterisation parameterisation() const { return parameterisation_from_string(kind); }

    std::optional<mfbo::CampaignState> previous_stage() const {
        if (from_stage.empty()) return std::nullopt;
        return io::load_campaign(from_stage);
    }

    /// Space for commands that do not run a second stage.
    DesignSpace space() const {
        const auto p = parameterisation();
        if (p != Parameterisation::joint_sequential) return DesignSpace::make(p, coil(), {});
        const auto prev = previous_stage();
        if (!prev) throw InvalidArgument("joint-sequential needs --from-stage pointing at a coil-path checkpoint");
        if (!prev->incumbent) throw InvalidArgument("--from-stage campaign has no incumbent");
        const auto frozen = prev->space.decode(prev->incumbent_evaluation()->x).path;
        return DesignSpace::joint_sequential(prev->space.coil, frozen, prev->space.fidelity);
    }
};

std::unique_ptr<Evaluator> make_evaluator(const std::string& endpoint) {
    if (endpoint.empty()) return std::make_unique<SurrogateEvaluator>();
    return std::make_unique<service::HttpEvaluator>(endpoint);
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-")
        std::cout << text;
    else
        io::write_file(path, text);
}

OrderedJson summary(const mfbo::CampaignState& s, const std::string& checkpoint) {
    OrderedJson j = {{"status", mfbo::to_string(s.status)},
                     {"parameterisation", to_string(s.space.kind)},
                     {"checkpoint", checkpoint},
                     {"evaluations", s.history.size()},
                     {"iterations", s.iteration},
                     {"budget_total", s.budget_total},
                     {"budget_spent", s.budget_spent}};
    if (s.incumbent) {
        const auto& e = *s.incumbent_evaluation();
        j["incumbent"] = {{"index", e.index}, {"f", e.f}, {"n_star", e.n_star}, {"x", io::detail::vec(e.x)}};
    } else {
        j["incumbent"] = nullptr;
    }
    j["warnings"] = s.warnings;
    return j;
}

int drive(mfbo::CampaignState& s, const Evaluator& ev, const std::string& checkpoint, const std::string& trace,
          std::size_t stop_after) {
    mfbo::CampaignHooks hooks;
    hooks.checkpoint = [&](const mfbo::CampaignState& st) { io::save_campaign(checkpoint, st); };
    hooks.interrupt = [stop_after](const mfbo::CampaignState& st) {
        return g_interrupted.load() || (stop_after > 0 && st.history.size() >= stop_after);
    };
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    io::save_campaign(checkpoint, s);
    mfbo::advance(s, ev, hooks);
    io::save_campaign(checkpoint, s);
    if (!trace.empty()) io::write_file(trace, analysis::campaign_trace_csv(s));
    if (s.status == mfbo::CampaignStatus::running)
        throw CommandFailure("interrupted", "campaign interrupted; continue with `coilopt resume --checkpoint " + checkpoint + "`",
                             summary(s, checkpoint));
    std::cout << summary(s, checkpoint).dump(2) << "\n";
    if (s.status == mfbo::CampaignStatus::aborted)
        throw CommandFailure("aborted", "campaign aborted after repeated evaluation failures", summary(s, checkpoint));
    return 0;
}

/// Numbers from a JSON array, an object with "x", or CSV/whitespace text.
Eigen::VectorXd read_vector(const std::string& path) {
    const auto text = io::read_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
        OrderedJson j;
        try {
            j = OrderedJson::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw InvalidArgument(path + ": " + e.what());
        }
        if (j.is_object()) {
            OrderedJson x = io::detail::at(j, "x");
            j = std::move(x);
        }
        return io::detail::eigen_of(j);
    }
    std::vector<double> v;
    std::string cell;
    auto flush = [&] {
        if (cell.empty()) return;
        try {
            v.push_back(io::parse_double(cell));
        } catch (const InvalidArgument&) {
            if (!v.empty()) throw;  // only a leading header may be non-numeric
        }
        cell.clear();
    };
    for (char ch : text) {
        if (ch == ',' || ch == '\n' || ch == '\r' || ch == ' ' || ch == '\t')
            flush();
        else
            cell += ch;
    }
    flush();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd nominal_x(const DesignSpace& s) {
    if (s.kind == Parameterisation::coil_path) return Eigen::VectorXd::Zero(s.x_dim());
    return Eigen::VectorXd::Constant(s.x_dim(), s.coil.tube_radius);
}

OrderedJson report_json(const geometry::GeometryReport& r) {
    return {{"valid", r.valid()},
            {"watertight", r.watertight},
            {"winding_consistent", r.winding_consistent},
            {"outward", r.outward},
            {"boundary_edges", r.boundary_edges.size()},
            {"nonmanifold_edges", r.nonmanifold_edges.size()},
            {"self_intersection_checked", r.self_intersection_checked},
            {"intersecting_pairs", r.intersecting_pairs.size()},
            {"volume", r.volume},
            {"area", r.area}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coiled tube reactor design: multi-fidelity optimization, geometry and RTD tools"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // doe
    auto* doe = app.add_subcommand("doe", "Emit the initial design (Latin hypercube over x and z) as JSON");
    SpaceOptions doe_space;
    doe_space.add_to(doe, "cross-section");
    int doe_n = 0;
    std::uint64_t doe_seed = 0;
    std::string doe_out;
    doe->add_option("--n", doe_n, "Number of points (default max(10, dim + 2))")->check(CLI::PositiveNumber);
    doe->add_option("--seed", doe_seed, "RNG seed")->capture_default_str();
    doe->add_option("--out", doe_out, "Output file (default stdout)");

    // run
    auto* run = app.add_subcommand("run", "Run a campaign, checkpointing after every evaluation");
    SpaceOptions run_space;
    run_space.add_to(run, "cross-section");
    mfbo::CampaignConfig run_cfg;
    double budget = 600.0;
    std::uint64_t run_seed = 0;
    std::string run_ckpt, run_endpoint, run_trace;
    bool run_force = false;
    std::size_t run_stop = 0, res_stop = 0;
    run->add_option("--budget", budget, "Budget in simulated cost units")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--beta", run_cfg.beta, "Exploration weight")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--pc", run_cfg.p_c, "Budget reserve multiple of the top-fidelity cost")->check(CLI::Range(1.0, 1e6))->capture_default_str();
    run->add_option("--seed", run_seed, "RNG seed")->capture_default_str();
    run->add_option("--checkpoint", run_ckpt, "Campaign JSON file")->required();
    run->add_option("--evaluator", run_endpoint, "External evaluator endpoint, e.g. http://127.0.0.1:8080");
    run->add_option("--max-iterations", run_cfg.max_iterations, "Cap on acquisition iterations")->check(CLI::NonNegativeNumber)->capture_default_str();
    run->add_option("--doe-size", run_cfg.doe_size, "Initial design size (0 = max(10, dim + 2))")->check(CLI::NonNegativeNumber);
    run->add_option("--trace", run_trace, "Write the per-evaluation trace CSV here");
    run->add_flag("--keep-raw", run_cfg.keep_raw, "Store raw solver series in the checkpoint");
    run->add_flag("--force", run_force, "Overwrite an existing checkpoint");
    run->add_option("--stop-after", run_stop, "Interrupt once the history holds this many evaluations");

    // resume
    auto* resume = app.add_subcommand("resume", "Continue a campaign from its checkpoint");
    std::string res_ckpt, res_endpoint, res_trace;
    resume->add_option("--checkpoint", res_ckpt, "Campaign JSON file")->required()->check(CLI::ExistingFile);
    resume->add_option("--evaluator", res_endpoint, "External evaluator endpoint");
    resume->add_option("--trace", res_trace, "Write the per-evaluation trace CSV here");
    resume->add_option("--stop-after", res_stop, "Interrupt once the history holds this many evaluations");

    // geometry
    auto* geo = app.add_subcommand("geometry", "Parameter vector to binary STL");
    SpaceOptions geo_space;
    geo_space.add_to(geo, "coil-path");
    std::string geo_params, geo_out;
    bool geo_nominal = false, geo_validate = false;
    geometry::Tessellation tess;
    auto* params_opt = geo->add_option("--params", geo_params, "x as JSON array, {\"x\": [...]} or CSV")->check(CLI::ExistingFile);
    geo->add_flag("--nominal", geo_nominal, "Use the nominal design (circular sections, no deviations)")->excludes(params_opt);
    geo->add_option("--out", geo_out, "STL output file");
    geo->add_flag("--validate", geo_validate, "Full validation including self-intersection; failures exit 2");
    geo->add_option("--rings-per-turn", tess.rings_per_turn)->check(CLI::Range(4, 4096))->capture_default_str();
    geo->add_option("--ring-vertices", tess.ring_vertices)->check(CLI::Range(16, 4096))->capture_default_str();

    // fit-rtd
    auto* fit = app.add_subcommand("fit-rtd", "Fit the tanks-in-series model to a tracer trace CSV (time,concentration)");
    std::string fit_trace, fit_curve;
    double alpha = rtd::kDefaultAlpha;
    fit->add_option("trace", fit_trace, "Trace CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--alpha", alpha, "Misfit weight in f = -N* + alpha * MSE")->check(CLI::NonNegativeNumber)->capture_default_str();
    fit->add_option("--curve-out", fit_curve, "Write the resampled E(theta) and fitted curve CSV");

    // analyze
    auto* ana = app.add_subcommand("analyze", "Lengthscale history, variability and embedding export");
    std::string ana_ckpt, ana_dir = ".";
    ana->add_option("--checkpoint", ana_ckpt, "Campaign JSON file")->required()->check(CLI::ExistingFile);
    ana->add_option("--out-dir", ana_dir, "Directory for CSV and SVG outputs")->capture_default_str();

    // serve
    auto* srv = app.add_subcommand("serve", "Start the benchmark HTTP service");
    SpaceOptions srv_space;
    srv_space.add_to(srv, "cross-section");
    std::string host = "127.0.0.1";
    int port = 8080;
    std::uint64_t srv_seed = 0;
    srv->add_option("--host", host)->capture_default_str();
    srv->add_option("--port", port)->check(CLI::Range(1, 65535))->capture_default_str();
    srv->add_option("--seed", srv_seed, "Default seed for requests without one")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*doe) {
            const auto space = doe_space.space();
            mfbo::CampaignConfig cfg;
            const int n = doe_n > 0 ? doe_n : mfbo::doe_size(space, cfg);
            OrderedJson pts = OrderedJson::array();
            for (const auto& p : mfbo::doe_sample(space, n, derive_seed(doe_seed, mfbo::kDoeStream)))
                pts.push_back({{"x", io::detail::vec(p.x)}, {"z", {p.z.axial, p.z.radial}}});
            const OrderedJson j = {{"parameterisation", to_string(space.kind)},
                                   {"seed", doe_seed},
                                   {"n", n},
                                   {"space", io::to_json(space)},
                                   {"points", std::move(pts)}};
            write_output(doe_out, j.dump(1) + "\n");
            return 0;
        }

        if (*run) {
            if (fs::exists(run_ckpt) && !run_force)
                throw CommandFailure("checkpoint_exists", run_ckpt + " exists; use `coilopt resume` or pass --force");
            mfbo::CampaignState state;
            if (run_space.parameterisation() == Parameterisation::joint_sequential) {
                const auto prev = run_space.previous_stage();
                if (!prev) throw InvalidArgument("joint-sequential needs --from-stage pointing at a completed coil-path checkpoint");
                state = mfbo::second_stage(*prev, budget, run_seed, run_cfg);
            } else {
                state = mfbo::new_campaign(run_space.space(), budget, run_seed, run_cfg);
            }
            const auto ev = make_evaluator(run_endpoint);
            return drive(state, *ev, run_ckpt, run_trace, run_stop);
        }

        if (*resume) {
            auto state = io::load_campaign(res_ckpt);
            const auto ev = make_evaluator(res_endpoint);
            return drive(state, *ev, res_ckpt, res_trace, res_stop);
        }

        if (*geo) {
            const auto space = geo_space.space();
            if (!geo_nominal && geo_params.empty()) throw InvalidArgument("pass --params FILE or --nominal");
            const Eigen::VectorXd x = geo_nominal ? nominal_x(space) : read_vector(geo_params);
            tess.check_self_intersection = geo_validate;
            const auto design = space.decode(x);
            const auto surf = geometry::build_reactor(design, space.coil, tess);
            const auto report = geometry::validate_geometry(surf, geo_validate);
            OrderedJson j = {{"parameterisation", to_string(space.kind)},
                             {"vertices", surf.vertices.size()},
                             {"triangles", surf.triangles.size()},
                             {"report", report_json(report)}};
            if (!design.cross_sections) j["expected_triangles"] = geometry::circular_triangle_count(space.coil, tess);
            if (!geo_out.empty()) {
                io::write_file(geo_out, geometry::export_stl(surf));
                j["stl"] = geo_out;
            }
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (*fit) {
            const auto series = io::parse_trace_csv(io::read_file(fit_trace));
            const auto curve = rtd::normalize_rtd(series);
            const auto r = rtd::composite_objective(curve, alpha);
            if (!fit_curve.empty()) {
                std::string out = "theta,e,fit\n";
                for (std::size_t i = 0; i < curve.size(); ++i)
                    out += io::format_double(curve.theta[i]) + "," + io::format_double(curve.e[i]) + "," +
                           io::format_double(rtd::tanks_model(r.n_star, curve.theta[i])) + "\n";
                io::write_file(fit_curve, out);
            }
            const OrderedJson j = {{"n_star", r.n_star}, {"mse", r.mse}, {"f", r.f}, {"alpha", alpha}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (*ana) {
            const auto s = io::load_campaign(ana_ckpt);
            fs::create_directories(ana_dir);
            const fs::path dir(ana_dir);
            OrderedJson files = OrderedJson::array();
            auto emit = [&](const std::string& name, const std::string& text) {
                io::write_file((dir / name).string(), text);
                files.push_back((dir / name).string());
            };
            emit("trace.csv", analysis::campaign_trace_csv(s));
            emit("embedding.csv", analysis::export_embedding_csv(s));
            OrderedJson j = {{"parameterisation", to_string(s.space.kind)}, {"status", mfbo::to_string(s.status)}};
            if (!s.gp_snapshots.empty()) {
                const auto h = analysis::lengthscale_history(s);
                emit("lengthscales.csv", analysis::lengthscale_csv(h, false));
                emit("lengthscales_normalized.csv", analysis::lengthscale_csv(h, true));
                emit("lengthscale_histogram.csv", analysis::histogram_csv(h));
                emit("lengthscales.svg", analysis::lengthscale_svg(h));
                emit("lengthscale_histogram.svg", analysis::histogram_svg(h));
                const auto v = analysis::final_variability(s);
                emit("variability.csv", analysis::variability_csv(v));
                OrderedJson var = OrderedJson::object();
                for (std::size_t i = 0; i < v.labels.size(); ++i) var[v.labels[i]] = v.values[i];
                j["variability_iteration"] = v.iteration;
                j["variability"] = std::move(var);
            } else {
                j["variability"] = nullptr;
            }
            j["files"] = std::move(files);
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (*srv) {
            service::ServiceOptions o;
            o.coil = srv_space.coil();
            o.parameterisation = srv_space.parameterisation();
            o.seed = srv_seed;
            if (o.parameterisation == Parameterisation::joint_sequential) {
                const auto s = srv_space.space();
                o.coil = s.coil;
                o.fidelity = s.fidelity;
                o.frozen_path = s.fixed_path;
            }
            const service::BenchmarkService svc(o);
            std::cerr << "coilopt " << kVersion << " serving on http://" << host << ":" << port << "\n";
            if (!service::serve(svc, host, port)) throw CommandFailure("bind_failed", "cannot listen on " + host + ":" + std::to_string(port));
            return 0;
        }
    } catch (const CommandFailure& e) {
        OrderedJson j = {{"error", e.kind()}, {"message", e.what()}};
        if (!e.detail().is_null()) j["detail"] = e.detail();
        std::cerr << j.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << OrderedJson({{"error", error_kind(e)}, {"message", e.what()}}).dump() << "\n";
        return 2;
    }
    return 1;
}
