#pragma once

#include "coilopt/design_space.hpp"
#include "coilopt/errors.hpp"
#include "coilopt/evaluator.hpp"
#include "coilopt/mfbo/acquisition.hpp"
#include "coilopt/mfbo/models.hpp"
#include "coilopt/mfbo/state.hpp"
#include "coilopt/optim/lhs.hpp"
#include "coilopt/random.hpp"
#include "coilopt/rtd/rtd.hpp"

#include <Eigen/Core>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace coilopt::mfbo {

// Seed streams derived from the campaign seed.
enum SeedStream : std::uint64_t { kDoeStream = 1, kFitStream, kAcquisitionStream, kEvaluationStream, kBestStream, kRandomStream };

struct CampaignHooks {
    /// Called after every evaluation and on every status change.
    std::function<void(const CampaignState&)> checkpoint;
    /// Polled after each checkpoint; returning true leaves the campaign running
    /// so it can be resumed later.
    std::function<bool(const CampaignState&)> interrupt;
};

inline int doe_size(const DesignSpace& space, const CampaignConfig& cfg) {
    return cfg.doe_size > 0 ? cfg.doe_size : std::max(10, space.x_dim() + 2);
}

struct DesignPoint {
    Eigen::VectorXd x;
    flow::FidelityVector z;
};

/// LHS over the joint (x, z) box.
inline std::vector<DesignPoint> doe_sample(const DesignSpace& space, int n, std::uint64_t seed) {
    if (n < 2) throw InvalidArgument("design of experiments needs at least two points");
    Rng rng(seed);
    const Eigen::MatrixXd u = optim::latin_hypercube(n, space.dim(), rng);
    const Eigen::VectorXd lo = space.joint_lo();
    const Eigen::VectorXd hi = space.joint_hi();
    std::vector<DesignPoint> out;
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd p = detail::to_box(u.row(i).transpose(), lo, hi);
        out.push_back({p.head(space.x_dim()), {p[space.x_dim()], p[space.x_dim() + 1]}});
    }
    return out;
}

/// FNV-1a over the bit patterns of the curve.
inline std::string rtd_digest(const rtd::RTDCurve& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    for (double v : c.theta) feed(v);
    for (double v : c.e) feed(v);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// One black-box call. Library errors become a failed evaluation booked at
/// `failure_cost`; nothing else is caught.
inline Evaluation evaluate_design(const DesignSpace& space, const Evaluator& evaluator, const Eigen::VectorXd& x,
                                  const flow::FidelityVector& z, std::uint64_t seed, double failure_cost, bool keep_raw) {
    Evaluation e;
    e.x = x;
    e.z_requested = z;
    e.z = z.rounded();
    e.seed = seed;
    try {
        const auto r = evaluator.evaluate(space, x, z, seed);
        if (!(r.cost > 0.0) || !std::isfinite(r.cost)) throw SolverFailure("evaluator reported a non-positive cost");
        e.rtd = rtd::normalize_rtd(r.outlet_series);
        const auto fit = rtd::composite_objective(e.rtd);
        e.f = fit.f;
        e.n_star = fit.n_star;
        e.mse = fit.mse;
        e.cost = r.cost;
        e.ok = std::isfinite(e.f);
        if (!e.ok) throw SolverFailure("objective is not finite");
        e.rtd_digest = rtd_digest(e.rtd);
        if (keep_raw) e.raw = r.outlet_series;
    } catch (const Error& ex) {
        e.ok = false;
        e.error = ex.what();
        e.f = e.n_star = e.mse = std::numeric_limits<double>::quiet_NaN();
        e.rtd = {};
        e.rtd_digest.clear();
        e.raw.reset();
        e.cost = failure_cost;
    }
    return e;
}

inline void validate(const CampaignConfig& c) {
    if (!(c.beta > 0.0)) throw InvalidArgument("beta must be positive");
    if (!(c.p_c >= 1.0)) throw InvalidArgument("p_c must be at least 1");
    if (!(c.epsilon_gamma > 0.0 && c.epsilon_gamma <= 1.0)) throw InvalidArgument("epsilon_gamma must lie in (0, 1]");
    if (c.doe_size < 0) throw InvalidArgument("doe_size must be non-negative");
    if (c.acquisition_starts < 1) throw InvalidArgument("acquisition_starts must be at least 1");
    if (c.polish_starts < 0) throw InvalidArgument("polish_starts must be non-negative");
    if (c.max_iterations < 0) throw InvalidArgument("max_iterations must be non-negative");
    if (c.fit_restarts < 0 || c.fit_max_iterations < 1) throw InvalidArgument("bad GP fitting options");
    if (!(c.failure_cost > 0.0)) throw InvalidArgument("failure_cost must be positive");
    if (c.failure_window < 1) throw InvalidArgument("failure_window must be at least 1");
}

inline CampaignState new_campaign(const DesignSpace& space, double budget, std::uint64_t seed, const CampaignConfig& cfg = {}) {
    space.validate();
    validate(cfg);
    if (!(budget > 0.0) || !std::isfinite(budget)) throw InvalidArgument("budget must be positive and finite");
    CampaignState s;
    s.space = space;
    s.config = cfg;
    s.rng_seed = seed;
    s.budget_total = budget;
    return s;
}

namespace detail {

inline void record(CampaignState& s, Evaluation e, Stage stage, int iteration) {
    e.index = static_cast<int>(s.history.size());
    e.stage = stage;
    e.iteration = iteration;
    s.budget_spent += e.cost;
    e.wall_clock_stamp = s.budget_spent;
    s.history.push_back(std::move(e));
}

inline Evaluation run_one(const CampaignState& s, const Evaluator& ev, const Eigen::VectorXd& x, const flow::FidelityVector& z) {
    const auto seed = derive_seed(s.rng_seed, kEvaluationStream, s.history.size());
    return evaluate_design(s.space, ev, x, z, seed, s.config.failure_cost, s.config.keep_raw);
}

inline bool too_many_failures(const CampaignState& s) {
    const auto w = static_cast<std::size_t>(s.config.failure_window);
    if (s.history.size() < w) return false;
    std::size_t failed = 0;
    for (std::size_t i = s.history.size() - w; i < s.history.size(); ++i) failed += s.history[i].ok ? 0 : 1;
    return 2 * failed > w;
}

inline std::optional<int> best_top_fidelity(const CampaignState& s) {
    std::optional<int> best;
    for (const auto& e : s.history)
        if (e.ok && s.is_top_fidelity(e) && (!best || e.f < s.history[static_cast<std::size_t>(*best)].f)) best = e.index;
    return best;
}

inline int successes(const CampaignState& s) {
    int n = 0;
    for (const auto& e : s.history) n += e.ok ? 1 : 0;
    return n;
}

// Checkpoint and report whether the caller asked to stop.
inline bool checkpoint(const CampaignState& s, const CampaignHooks& hooks) {
    if (hooks.checkpoint) hooks.checkpoint(s);
    return hooks.interrupt && hooks.interrupt(s);
}

// Fit both GPs, warm-started from the previous snapshot. On failure the
// previous hyper-parameters are reused on the current data.
inline SurrogateModels fit_models(CampaignState& s, GPSnapshot& snap) {
    const GPSnapshot* prev = s.gp_snapshots.empty() ? nullptr : &s.gp_snapshots.back();
    const auto fit_seed = derive_seed(s.rng_seed, kFitStream, static_cast<std::uint64_t>(s.iteration));
    const auto t = training_set(s);
    snap.iteration = s.iteration;
    snap.n_train = static_cast<int>(t.objective.size());
    try {
        auto ro = fit_joint_gp(s.space, t.inputs, t.objective, fit_seed, s.config, prev ? &prev->objective : nullptr);
        auto rc = fit_joint_gp(s.space, t.inputs, t.log_cost, derive_seed(fit_seed, 1), s.config,
                               prev ? &prev->cost : nullptr);
        snap.objective = hyper_of(ro);
        snap.cost = hyper_of(rc);
        return SurrogateModels(s.space, std::move(ro.model), std::move(rc.model));
    } catch (const Error& ex) {
        if (!prev) throw;
        s.warnings.push_back("iteration " + std::to_string(s.iteration) + ": GP fit failed (" + ex.what() +
                             "); reusing previous hyper-parameters");
        snap.objective = prev->objective;
        snap.cost = prev->cost;
        snap.reused_previous = true;
        return SurrogateModels(s.space, model_of(prev->objective, t.inputs, t.objective), model_of(prev->cost, t.inputs, t.log_cost));
    }
}

inline std::vector<Eigen::VectorXd> evaluated_x(const CampaignState& s) {
    std::vector<Eigen::VectorXd> out;
    for (const auto& e : s.history)
        if (e.ok) out.push_back(e.x);
    return out;
}

inline void conclude(CampaignState& s, CampaignStatus status) {
    s.incumbent = best_top_fidelity(s);
    s.status = s.incumbent ? status : (status == CampaignStatus::aborted ? status : CampaignStatus::incomplete);
}

// Reserve step: evaluate the posterior-mean optimum at the top fidelity
// unless an evaluated top-fidelity point is predicted at least as good.
inline void finalize(CampaignState& s, const Evaluator& ev, const SurrogateModels* models) {
    FinalizeRecord rec;
    bool reserved_ok = true;
    if (models) {
        const auto pb = predicted_best(*models, evaluated_x(s), s.config,
                                       derive_seed(s.rng_seed, kBestStream, static_cast<std::uint64_t>(s.iteration)));
        rec.predicted_best_x = pb.x;
        rec.predicted_objective = -pb.mean_y;
        rec.predicted_cost = pb.cost;
        bool existing = false;
        for (const auto& e : s.history)
            if (e.ok && s.is_top_fidelity(e) && models->objective_at_top(e.x).first >= pb.mean_y) existing = true;
        if (existing) {
            rec.reason = "an evaluated top-fidelity design is predicted at least as good";
        } else if (s.remaining() >= pb.cost) {
            auto e = run_one(s, ev, pb.x, s.space.top_fidelity());
            rec.evaluated = true;
            rec.reason = e.ok ? "evaluated" : "final evaluation failed: " + e.error;
            if (!e.ok) s.warnings.push_back(rec.reason);
            record(s, std::move(e), Stage::final, s.iteration);
        } else {
            reserved_ok = false;
            rec.reason = "remaining budget below one top-fidelity evaluation";
            s.warnings.push_back(rec.reason);
        }
    } else {
        reserved_ok = false;
        rec.reason = "no surrogate model available";
    }
    s.finalize = rec;
    conclude(s, reserved_ok ? CampaignStatus::complete : CampaignStatus::incomplete);
}

}  // namespace detail

/// Drive a campaign until it completes, aborts or is interrupted. Every
/// decision depends only on the state, so a state restored from a checkpoint
/// continues exactly as the uninterrupted run would.
inline void advance(CampaignState& s, const Evaluator& ev, const CampaignHooks& hooks = {}) {
    if (s.status != CampaignStatus::running) return;
    const auto doe = doe_sample(s.space, doe_size(s.space, s.config), derive_seed(s.rng_seed, kDoeStream));
    const int n_doe = static_cast<int>(doe.size());

    while (static_cast<int>(s.history.size()) < n_doe) {
        const auto i = s.history.size();
        auto e = detail::run_one(s, ev, doe[i].x, doe[i].z);
        detail::record(s, std::move(e), Stage::doe, static_cast<int>(i) - n_doe);
        if (detail::checkpoint(s, hooks)) return;
    }

    for (;;) {
        if (detail::too_many_failures(s) || detail::successes(s) < 2) {
            s.warnings.push_back(detail::successes(s) < 2 ? "fewer than two successful evaluations; cannot fit surrogates"
                                                           : "more than half of the recent evaluations failed");
            detail::conclude(s, CampaignStatus::aborted);
            detail::checkpoint(s, hooks);
            return;
        }
        GPSnapshot snap;
        std::optional<SurrogateModels> models;
        try {
            models.emplace(detail::fit_models(s, snap));
        } catch (const Error& ex) {
            s.warnings.push_back(std::string("GP fit failed: ") + ex.what());
            detail::conclude(s, CampaignStatus::aborted);
            detail::checkpoint(s, hooks);
            return;
        }
        bool stop = s.iteration >= s.config.max_iterations;
        if (!stop) {
            const auto pb = predicted_best(*models, detail::evaluated_x(s), s.config,
                                           derive_seed(s.rng_seed, kBestStream, static_cast<std::uint64_t>(s.iteration)));
            stop = should_stop(s.remaining(), pb.cost, s.config.p_c);
        }
        if (stop) {
            detail::finalize(s, ev, &*models);
            detail::checkpoint(s, hooks);
            return;
        }
        const auto choice = maximize_acquisition(
            *models, s.config, derive_seed(s.rng_seed, kAcquisitionStream, static_cast<std::uint64_t>(s.iteration)));
        if (choice.fallback)
            s.warnings.push_back("iteration " + std::to_string(s.iteration) + ": acquisition not finite at any start");
        s.gp_snapshots.push_back(snap);
        auto e = detail::run_one(s, ev, choice.x, choice.z);
        detail::record(s, std::move(e), Stage::acquisition, s.iteration);
        ++s.iteration;
        if (detail::checkpoint(s, hooks)) return;
    }
}

inline CampaignState run_campaign(const DesignSpace& space, const Evaluator& ev, double budget, std::uint64_t seed,
                                  const CampaignConfig& cfg = {}, const CampaignHooks& hooks = {}) {
    auto s = new_campaign(space, budget, seed, cfg);
    advance(s, ev, hooks);
    return s;
}

/// Uniform random designs evaluated at the top fidelity until the next one
/// could overrun the budget (judged by the dearest evaluation so far).
inline CampaignState random_search(const DesignSpace& space, const Evaluator& ev, double budget, std::uint64_t seed,
                                   const CampaignConfig& cfg = {}) {
    auto s = new_campaign(space, budget, seed, cfg);
    Rng rng(derive_seed(seed, kRandomStream));
    double dearest = 0.0;
    int i = 0;
    while (s.history.empty() || s.budget_spent + dearest <= s.budget_total) {
        Eigen::VectorXd x(space.x_dim());
        for (int d = 0; d < x.size(); ++d) x[d] = space.x_lo[d] + uniform01(rng) * (space.x_hi[d] - space.x_lo[d]);
        auto e = detail::run_one(s, ev, x, space.top_fidelity());
        dearest = std::max(dearest, e.cost);
        detail::record(s, std::move(e), Stage::acquisition, i++);
    }
    detail::conclude(s, CampaignStatus::complete);
    return s;
}

/// Coil-path campaign, then a cross-section campaign on the frozen best path.
struct SequentialResult {
    CampaignState path_stage;
    CampaignState cross_section_stage;
};

inline CampaignState second_stage(const CampaignState& path_stage, double budget, std::uint64_t seed,
                                  const CampaignConfig& cfg) {
    const auto* inc = path_stage.incumbent_evaluation();
    if (!inc) throw Error("coil-path stage has no incumbent to freeze");
    const auto frozen = path_stage.space.decode(inc->x).path;
    auto s = new_campaign(DesignSpace::joint_sequential(path_stage.space.coil, frozen, path_stage.space.fidelity), budget,
                          seed, cfg);
    StageReference ref;
    ref.parameterisation = path_stage.space.kind;
    ref.rng_seed = path_stage.rng_seed;
    ref.budget_total = path_stage.budget_total;
    ref.budget_spent = path_stage.budget_spent;
    ref.incumbent_x = inc->x;
    ref.incumbent_f = inc->f;
    ref.frozen_path = frozen;
    s.previous_stage = ref;
    return s;
}

inline SequentialResult run_sequential_joint(const geometry::NominalCoil& coil, const Evaluator& ev, double path_budget,
                                             double cross_section_budget, std::uint64_t seed, const CampaignConfig& cfg = {},
                                             const flow::FidelityBox& box = {}, const CampaignHooks& hooks = {}) {
    SequentialResult r;
    r.path_stage = run_campaign(DesignSpace::coil_path(coil, box), ev, path_budget, derive_seed(seed, 1), cfg, hooks);
    if (r.path_stage.status == CampaignStatus::running) return r;
    if (r.path_stage.status != CampaignStatus::complete) {
        std::string msg = "coil-path stage ended " + to_string(r.path_stage.status);
        for (const auto& w : r.path_stage.warnings) msg += "; " + w;
        throw Error(msg);
    }
    r.cross_section_stage = second_stage(r.path_stage, cross_section_budget, derive_seed(seed, 2), cfg);
    advance(r.cross_section_stage, ev, hooks);
    return r;
}

}  // namespace coilopt::mfbo
