#pragma once

#include "coilopt/design_space.hpp"
#include "coilopt/flow/features.hpp"
#include "coilopt/geometry/coil.hpp"
#include "coilopt/rtd/rtd.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace coilopt::mfbo {

struct CampaignConfig {
    double beta = 1.5;
    double p_c = 2.0;
    double epsilon_gamma = 1e-2;
    int doe_size = 0;              ///< 0 selects max(10, dim(X) + 2)
    int acquisition_starts = 32;
    int polish_starts = 4;
    int max_iterations = 80;       ///< acquisition iterations before finalizing regardless of budget
    int fit_restarts = 1;          ///< random restarts per GP fit, in addition to the warm start
    int fit_max_iterations = 60;
    double failure_cost = 0.01;    ///< cost booked for a failed evaluation
    int failure_window = 10;       ///< abort when more than half of this many trailing attempts failed
    bool keep_raw = false;         ///< store raw outlet series in the history

    bool operator==(const CampaignConfig&) const = default;
};

enum class Stage { doe, acquisition, final };

inline std::string to_string(Stage s) {
    switch (s) {
        case Stage::doe: return "doe";
        case Stage::acquisition: return "acquisition";
        case Stage::final: return "final";
    }
    return "unknown";
}

inline Stage stage_from_string(const std::string& s) {
    if (s == "doe") return Stage::doe;
    if (s == "acquisition") return Stage::acquisition;
    if (s == "final") return Stage::final;
    throw InvalidArgument("unknown stage '" + s + "'");
}

struct Evaluation {
    int index = 0;
    int iteration = 0;  ///< negative during the design of experiments
    Stage stage = Stage::doe;
    Eigen::VectorXd x;
    flow::FidelityVector z_requested;
    flow::FidelityVector z;  ///< rounded, as evaluated
    bool ok = false;
    std::string error;
    double f = std::numeric_limits<double>::quiet_NaN();
    double n_star = std::numeric_limits<double>::quiet_NaN();
    double mse = std::numeric_limits<double>::quiet_NaN();
    double cost = 0.0;
    std::uint64_t seed = 0;
    double wall_clock_stamp = 0.0;  ///< cumulative simulated cost after this evaluation
    rtd::RTDCurve rtd;
    std::string rtd_digest;
    std::optional<rtd::TimeSeries> raw;
};

/// Hyper-parameters of one fitted GP. Lengthscales are given in raw input
/// units and relative to the design-space box.
struct GPHyper {
    std::vector<double> lengthscales;
    std::vector<double> normalized_lengthscales;
    double signal_variance = 1.0;
    double noise_variance = 0.0;
    double prior_mean = 0.0;
    double log_marginal_likelihood = 0.0;
    std::vector<double> log_hyperparameters;
    bool used_default = false;
};

struct GPSnapshot {
    int iteration = 0;
    int n_train = 0;
    GPHyper objective;
    GPHyper cost;
    bool reused_previous = false;  ///< fitting failed and the previous snapshot was reused
};

enum class CampaignStatus { running, complete, incomplete, aborted };

inline std::string to_string(CampaignStatus s) {
    switch (s) {
        case CampaignStatus::running: return "running";
        case CampaignStatus::complete: return "complete";
        case CampaignStatus::incomplete: return "incomplete";
        case CampaignStatus::aborted: return "aborted";
    }
    return "unknown";
}

inline CampaignStatus status_from_string(const std::string& s) {
    if (s == "running") return CampaignStatus::running;
    if (s == "complete") return CampaignStatus::complete;
    if (s == "incomplete") return CampaignStatus::incomplete;
    if (s == "aborted") return CampaignStatus::aborted;
    throw InvalidArgument("unknown campaign status '" + s + "'");
}

struct FinalizeRecord {
    Eigen::VectorXd predicted_best_x;
    double predicted_objective = 0.0;  ///< posterior mean of f at the top fidelity
    double predicted_cost = 0.0;
    bool evaluated = false;
    std::string reason;
};

/// Summary of the first (coil-path) stage of a sequential joint run.
struct StageReference {
    Parameterisation parameterisation = Parameterisation::coil_path;
    std::uint64_t rng_seed = 0;
    double budget_total = 0.0;
    double budget_spent = 0.0;
    Eigen::VectorXd incumbent_x;
    double incumbent_f = 0.0;
    geometry::PathParams frozen_path;
};

struct CampaignState {
    DesignSpace space;
    CampaignConfig config;
    std::uint64_t rng_seed = 0;
    double budget_total = 0.0;
    double budget_spent = 0.0;
    std::vector<Evaluation> history;
    std::vector<GPSnapshot> gp_snapshots;
    std::optional<int> incumbent;  ///< index into history
    CampaignStatus status = CampaignStatus::running;
    int iteration = 0;             ///< next acquisition iteration
    std::vector<std::string> warnings;
    std::optional<FinalizeRecord> finalize;
    std::optional<StageReference> previous_stage;

    double remaining() const { return budget_total - budget_spent; }

    const Evaluation* incumbent_evaluation() const {
        return incumbent ? &history[static_cast<std::size_t>(*incumbent)] : nullptr;
    }

    bool is_top_fidelity(const Evaluation& e) const { return e.z == space.top_fidelity(); }
};

/// Running minimum of f over successful top-fidelity evaluations, one entry
/// per history item (NaN until the first such evaluation).
inline std::vector<double> best_so_far(const CampaignState& s) {
    std::vector<double> out;
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const auto& e : s.history) {
        if (e.ok && s.is_top_fidelity(e) && !(e.f >= best)) best = e.f;
        out.push_back(best);
    }
    return out;
}

}  // namespace coilopt::mfbo
