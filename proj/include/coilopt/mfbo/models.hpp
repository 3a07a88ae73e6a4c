#pragma once

#include "coilopt/errors.hpp"
#include "coilopt/gp/fit.hpp"
#include "coilopt/gp/gaussian_process.hpp"
#include "coilopt/mfbo/state.hpp"
#include "coilopt/random.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <utility>

namespace coilopt::mfbo {

/// Training data in the joint (x, z) space; columns are points.
struct TrainingSet {
    Eigen::MatrixXd inputs;
    Eigen::VectorXd objective;  ///< -f, so larger is better
    Eigen::VectorXd log_cost;
};

inline Eigen::VectorXd joint_point(const Eigen::VectorXd& x, const flow::FidelityVector& z) {
    Eigen::VectorXd p(x.size() + 2);
    p << x, z.axial, z.radial;
    return p;
}

inline TrainingSet training_set(const CampaignState& s) {
    int n = 0;
    for (const auto& e : s.history) n += e.ok ? 1 : 0;
    TrainingSet t;
    t.inputs.resize(s.space.dim(), n);
    t.objective.resize(n);
    t.log_cost.resize(n);
    int k = 0;
    for (const auto& e : s.history) {
        if (!e.ok) continue;
        t.inputs.col(k) = joint_point(e.x, e.z);
        t.objective[k] = -e.f;
        t.log_cost[k] = std::log(e.cost);
        ++k;
    }
    return t;
}

inline GPHyper hyper_of(const gp::FitResult& r) {
    GPHyper h;
    h.lengthscales = r.model.kernel.lengthscales;
    h.normalized_lengthscales = r.normalized_lengthscales;
    h.signal_variance = r.model.kernel.signal_variance;
    h.noise_variance = r.model.noise_variance;
    h.prior_mean = r.model.prior_mean;
    h.log_marginal_likelihood = r.log_marginal_likelihood;
    h.log_hyperparameters.assign(r.log_hyperparameters.data(), r.log_hyperparameters.data() + r.log_hyperparameters.size());
    h.used_default = r.used_default;
    return h;
}

inline gp::GPModel model_of(const GPHyper& h, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
    gp::GPModel m;
    m.kernel = gp::KernelSpec::ard(h.lengthscales, h.signal_variance);
    m.train_inputs = inputs;
    m.train_targets = targets;
    m.noise_variance = h.noise_variance;
    m.prior_mean = targets.mean();
    return m;
}

inline gp::FitBounds joint_bounds(const DesignSpace& space) {
    gp::FitBounds b;
    b.input_box = std::make_pair(space.joint_lo(), space.joint_hi());
    return b;
}

inline gp::FitResult fit_joint_gp(const DesignSpace& space, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                  std::uint64_t seed, const CampaignConfig& cfg, const GPHyper* warm) {
    if (targets.size() < 2) throw InvalidArgument("GP fitting needs at least 2 successful evaluations");
    gp::FitOptions opt;
    opt.restarts = cfg.fit_restarts;
    opt.max_iterations = cfg.fit_max_iterations;
    if (warm && !warm->log_hyperparameters.empty())
        opt.warm_start = Eigen::Map<const Eigen::VectorXd>(warm->log_hyperparameters.data(),
                                                           static_cast<Eigen::Index>(warm->log_hyperparameters.size()));
    return gp::fit_hyperparameters(inputs, targets, gp::KernelKind::ard_squared_exponential, joint_bounds(space), seed, opt);
}

inline gp::FitResult fit_objective_gp(const CampaignState& s, std::uint64_t seed, const GPHyper* warm = nullptr) {
    const auto t = training_set(s);
    return fit_joint_gp(s.space, t.inputs, t.objective, seed, s.config, warm);
}

inline gp::FitResult fit_cost_gp(const CampaignState& s, std::uint64_t seed, const GPHyper* warm = nullptr) {
    const auto t = training_set(s);
    return fit_joint_gp(s.space, t.inputs, t.log_cost, seed, s.config, warm);
}

/// Objective and cost posteriors at one iteration.
class SurrogateModels {
public:
    SurrogateModels(const DesignSpace& space, gp::GPModel objective, gp::GPModel cost)
        : space_(space), objective_(std::move(objective)), cost_(std::move(cost)) {
        const auto& y = objective_.model().train_targets;
        worst_ = y.minCoeff();
    }

    const gp::GaussianProcess& objective() const { return objective_; }
    const gp::GaussianProcess& cost() const { return cost_; }
    const DesignSpace& space() const { return space_; }
    /// Lowest observed -f; the optimistic bound is measured from here.
    double worst_observed() const { return worst_; }

    std::pair<double, double> objective_at_top(const Eigen::VectorXd& x) const {
        return objective_.predict_point(joint_point(x, space_.top_fidelity()));
    }

    double predicted_cost(const Eigen::VectorXd& x, const flow::FidelityVector& z) const {
        return std::exp(cost_.predict_mean(joint_point(x, z)));
    }

    /// Kernel correlation between (x, z) and (x, z_top): only the fidelity
    /// coordinates contribute.
    double fidelity_correlation(const flow::FidelityVector& z) const {
        const auto& ls = objective_.model().kernel.lengthscales;
        const auto d = ls.size();
        const double da = (z.axial - space_.fidelity.hi.axial) / ls[d - 2];
        const double dr = (z.radial - space_.fidelity.hi.radial) / ls[d - 1];
        return std::exp(-0.5 * (da * da + dr * dr));
    }

private:
    DesignSpace space_;
    gp::GaussianProcess objective_;
    gp::GaussianProcess cost_;
    double worst_ = 0.0;
};

}  // namespace coilopt::mfbo
