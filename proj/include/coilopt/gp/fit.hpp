#pragma once

// Maximum-marginal-likelihood hyper-parameter fitting.
//
// Fitting happens in a normalized space: inputs mapped to the unit box and
// targets standardized. The ARD-SE kernel is equivariant under both maps, so
// the fitted hyper-parameters are converted back to raw units and the
// returned GPModel predicts directly on raw inputs and targets.

#include "coilopt/errors.hpp"
#include "coilopt/gp/gaussian_process.hpp"
#include "coilopt/gp/kernels.hpp"
#include "coilopt/optim/box_search.hpp"
#include "coilopt/optim/lhs.hpp"
#include "coilopt/random.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace coilopt::gp {

struct Interval {
    double lo;
    double hi;
};

struct FitBounds {
    Interval lengthscale{1e-2, 1e2};      ///< normalized input units
    Interval signal_variance{1e-4, 1e2};  ///< standardized target units
    Interval noise_variance{1e-8, 1e-1};  ///< standardized target units
    Interval tau{4.0, 64.0};
    std::optional<double> fixed_noise;  ///< standardized units; skips noise fitting
    /// Per-dimension input box used for normalization (ARD only). Defaults to
    /// the observed data range.
    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> input_box;
};

struct FitOptions {
    int restarts = 6;
    int max_iterations = 150;
    /// Extra start in normalized log-hyper-parameter space (same layout as
    /// FitResult::log_hyperparameters), e.g. the previous iteration's optimum.
    std::optional<Eigen::VectorXd> warm_start;
};

struct FitResult {
    GPModel model;
    /// Fitted lengthscales in normalized (unit-box) input units; empty for polar.
    std::vector<double> normalized_lengthscales;
    /// Optimum in normalized log space: ARD [log l_1..l_D, log s2, (log noise)],
    /// polar [log tau, log s2, (log noise)].
    Eigen::VectorXd log_hyperparameters;
    double log_marginal_likelihood = -std::numeric_limits<double>::infinity();  ///< standardized targets
    std::vector<double> start_log_marginal_likelihoods;
    bool used_default = false;  ///< true when no restart beat the prior-default model
};

namespace detail {

class NegLogMarginal {
public:
    NegLogMarginal(KernelKind kind, Eigen::MatrixXd u, Eigen::VectorXd y, std::optional<double> fixed_noise)
        : kind_(kind), u_(std::move(u)), y_(std::move(y)), fixed_noise_(fixed_noise) {
        const Eigen::Index n = u_.cols();
        if (kind_ == KernelKind::ard_squared_exponential) {
            sq_diff_.resize(static_cast<std::size_t>(u_.rows()));
            for (Eigen::Index d = 0; d < u_.rows(); ++d) {
                auto& s = sq_diff_[static_cast<std::size_t>(d)];
                s.resize(n, n);
                for (Eigen::Index j = 0; j < n; ++j)
                    for (Eigen::Index i = 0; i < n; ++i) {
                        const double r = u_(d, i) - u_(d, j);
                        s(i, j) = r * r;
                    }
            }
        } else {
            dist_.resize(n, n);
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < n; ++i) dist_(i, j) = polar_distance(u_(0, i), u_(0, j)) / std::numbers::pi;
        }
    }

    int dim() const {
        const int base = kind_ == KernelKind::polar ? 2 : static_cast<int>(u_.rows()) + 1;
        return base + (fixed_noise_ ? 0 : 1);
    }

    double noise(const Eigen::VectorXd& theta) const {
        return fixed_noise_ ? *fixed_noise_ : std::exp(theta[theta.size() - 1]);
    }

    /// Value and analytic gradient (ARD) or central-difference gradient (polar).
    double operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
        grad.setZero(theta.size());
        if (kind_ == KernelKind::polar) {
            const double f = value(theta);
            if (!std::isfinite(f)) return f;
            for (Eigen::Index i = 0; i < theta.size(); ++i) {
                const double h = 1e-5;
                Eigen::VectorXd tp = theta, tm = theta;
                tp[i] += h;
                tm[i] -= h;
                grad[i] = (value(tp) - value(tm)) / (2 * h);
            }
            return f;
        }
        return ard_value_and_gradient(theta, &grad);
    }

    double value(const Eigen::VectorXd& theta) const {
        if (kind_ == KernelKind::ard_squared_exponential) return ard_value_and_gradient(theta, nullptr);
        const double tau = std::exp(theta[0]);
        const double s2 = std::exp(theta[1]);
        const Eigen::Index n = u_.cols();
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) {
                const double r = dist_(i, j);
                k(i, j) = s2 * std::abs((1.0 + tau * r) * std::pow(1.0 - r, tau));
            }
        k.diagonal().array() += noise(theta);
        Eigen::LLT<Eigen::MatrixXd> chol;
        if (!factor(k, chol)) return std::numeric_limits<double>::infinity();
        const Eigen::VectorXd alpha = chol.solve(y_);
        return nlml(chol, alpha);
    }

private:
    static bool factor(Eigen::MatrixXd& k, Eigen::LLT<Eigen::MatrixXd>& chol) {
        chol.compute(k);
        if (cholesky_succeeded(chol)) return true;
        const double scale = k.diagonal().mean();
        double added = 0.0;
        for (double rel : kJitterLadder) {
            k.diagonal().array() += rel * scale - added;
            added = rel * scale;
            chol.compute(k);
            if (cholesky_succeeded(chol)) return true;
        }
        return false;
    }

    double nlml(const Eigen::LLT<Eigen::MatrixXd>& chol, const Eigen::VectorXd& alpha) const {
        const double log_det = 2.0 * chol.matrixLLT().diagonal().array().log().sum();
        return 0.5 * y_.dot(alpha) + 0.5 * log_det + 0.5 * static_cast<double>(y_.size()) * std::log(2.0 * std::numbers::pi);
    }

    double ard_value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
        const Eigen::Index n = u_.cols();
        const Eigen::Index dims = u_.rows();
        const double s2 = std::exp(theta[dims]);
        const double noise_var = noise(theta);

        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index d = 0; d < dims; ++d) q += sq_diff_[static_cast<std::size_t>(d)] * std::exp(-2.0 * theta[d]);
        const Eigen::MatrixXd k_se = s2 * (-0.5 * q.array()).exp().matrix();
        Eigen::MatrixXd k = k_se;
        k.diagonal().array() += noise_var;

        Eigen::LLT<Eigen::MatrixXd> chol;
        if (!factor(k, chol)) return std::numeric_limits<double>::infinity();
        const Eigen::VectorXd alpha = chol.solve(y_);
        const double f = nlml(chol, alpha);
        if (grad == nullptr || !std::isfinite(f)) return f;

        // dL/dtheta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta); we return the negative
        const Eigen::MatrixXd w = alpha * alpha.transpose() - chol.solve(Eigen::MatrixXd::Identity(n, n));
        const Eigen::MatrixXd wk = w.cwiseProduct(k_se);
        for (Eigen::Index d = 0; d < dims; ++d)
            (*grad)[d] = -0.5 * std::exp(-2.0 * theta[d]) * wk.cwiseProduct(sq_diff_[static_cast<std::size_t>(d)]).sum();
        (*grad)[dims] = -0.5 * wk.sum();
        if (!fixed_noise_) (*grad)[dims + 1] = -0.5 * noise_var * w.trace();
        return f;
    }

    KernelKind kind_;
    Eigen::MatrixXd u_;
    Eigen::VectorXd y_;
    std::optional<double> fixed_noise_;
    std::vector<Eigen::MatrixXd> sq_diff_;
    Eigen::MatrixXd dist_;
};

}  // namespace detail

/// Fit kernel hyper-parameters by maximizing the log marginal likelihood with
/// multi-start bounded local search. Starts are a Latin hypercube over the
/// log-hyper-parameter box (plus `options.warm_start`). The prior mean is the
/// arithmetic mean of the targets. Deterministic for a given seed.
inline FitResult fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, KernelKind kind,
                                     const FitBounds& bounds, std::uint64_t seed, const FitOptions& options = {}) {
    const Eigen::Index n = targets.size();
    if (n < 2) throw InvalidArgument("hyper-parameter fitting needs at least 2 data points");
    if (inputs.cols() != n) throw InvalidArgument("inputs and targets differ in length");
    if (kind == KernelKind::polar && inputs.rows() != 1) throw InvalidArgument("polar kernel takes scalar angles");

    const Eigen::Index dims = inputs.rows();
    Eigen::VectorXd lo(dims), width(dims);
    if (kind == KernelKind::ard_squared_exponential) {
        if (bounds.input_box) {
            lo = bounds.input_box->first;
            width = bounds.input_box->second - bounds.input_box->first;
            if (lo.size() != dims || width.size() != dims) throw InvalidArgument("input box dimension mismatch");
        } else {
            lo = inputs.rowwise().minCoeff();
            width = inputs.rowwise().maxCoeff() - lo;
        }
        for (Eigen::Index d = 0; d < dims; ++d)
            if (!(width[d] > 0.0)) width[d] = 1.0;
    } else {
        lo.setZero();
        width.setOnes();
    }
    const Eigen::MatrixXd u = (inputs.colwise() - lo).array().colwise() / width.array();

    const double mean = targets.mean();
    double scale = std::sqrt((targets.array() - mean).square().mean());
    if (!(scale > 1e-12 * std::max(1.0, std::abs(mean)))) scale = 1.0;
    const Eigen::VectorXd y = (targets.array() - mean) / scale;

    const detail::NegLogMarginal objective(kind, u, y, bounds.fixed_noise);
    const int p = objective.dim();
    Eigen::VectorXd box_lo(p), box_hi(p), defaults(p);
    int k = 0;
    if (kind == KernelKind::ard_squared_exponential) {
        for (; k < dims; ++k) {
            box_lo[k] = std::log(bounds.lengthscale.lo);
            box_hi[k] = std::log(bounds.lengthscale.hi);
            defaults[k] = std::clamp(0.0, box_lo[k], box_hi[k]);
        }
    } else {
        box_lo[k] = std::log(bounds.tau.lo);
        box_hi[k] = std::log(bounds.tau.hi);
        defaults[k] = box_lo[k];
        ++k;
    }
    box_lo[k] = std::log(bounds.signal_variance.lo);
    box_hi[k] = std::log(bounds.signal_variance.hi);
    defaults[k] = std::clamp(0.0, box_lo[k], box_hi[k]);
    ++k;
    if (!bounds.fixed_noise) {
        box_lo[k] = std::log(bounds.noise_variance.lo);
        box_hi[k] = std::log(bounds.noise_variance.hi);
        defaults[k] = std::clamp(std::log(1e-4), box_lo[k], box_hi[k]);
    }

    Rng rng(seed);
    const Eigen::MatrixXd starts_unit = optim::latin_hypercube(std::max(1, options.restarts), p, rng);
    std::vector<Eigen::VectorXd> starts;
    for (Eigen::Index r = 0; r < starts_unit.rows(); ++r)
        starts.emplace_back(box_lo.array() + starts_unit.row(r).transpose().array() * (box_hi - box_lo).array());
    if (options.warm_start && options.warm_start->size() == p) starts.push_back(optim::project(*options.warm_start, box_lo, box_hi));

    FitResult result;
    optim::SpgOptions spg;
    spg.max_iterations = options.max_iterations;
    auto fg = [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) { return objective(t, g); };

    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta = defaults;
    for (const auto& start : starts) {
        result.start_log_marginal_likelihoods.push_back(-objective.value(start));
        const auto m = optim::minimize_spg(fg, start, box_lo, box_hi, spg);
        if (std::isfinite(m.value) && m.value < best) {
            best = m.value;
            best_theta = m.x;
        }
    }
    const double default_value = objective.value(defaults);
    if (!std::isfinite(best) || (std::isfinite(default_value) && best > default_value)) {
        result.used_default = true;
        best_theta = defaults;
        best = default_value;
    }

    result.log_hyperparameters = best_theta;
    result.log_marginal_likelihood = -best;
    GPModel& model = result.model;
    model.train_inputs = inputs;
    model.train_targets = targets;
    model.prior_mean = mean;
    const double s2 = std::exp(best_theta[kind == KernelKind::polar ? 1 : dims]);
    model.noise_variance = objective.noise(best_theta) * scale * scale;
    if (kind == KernelKind::polar) {
        model.kernel = KernelSpec::polar(std::max(4.0, std::exp(best_theta[0])), s2 * scale * scale);
    } else {
        std::vector<double> ls(static_cast<std::size_t>(dims));
        for (Eigen::Index d = 0; d < dims; ++d) {
            const double l = std::exp(best_theta[d]);
            result.normalized_lengthscales.push_back(l);
            ls[static_cast<std::size_t>(d)] = l * width[d];
        }
        model.kernel = KernelSpec::ard(std::move(ls), s2 * scale * scale);
    }
    return result;
}

}  // namespace coilopt::gp
