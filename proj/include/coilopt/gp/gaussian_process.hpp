#pragma once

#include "coilopt/errors.hpp"
#include "coilopt/gp/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

namespace coilopt::gp {

/// Training data plus hyper-parameters. Inputs are stored one point per
/// column (polar inputs: a 1 x n matrix of angles in radians).
struct GPModel {
    KernelSpec kernel;
    Eigen::MatrixXd train_inputs;
    Eigen::VectorXd train_targets;
    double noise_variance = 0.0;
    double prior_mean = 0.0;

    Eigen::Index size() const { return train_targets.size(); }
};

struct Posterior {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;
};

// Relative to the mean prior variance on the diagonal.
inline constexpr std::array<double, 5> kJitterLadder{1e-10, 1e-9, 1e-8, 1e-7, 1e-6};

// LLT only flags negative pivots; NaN pivots slip through.
inline bool cholesky_succeeded(const Eigen::LLT<Eigen::MatrixXd>& chol) {
    if (chol.info() != Eigen::Success) return false;
    const auto d = chol.matrixLLT().diagonal().array();
    return d.allFinite() && (d > 0.0).all();
}

/// Conditioned GP. Immutable once built; queries are const and thread-safe.
class GaussianProcess {
public:
    explicit GaussianProcess(GPModel model) : model_(std::move(model)) {
        validate(model_.kernel);
        const Eigen::Index n = model_.size();
        if (model_.train_inputs.cols() != n)
            throw InvalidArgument("train_inputs and train_targets differ in length");
        if (n > 0 && model_.train_inputs.rows() != model_.kernel.input_dim())
            throw InvalidArgument("training input dimension does not match the kernel");
        if (!(model_.noise_variance >= 0.0)) throw InvalidArgument("noise variance must be non-negative");
        if (n == 0) return;

        Eigen::MatrixXd k = covariance_matrix(model_.kernel, model_.train_inputs, model_.train_inputs);
        k.diagonal().array() += model_.noise_variance;
        factorize(k);
        residual_ = model_.train_targets.array() - model_.prior_mean;
        alpha_ = chol_.solve(residual_);
    }

    const GPModel& model() const { return model_; }
    double applied_jitter() const { return jitter_; }

    std::pair<double, double> predict_point(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        const double prior = prior_variance(model_.kernel);
        if (model_.size() == 0) return {model_.prior_mean, std::sqrt(prior)};
        Eigen::VectorXd ks(model_.size());
        for (Eigen::Index i = 0; i < ks.size(); ++i) ks[i] = covariance(model_.kernel, model_.train_inputs.col(i), x);
        const double mean = model_.prior_mean + ks.dot(alpha_);
        const Eigen::VectorXd v = chol_.matrixL().solve(ks);
        const double var = std::max(0.0, prior - v.squaredNorm());
        return {mean, std::sqrt(var)};
    }

    double predict_mean(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        if (model_.size() == 0) return model_.prior_mean;
        double mean = model_.prior_mean;
        for (Eigen::Index i = 0; i < model_.size(); ++i)
            mean += alpha_[i] * covariance(model_.kernel, model_.train_inputs.col(i), x);
        return mean;
    }

    Posterior predict(const Eigen::MatrixXd& query) const {
        Posterior out{Eigen::VectorXd(query.cols()), Eigen::VectorXd(query.cols())};
        for (Eigen::Index j = 0; j < query.cols(); ++j) {
            const auto [m, s] = predict_point(query.col(j));
            out.means[j] = m;
            out.stds[j] = s;
        }
        return out;
    }

    double log_marginal_likelihood() const {
        const auto n = static_cast<double>(model_.size());
        if (model_.size() == 0) return 0.0;
        const double log_det = 2.0 * chol_.matrixLLT().diagonal().array().log().sum();
        return -0.5 * residual_.dot(alpha_) - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
    }

private:
    void factorize(Eigen::MatrixXd& k) {
        chol_.compute(k);
        if (cholesky_succeeded(chol_)) return;
        const double scale = k.diagonal().mean();
        double added = 0.0;
        for (double rel : kJitterLadder) {
            const double jitter = rel * scale;
            k.diagonal().array() += jitter - added;
            added = jitter;
            chol_.compute(k);
            if (cholesky_succeeded(chol_)) {
                jitter_ = jitter;
                return;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        throw FactorizationError("covariance not positive definite after jitter " + std::to_string(added) +
                                     " (eigenvalues in [" + std::to_string(lo) + ", " + std::to_string(hi) + "])",
                                 added, cond);
    }

    GPModel model_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::VectorXd residual_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
};

inline Posterior gp_posterior(const GPModel& model, const Eigen::MatrixXd& query) {
    return GaussianProcess(model).predict(query);
}

}  // namespace coilopt::gp
