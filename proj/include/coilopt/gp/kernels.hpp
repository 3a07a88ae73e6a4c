#pragma once

#include "coilopt/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace coilopt::gp {

enum class KernelKind { ard_squared_exponential, polar };

inline const char* to_string(KernelKind kind) {
    return kind == KernelKind::polar ? "polar" : "ard-squared-exponential";
}

inline KernelKind kernel_kind_from_string(const std::string& s) {
    if (s == "polar") return KernelKind::polar;
    if (s == "ard-squared-exponential") return KernelKind::ard_squared_exponential;
    throw InvalidArgument("unknown kernel kind '" + s + "'");
}

/// Kernel hyper-parameters. `lengthscales` is used by the ARD kernel only,
/// `tau` by the polar kernel only. `signal_variance` scales either kernel
/// (the polar correlation is multiplied by it).
struct KernelSpec {
    KernelKind kind = KernelKind::ard_squared_exponential;
    std::vector<double> lengthscales;
    double signal_variance = 1.0;
    double tau = 4.0;

    static KernelSpec ard(std::vector<double> lengthscales, double signal_variance = 1.0) {
        return {KernelKind::ard_squared_exponential, std::move(lengthscales), signal_variance, 4.0};
    }
    static KernelSpec polar(double tau = 4.0, double signal_variance = 1.0) {
        return {KernelKind::polar, {}, signal_variance, tau};
    }

    int input_dim() const { return kind == KernelKind::polar ? 1 : static_cast<int>(lengthscales.size()); }

    bool operator==(const KernelSpec&) const = default;
};

inline void validate(const KernelSpec& spec) {
    if (!(spec.signal_variance > 0.0)) throw InvalidArgument("signal variance must be positive");
    if (spec.kind == KernelKind::polar) {
        if (!(spec.tau >= 4.0)) throw InvalidArgument("polar kernel requires tau >= 4, got " + std::to_string(spec.tau));
        return;
    }
    if (spec.lengthscales.empty()) throw InvalidArgument("ARD kernel needs at least one lengthscale");
    for (double l : spec.lengthscales)
        if (!(l > 0.0) || !std::isfinite(l)) throw InvalidArgument("lengthscales must be positive and finite");
}

/// Angular distance in [0, pi] using a floored modulus, so any finite angles
/// are accepted and wrap-around is handled.
inline double polar_distance(double theta, double theta_prime) {
    constexpr double pi = std::numbers::pi;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    // ordered arguments make the result bitwise symmetric
    if (theta < theta_prime) std::swap(theta, theta_prime);
    double m = std::fmod(theta - theta_prime + pi, two_pi);
    if (m < 0.0) m += two_pi;
    return std::min(std::abs(m - pi), pi);
}

/// Polar correlation |(1 + tau d/pi)(1 - d/pi)^tau|, valid (PSD) for tau >= 4.
inline double polar_kernel(double theta, double theta_prime, double tau) {
    if (!(tau >= 4.0)) throw InvalidArgument("polar kernel requires tau >= 4, got " + std::to_string(tau));
    const double r = polar_distance(theta, theta_prime) / std::numbers::pi;
    return std::abs((1.0 + tau * r) * std::pow(1.0 - r, tau));
}

inline double ard_se_kernel(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& x_prime,
                            const KernelSpec& spec) {
    const auto dim = static_cast<Eigen::Index>(spec.lengthscales.size());
    if (x.size() != dim || x_prime.size() != dim)
        throw InvalidArgument("ARD kernel dimension mismatch: expected " + std::to_string(dim) + ", got " +
                              std::to_string(x.size()) + " and " + std::to_string(x_prime.size()));
    double q = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double r = (x[i] - x_prime[i]) / spec.lengthscales[static_cast<std::size_t>(i)];
        q += r * r;
    }
    return spec.signal_variance * std::exp(-0.5 * q);
}

/// Covariance between two inputs under either kernel. Polar inputs are
/// one-element vectors holding an angle in radians.
inline double covariance(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& a,
                         const Eigen::Ref<const Eigen::VectorXd>& b) {
    if (spec.kind == KernelKind::polar) return spec.signal_variance * polar_kernel(a[0], b[0], spec.tau);
    return ard_se_kernel(a, b, spec);
}

/// Cross-covariance matrix; inputs are stored one point per column.
inline Eigen::MatrixXd covariance_matrix(const KernelSpec& spec, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd k(a.cols(), b.cols());
    for (Eigen::Index j = 0; j < b.cols(); ++j)
        for (Eigen::Index i = 0; i < a.cols(); ++i) k(i, j) = covariance(spec, a.col(i), b.col(j));
    return k;
}

inline double prior_variance(const KernelSpec& spec) { return spec.signal_variance; }

}  // namespace coilopt::gp
