#pragma once

// Cheap analytic evaluators for optimizer tests. The outlet trace is an exact
// tanks-in-series curve whose N depends on x, so the objective is known.

#include "coilopt/design_space.hpp"
#include "coilopt/errors.hpp"
#include "coilopt/evaluator.hpp"
#include "coilopt/random.hpp"
#include "coilopt/rtd/rtd.hpp"

#include <Eigen/Core>

#include <cmath>
#include <vector>

namespace coilopt::testing {

/// N = n_lo + (n_hi - n_lo) * sum(w_i u_i) / sum(w_i), u the normalized x.
/// Lower fidelities see a slightly smaller N and some multiplicative noise.
class ToyEvaluator : public Evaluator {
public:
    std::vector<double> weights;
    double n_lo = 5.0;
    double n_hi = 30.0;
    double unit_cost = 0.05;
    double noise = 0.01;

    double tanks(const DesignSpace& space, const Eigen::VectorXd& x, const flow::FidelityVector& z) const {
        double s = 0.0, w = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double wi = i < static_cast<Eigen::Index>(weights.size()) ? weights[static_cast<std::size_t>(i)] : 1.0;
            s += wi * (x[i] - space.x_lo[i]) / (space.x_hi[i] - space.x_lo[i]);
            w += wi;
        }
        const double gap = space.fidelity.mean_normalized(z.rounded());
        return (n_lo + (n_hi - n_lo) * s / w) * (0.95 + 0.05 * gap);
    }

    flow::SimulationResult evaluate(const DesignSpace& space, const Eigen::VectorXd& x, const flow::FidelityVector& z,
                                    std::uint64_t seed) const override {
        space.check_x(x);
        space.check_z(z);
        const auto zr = z.rounded();
        const double n = tanks(space, x, z);
        const double gap = space.fidelity.mean_normalized(zr);
        Rng rng(seed);
        flow::SimulationResult r;
        for (int i = 0; i <= 300; ++i) {
            const double t = 4.0 * i / 300.0;
            double c = rtd::tanks_model(n, t);
            if (i > 0) c *= 1.0 + noise * (1.0 - gap) * standard_normal(rng);
            r.outlet_series.time.push_back(t);
            r.outlet_series.concentration.push_back(std::max(c, 0.0));
        }
        r.cost = unit_cost * zr.axial * zr.radial * (1.0 + 0.1 * (x[0] - space.x_lo[0]) / (space.x_hi[0] - space.x_lo[0]));
        r.fidelity_used = zr;
        r.seed = seed;
        r.flow_rate = 1.0;
        r.steps = 1;
        return r;
    }
};

/// Fails every call.
class FailingEvaluator : public Evaluator {
public:
    flow::SimulationResult evaluate(const DesignSpace&, const Eigen::VectorXd&, const flow::FidelityVector&,
                                    std::uint64_t) const override {
        throw SolverFailure("synthetic failure");
    }
};

/// A space with `dims` generic coordinates in [0, 1]; only toy evaluators
/// can evaluate it (decode is meaningless).
inline DesignSpace unit_space(int dims, const flow::FidelityBox& box = {}) {
    DesignSpace s;
    s.fixed_path = geometry::PathParams::zero(s.coil);
    s.fidelity = box;
    s.x_lo = Eigen::VectorXd::Zero(dims);
    s.x_hi = Eigen::VectorXd::Ones(dims);
    for (int i = 0; i < dims; ++i) s.labels.push_back("u_" + std::to_string(i));
    return s;
}

}  // namespace coilopt::testing
