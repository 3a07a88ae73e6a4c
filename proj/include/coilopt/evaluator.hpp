#pragma once

#include "coilopt/design_space.hpp"
#include "coilopt/errors.hpp"
#include "coilopt/flow/features.hpp"
#include "coilopt/flow/surrogate.hpp"
#include "coilopt/geometry/loft.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace coilopt {

/// Black-box contract: (space, x, z, seed) -> outlet trace and cost.
/// Implementations must be deterministic in (x, rounded z, seed).
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual flow::SimulationResult evaluate(const DesignSpace& space, const Eigen::VectorXd& x, const flow::FidelityVector& z,
                                            std::uint64_t seed) const = 0;
};

/// Built-in reduced-order surrogate.
class SurrogateEvaluator : public Evaluator {
public:
    flow::SurrogateConstants constants;
    geometry::Tessellation tessellation;
    bool validate_geometry = true;

    flow::GeometryFeatures features(const DesignSpace& space, const Eigen::VectorXd& x, const flow::FidelityVector& z) const {
        const auto design = space.decode(x);
        const geometry::FramedPath path = geometry::framed_path(design, space.coil, tessellation);
        const auto field = geometry::RadiusField::build(space.coil, design.cross_sections, path.line.length(), constants.ring_samples);
        return flow::extract_features(path, field, flow::cell_count(space.coil, z.rounded(), constants), constants);
    }

    flow::SimulationResult evaluate(const DesignSpace& space, const Eigen::VectorXd& x, const flow::FidelityVector& z,
                                    std::uint64_t seed) const override {
        space.check_z(z);
        const auto design = space.decode(x);
        if (validate_geometry) geometry::build_reactor(design, space.coil, tessellation);
        const auto f = features(space, x, z);
        const double q = flow::flow_rate(space.coil, constants);
        const auto d = flow::dispersion_profile(f, q, constants);
        flow::SimulationOptions opt;
        opt.box = space.fidelity;
        return flow::simulate_rtd(f, d, q, z, seed, constants, opt);
    }
};

}  // namespace coilopt
