#include "coilopt/evaluator.hpp"
#include "coilopt/flow/features.hpp"
#include "coilopt/flow/surrogate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace coilopt;
using namespace coilopt::flow;

namespace {

constexpr double kPi = std::numbers::pi;

GeometryFeatures straight_features(double length, double radius, int cells, const SurrogateConstants& k = {}) {
    const geometry::FramedPath path(geometry::straight_path(length, 200));
    const geometry::RadiusField field({0.0, length}, {std::vector<double>(48, radius), std::vector<double>(48, radius)});
    return extract_features(path, field, cells, k);
}

double mean_time(const rtd::TimeSeries& s) {
    return rtd::first_moment(s.time, s.concentration) / rtd::trapezoid(s.time, s.concentration);
}

double variance_time(const rtd::TimeSeries& s) {
    const double m = mean_time(s);
    std::vector<double> sq(s.time.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (s.time[i] - m) * (s.time[i] - m) * s.concentration[i];
    return rtd::trapezoid(s.time, sq) / rtd::trapezoid(s.time, s.concentration);
}

Eigen::VectorXd nominal_radii(const DesignSpace& s) { return Eigen::VectorXd::Constant(s.x_dim(), 3.0); }

}  // namespace

TEST(Features, NominalCoil) {
    const geometry::NominalCoil coil;
    const DesignSpace space = DesignSpace::cross_section(coil);
    const SurrogateEvaluator ev;
    const auto f = ev.features(space, nominal_radii(space), {1, 1});
    ASSERT_EQ(f.size(), 100u);
    for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_NEAR(f.area[i], kPi * 9.0, 0.02 * kPi * 9.0);
        EXPECT_NEAR(f.curvature[i], 1.0 / 12.5, 0.02 / 12.5);
        EXPECT_NEAR(f.pinch[i], 1.0, 1e-9);
        EXPECT_NEAR(f.hydraulic_radius[i], 3.0, 0.01);
    }
}

TEST(Features, PinchedRingsAndStraightTube) {
    const geometry::FramedPath path(geometry::straight_path(50.0, 100));
    const std::vector<double> alt{2, 4, 2, 4, 2, 4};
    const auto ring = geometry::interpolate_cross_section(alt, 48).radii;
    const geometry::RadiusField field({0.0, 25.0, 50.0}, {ring, ring, ring});
    const auto f = extract_features(path, field, 20);
    for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_LE(f.pinch[i], 0.5 + 1e-9);
        EXPECT_EQ(f.curvature[i], 0.0);
        EXPECT_EQ(f.dean[i], 0.0);
    }
}

TEST(Dispersion, NeutralModifierAndMonotonicity) {
    const SurrogateConstants k;
    EXPECT_DOUBLE_EQ(dispersion_modifier(0.0, 1.0, k), 1.0);
    auto f = straight_features(60.0, 3.0, 30);
    const double q = flow_rate(geometry::NominalCoil{}, k);
    const auto d = dispersion_profile(f, q, k);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_DOUBLE_EQ(d[i], base_dispersion(q / f.area[i], f.hydraulic_radius[i], k));
        EXPECT_DOUBLE_EQ(d[i], d[0]);
    }
    for (double dean : {0.0, 0.5, 3.0, 20.0, 80.0})
        for (double pinch : {0.2, 0.6, 1.0}) {
            const double g = dispersion_modifier(dean, pinch, k);
            EXPECT_LE(dispersion_modifier(2 * dean, pinch, k), g);
            EXPECT_GE(g, k.g_min);
            EXPECT_LE(g, 1.0);
            if (pinch < 1.0) EXPECT_LT(g, dispersion_modifier(dean, 1.0, k));
        }
}

TEST(Surrogate, PlugFlowArrivesAtResidenceTime) {
    const double length = 100.0;
    const auto f = straight_features(length, 3.0, 200);
    const double q = flow_rate(geometry::NominalCoil{}, {});
    SimulationOptions quiet;
    quiet.noise = false;
    const auto res = simulate_rtd(f, std::vector<double>(f.size(), 0.0), q, {1, 1}, 0, {}, quiet);
    const double u = q / f.area[0];
    EXPECT_NEAR(mean_time(res.outlet_series), length / u, f.cell_length() / u);
    EXPECT_NEAR(recovered_mass(res), 1.0, 0.005);
}

TEST(Surrogate, StraightTubeMatchesAxialDispersion) {
    // closed-closed axial dispersion: var(theta) = 2/Pe - 2/Pe^2 (1 - exp(-Pe))
    const double length = 150.0;
    const auto f = straight_features(length, 3.0, 600);
    const double q = flow_rate(geometry::NominalCoil{}, {});
    const double u = q / f.area[0];
    const double d = 20.0;
    SimulationOptions quiet;
    quiet.noise = false;
    const auto res = simulate_rtd(f, std::vector<double>(f.size(), d), q, {4, 1}, 0, {}, quiet);
    EXPECT_NEAR(recovered_mass(res), 1.0, 0.005);
    // first-order upwind adds about u dx / 2 of numerical dispersion
    const double d_eff = d + 0.5 * u * f.cell_length();
    const double pe = u * length / d_eff;
    const double expected = 2 / pe - 2 / (pe * pe) * (1 - std::exp(-pe));
    const double tm = mean_time(res.outlet_series);
    EXPECT_NEAR(tm, length / u, 0.02 * length / u);
    EXPECT_NEAR(variance_time(res.outlet_series) / (tm * tm), expected, 0.1 * expected);
}

TEST(Surrogate, ShearChannelsAddTaylorDispersion) {
    // same total dispersion split between diffusion and channel shear gives
    // a similar spread
    const double length = 150.0;
    const auto f = straight_features(length, 3.0, 400);
    const double q = flow_rate(geometry::NominalCoil{}, {});
    const std::vector<double> d(f.size(), 20.0);
    SimulationOptions quiet;
    quiet.noise = false;
    const auto one = simulate_rtd(f, d, q, {4, 1}, 0, {}, quiet);
    const auto four = simulate_rtd(f, d, q, {4, 4}, 0, {}, quiet);
    const double v1 = variance_time(one.outlet_series), v4 = variance_time(four.outlet_series);
    EXPECT_NEAR(v4, v1, 0.15 * v1);
    EXPECT_NEAR(recovered_mass(four), 1.0, 0.005);
}

TEST(Surrogate, ChannelWeightsAverageToOne) {
    for (int r = 1; r <= 6; ++r) {
        const auto w = channel_weights(r);
        double s = 0;
        for (double x : w) s += x;
        EXPECT_NEAR(s / r, 1.0, 1e-14);
    }
    EXPECT_EQ(exchange_constant(channel_weights(1)), 0.0);
    // two channels at 1.5 and 0.5: partial sum 0.5, squared, over 2
    EXPECT_DOUBLE_EQ(exchange_constant(channel_weights(2)), 0.125);
}

TEST(Surrogate, MassConservedAtEveryFidelity) {
    const geometry::NominalCoil coil;
    const DesignSpace space = DesignSpace::cross_section(coil);
    SurrogateEvaluator ev;
    ev.validate_geometry = false;
    Eigen::VectorXd x = nominal_radii(space);
    for (int i = 0; i < x.size(); i += 2) x[i] = 2.4;
    for (int a = 1; a <= 4; ++a)
        for (int r = 1; r <= 4; ++r) {
            const auto res = ev.evaluate(space, x, {double(a), double(r)}, 7);
            EXPECT_NEAR(recovered_mass(res), 1.0, 0.005) << a << "," << r;
            for (double c : res.outlet_series.concentration) ASSERT_GE(c, 0.0);
            const auto& c = res.outlet_series.concentration;
            if (a == 4 && r == 4) EXPECT_LT(c.back(), 0.01 * *std::max_element(c.begin(), c.end()));
        }
}

TEST(Surrogate, DeterministicAndNoiseFreeAtTopFidelity) {
    const geometry::NominalCoil coil;
    const DesignSpace space = DesignSpace::cross_section(coil);
    SurrogateEvaluator ev;
    const auto x = nominal_radii(space);
    const auto a = ev.evaluate(space, x, {2.3, 1.6}, 42);
    const auto b = ev.evaluate(space, x, {2.3, 1.6}, 42);
    EXPECT_EQ(a.outlet_series.concentration, b.outlet_series.concentration);
    EXPECT_EQ(a.cost, b.cost);
    EXPECT_EQ(a.fidelity_used, (FidelityVector{2, 2}));
    const auto c = ev.evaluate(space, x, {2, 2}, 43);
    EXPECT_NE(a.outlet_series.concentration, c.outlet_series.concentration);
    const auto top1 = ev.evaluate(space, x, {4, 4}, 1);
    const auto top2 = ev.evaluate(space, x, {4, 4}, 2);
    EXPECT_EQ(top1.outlet_series.concentration, top2.outlet_series.concentration);
}

TEST(Surrogate, CostMonotoneInEachFidelity) {
    const geometry::NominalCoil coil;
    const DesignSpace space = DesignSpace::cross_section(coil);
    SurrogateEvaluator ev;
    ev.validate_geometry = false;
    const auto x = nominal_radii(space);
    double cost[5][5];
    for (int a = 1; a <= 4; ++a)
        for (int r = 1; r <= 4; ++r) cost[a][r] = ev.evaluate(space, x, {double(a), double(r)}, 0).cost;
    for (int a = 1; a <= 4; ++a)
        for (int r = 1; r <= 4; ++r) {
            EXPECT_GT(cost[a][r], 0.0);
            if (a < 4) EXPECT_LT(cost[a][r], cost[a + 1][r]);
            if (r < 4) EXPECT_LT(cost[a][r], cost[a][r + 1]);
        }
    EXPECT_NEAR(cost[4][4], 10.0, 1.0);
}

TEST(Surrogate, AxialRefinementConverges) {
    const geometry::NominalCoil coil;
    const DesignSpace space = DesignSpace::cross_section(coil);
    SurrogateEvaluator ev;
    ev.validate_geometry = false;
    const auto x = nominal_radii(space);
    std::vector<double> n;
    for (int a = 1; a <= 4; ++a) n.push_back(score(ev.evaluate(space, x, {double(a), 4}, 0)).n_star);
    for (std::size_t i = 2; i < n.size(); ++i) EXPECT_LT(std::abs(n[i] - n[i - 1]), std::abs(n[i - 1] - n[i - 2]));
}

TEST(Surrogate, WiderPinchNeverLowersTankCount) {
    const geometry::NominalCoil coil;
    const DesignSpace space = DesignSpace::cross_section(coil);
    SurrogateEvaluator ev;
    ev.validate_geometry = false;
    double prev = 0.0;
    for (int step = 0; step < 10; ++step) {
        const double amp = step / 9.0;
        Eigen::VectorXd x(space.x_dim());
        for (int i = 0; i < x.size(); ++i) x[i] = i % 2 ? 3.0 + amp : 3.0 - amp;
        const double n = score(ev.evaluate(space, x, space.top_fidelity(), 0)).n_star;
        EXPECT_GE(n, prev) << "amplitude " << amp;
        prev = n;
    }
}

TEST(CostModel, Formula) {
    const geometry::NominalCoil coil;
    const SurrogateConstants k;
    const double l = coil.nominal_length();
    const double base = cost_model({1, 1}, l, coil, k);
    EXPECT_DOUBLE_EQ(base, k.model_cost_scale * k.base_cells_per_turn * coil.turns);
    EXPECT_DOUBLE_EQ(cost_model({2, 1}, l, coil, k), 2 * base);
    EXPECT_DOUBLE_EQ(cost_model({1, 2}, l, coil, k), 4 * base);
    EXPECT_DOUBLE_EQ(cost_model({4, 4}, l, coil, k), 10.0);
    EXPECT_DOUBLE_EQ(cost_model({1, 1}, 2 * l, coil, k), 2 * base);
}

TEST(Surrogate, RejectsBadInputs) {
    const geometry::NominalCoil coil;
    const DesignSpace space = DesignSpace::cross_section(coil);
    SurrogateEvaluator ev;
    Eigen::VectorXd x = nominal_radii(space);
    EXPECT_THROW(ev.evaluate(space, x, {5, 1}, 0), InvalidArgument);
    x[3] = 5.0;
    try {
        ev.evaluate(space, x, {1, 1}, 0);
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("x[3]"), std::string::npos);
    }
}
