#pragma once

// Reduced-order stand-in for a CFD tracer simulation: a one-dimensional
// advection-dispersion model along the coil centreline, split into radial
// sub-channels with Poiseuille velocities that exchange tracer.

#include "coilopt/errors.hpp"
#include "coilopt/flow/features.hpp"
#include "coilopt/geometry/coil.hpp"
#include "coilopt/random.hpp"
#include "coilopt/rtd/rtd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace coilopt::flow {

struct SimulationResult {
    rtd::TimeSeries outlet_series;  ///< flow-averaged outlet concentration
    double cost = 0.0;              ///< simulated compute seconds
    FidelityVector fidelity_used;   ///< rounded
    std::uint64_t seed = 0;
    double flow_rate = 0.0;         ///< mm^3/s; flow_rate * integral of C dt is the recovered mass
    double injected_mass = 1.0;
    std::int64_t steps = 0;
};

/// g = g_min + (1 - g_min) exp(-a Dean - b (1 - pinch)), in [g_min, 1].
inline double dispersion_modifier(double dean, double pinch, const SurrogateConstants& k) {
    return k.g_min + (1.0 - k.g_min) * std::exp(-k.dean_rate * dean - k.pinch_rate * (1.0 - pinch));
}

/// Taylor-Aris dispersion at the local mean velocity, scaled by the modifier.
inline double base_dispersion(double velocity, double hydraulic_radius, const SurrogateConstants& k) {
    const double dm = k.molecular_diffusivity;
    return dm + velocity * velocity * hydraulic_radius * hydraulic_radius / (48.0 * dm);
}

inline std::vector<double> dispersion_profile(const GeometryFeatures& f, double flow, const SurrogateConstants& k = {}) {
    validate(f);
    std::vector<double> d(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        d[i] = base_dispersion(flow / f.area[i], f.hydraulic_radius[i], k) * dispersion_modifier(f.dean[i], f.pinch[i], k);
    return d;
}

/// Mean velocity of each of `channels` equal-area annuli of a Poiseuille
/// profile, relative to the cross-section mean.
inline std::vector<double> channel_weights(int channels) {
    std::vector<double> w(static_cast<std::size_t>(channels));
    for (int k = 1; k <= channels; ++k) w[static_cast<std::size_t>(k - 1)] = 2.0 * (1.0 - (2.0 * k - 1.0) / (2.0 * channels));
    return w;
}

/// Shear-dispersion coefficient of the channel chain: exchange rate r gives
/// Taylor dispersion u^2 C / r. C = sum over links of the squared partial
/// sums of (w - 1), divided by the channel count.
inline double exchange_constant(const std::vector<double>& w) {
    double partial = 0.0, c = 0.0;
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
        partial += w[k] - 1.0;
        c += partial * partial;
    }
    return c / static_cast<double>(w.size());
}

inline int cell_count(const geometry::NominalCoil& coil, const FidelityVector& z, const SurrogateConstants& k = {}) {
    return k.base_cells_per_turn * coil.turns * static_cast<int>(std::lround(z.axial));
}

/// Analytic cost predictor: c0 (base_cells axial) radial^2 (L / L_nominal).
inline double cost_model(const FidelityVector& z, double path_length, const geometry::NominalCoil& coil,
                         const SurrogateConstants& k = {}) {
    const double base_cells = static_cast<double>(k.base_cells_per_turn * coil.turns);
    return k.model_cost_scale * base_cells * z.axial * z.radial * z.radial * (path_length / coil.nominal_length());
}

struct SimulationOptions {
    FidelityBox box;
    double max_residence_times = 40.0;
    double residual_mass_fraction = 0.02;  ///< tracer still inside must also be below this to stop
    bool noise = true;                     ///< false gives the noise-free trace at any fidelity
};

/// Explicit upwind advection and channel exchange, implicit in-channel
/// diffusion, impulse injected into the first cell. Outlet concentration is
/// the flux average over each output interval, stamped at its midpoint.
inline SimulationResult simulate_rtd(const GeometryFeatures& f, const std::vector<double>& dispersion, double flow,
                                     const FidelityVector& z_in, std::uint64_t seed, const SurrogateConstants& k = {},
                                     const SimulationOptions& opt = {}) {
    validate(f);
    const FidelityVector z = z_in.rounded();
    if (!opt.box.contains(z)) throw InvalidArgument("fidelity outside the fidelity box");
    if (dispersion.size() != f.size()) throw InvalidArgument("dispersion profile length mismatch");
    if (!(flow > 0.0)) throw InvalidArgument("flow rate must be positive");
    for (double d : dispersion)
        if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("dispersion must be finite and non-negative");

    const int n = static_cast<int>(f.size());
    const int r = static_cast<int>(z.radial);
    const auto nn = static_cast<std::size_t>(n);
    const auto rr = static_cast<std::size_t>(r);
    const double ds = f.cell_length();
    const auto w = channel_weights(r);
    const double shear = exchange_constant(w);
    const double phi = r > 1 ? k.axial_fraction : 1.0;

    std::vector<double> vol(nn), d_ax(nn), exch(nn, 0.0);
    double total_volume = 0.0, max_rate = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
        vol[i] = f.area[i] * ds / r;  // per channel
        total_volume += f.area[i] * ds;
        d_ax[i] = phi * dispersion[i];
        const double u = flow / f.area[i];
        const double d_shear = (1.0 - phi) * dispersion[i];
        if (r > 1 && d_shear > 0.0) exch[i] = u * u * shear / d_shear;
        max_rate = std::max(max_rate, exch[i]);
    }
    std::vector<double> q(rr);
    for (std::size_t c = 0; c < rr; ++c) q[c] = flow * w[c] / r;

    double dt_stable = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nn; ++i) dt_stable = std::min(dt_stable, vol[i] / q.front());
    if (max_rate > 0.0) dt_stable = std::min(dt_stable, 0.5 / max_rate);
    dt_stable *= 0.9;

    const double residence = total_volume / flow;
    const double dt_out = residence / k.output_intervals;
    const auto sub = static_cast<std::int64_t>(std::ceil(dt_out / dt_stable));
    const double dt = dt_out / static_cast<double>(sub);

    // diffusion conductances between cells i and i+1, per channel
    std::vector<double> g(nn > 0 ? nn - 1 : 0);
    for (std::size_t i = 0; i + 1 < nn; ++i) {
        const double da = d_ax[i], db = d_ax[i + 1];
        const double d_face = (da > 0.0 && db > 0.0) ? 2.0 * da * db / (da + db) : 0.0;
        g[i] = d_face * 0.5 * (f.area[i] + f.area[i + 1]) / r / ds;
    }

    // concentrations c[i * r + channel]; equal concentration in every channel at injection
    std::vector<double> c(nn * rr, 0.0), next(nn * rr, 0.0);
    const double mass = 1.0;
    for (std::size_t ch = 0; ch < rr; ++ch) c[ch] = mass / (vol[0] * r);

    std::vector<double> lower(nn), diag(nn), upper(nn), rhs(nn), cprime(nn);
    SimulationResult res;
    res.fidelity_used = z;
    res.seed = seed;
    res.flow_rate = flow;
    res.injected_mass = mass;
    res.outlet_series.time.push_back(0.0);
    res.outlet_series.concentration.push_back(0.0);

    double peak = 0.0, outflow_total = 0.0;
    std::int64_t steps = 0;
    const auto max_steps = static_cast<std::int64_t>(std::ceil(opt.max_residence_times * k.output_intervals)) * sub;
    for (std::int64_t interval = 0;; ++interval) {
        double out = 0.0;
        for (std::int64_t s = 0; s < sub; ++s, ++steps) {
            // advection, upwind in mass form
            for (std::size_t ch = 0; ch < rr; ++ch) {
                const double a = dt * q[ch];
                out += a * c[(nn - 1) * rr + ch];
                for (std::size_t i = nn; i-- > 0;) {
                    const double inflow = i > 0 ? a * c[(i - 1) * rr + ch] : 0.0;
                    next[i * rr + ch] = c[i * rr + ch] + (inflow - a * c[i * rr + ch]) / vol[i];
                }
            }
            std::swap(c, next);
            // exchange between neighbouring channels
            if (r > 1)
                for (std::size_t i = 0; i < nn; ++i) {
                    if (exch[i] == 0.0) continue;
                    const double e = dt * exch[i];
                    double* ci = &c[i * rr];
                    double carry = 0.0;
                    for (std::size_t ch = 0; ch + 1 < rr; ++ch) {
                        const double flux = e * (ci[ch] - ci[ch + 1]);
                        ci[ch] += carry - flux;
                        carry = flux;
                    }
                    ci[rr - 1] += carry;
                }
            // implicit diffusion along each channel (Thomas algorithm)
            if (nn > 1)
                for (std::size_t ch = 0; ch < rr; ++ch) {
                    for (std::size_t i = 0; i < nn; ++i) {
                        const double gl = i > 0 ? g[i - 1] : 0.0;
                        const double gr = i + 1 < nn ? g[i] : 0.0;
                        lower[i] = -dt * gl / vol[i];
                        upper[i] = -dt * gr / vol[i];
                        diag[i] = 1.0 + dt * (gl + gr) / vol[i];
                        rhs[i] = c[i * rr + ch];
                    }
                    cprime[0] = upper[0] / diag[0];
                    rhs[0] /= diag[0];
                    for (std::size_t i = 1; i < nn; ++i) {
                        const double m = diag[i] - lower[i] * cprime[i - 1];
                        cprime[i] = upper[i] / m;
                        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / m;
                    }
                    for (std::size_t i = nn - 1; i-- > 0;) rhs[i] -= cprime[i] * rhs[i + 1];
                    for (std::size_t i = 0; i < nn; ++i) c[i * rr + ch] = rhs[i];
                }
        }
        outflow_total += out;
        const double conc = out / (flow * dt_out);
        if (!std::isfinite(conc)) throw SolverFailure("non-finite outlet concentration at t = " + std::to_string((interval + 1) * dt_out));
        res.outlet_series.time.push_back((static_cast<double>(interval) + 0.5) * dt_out);
        res.outlet_series.concentration.push_back(std::max(conc, 0.0));
        peak = std::max(peak, conc);
        const bool past_peak = peak > 0.0 && conc < peak && conc < k.termination_fraction * peak;
        if (past_peak && mass - outflow_total < opt.residual_mass_fraction * mass) break;
        if (steps >= max_steps) throw SolverFailure("tracer did not clear the reactor within the time limit");
    }
    res.steps = steps;
    res.cost = k.cost_per_update * n * static_cast<double>(r) * r * static_cast<double>(steps);

    // seeded noise for sub-maximal fidelity; mass is restored afterwards
    const double sigma = !opt.noise ? 0.0 : k.noise_fraction * peak * (1.0 - opt.box.mean_normalized(z));
    if (sigma > 0.0) {
        auto& conc = res.outlet_series.concentration;
        double before = 0.0, after = 0.0;
        for (double v : conc) before += v;
        Rng rng(derive_seed(seed, 0x6e6f697365ULL));
        for (std::size_t j = 1; j < conc.size(); ++j) {
            conc[j] = std::max(0.0, conc[j] + sigma * standard_normal(rng));
            after += conc[j];
        }
        if (after > 0.0)
            for (double& v : conc) v *= before / after;
    }
    return res;
}

/// Mass recovered at the outlet by trapezoidal integration of the series.
inline double recovered_mass(const SimulationResult& r) {
    return r.flow_rate * rtd::trapezoid(r.outlet_series.time, r.outlet_series.concentration);
}

/// The objective pipeline applied to a simulation.
inline rtd::TanksFit score(const SimulationResult& r, double alpha = rtd::kDefaultAlpha) {
    return rtd::composite_objective(rtd::normalize_rtd(r.outlet_series), alpha);
}

}  // namespace coilopt::flow
