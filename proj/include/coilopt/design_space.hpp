#pragma once

#include "coilopt/errors.hpp"
#include "coilopt/flow/features.hpp"
#include "coilopt/geometry/coil.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace coilopt {

enum class Parameterisation { cross_section, coil_path, joint_sequential };

inline std::string to_string(Parameterisation p) {
    switch (p) {
        case Parameterisation::cross_section: return "cross-section";
        case Parameterisation::coil_path: return "coil-path";
        case Parameterisation::joint_sequential: return "joint-sequential";
    }
    return "unknown";
}

inline Parameterisation parameterisation_from_string(const std::string& s) {
    if (s == "cross-section") return Parameterisation::cross_section;
    if (s == "coil-path") return Parameterisation::coil_path;
    if (s == "joint-sequential") return Parameterisation::joint_sequential;
    throw InvalidArgument("unknown parameterisation '" + s + "'");
}

/// Box of design parameters x plus the fidelity box. Cross-section spaces
/// (including the second stage of the joint strategy) lay the n_l x n_c
/// radii out row by row and sweep them along `fixed_path`; the coil-path
/// space holds [delta_rho..., delta_z...] with constant circular sections.
struct DesignSpace {
    Parameterisation kind = Parameterisation::cross_section;
    geometry::NominalCoil coil;
    geometry::PathParams fixed_path;
    flow::FidelityBox fidelity;
    std::vector<std::string> labels;
    Eigen::VectorXd x_lo, x_hi;

    static DesignSpace cross_section(const geometry::NominalCoil& coil, const flow::FidelityBox& box = {}) {
        return cross_section_on(Parameterisation::cross_section, coil, geometry::PathParams::zero(coil), box);
    }

    static DesignSpace joint_sequential(const geometry::NominalCoil& coil, const geometry::PathParams& frozen,
                                        const flow::FidelityBox& box = {}) {
        return cross_section_on(Parameterisation::joint_sequential, coil, frozen, box);
    }

    static DesignSpace coil_path(const geometry::NominalCoil& coil, const flow::FidelityBox& box = {}) {
        coil.validate();
        DesignSpace s;
        s.kind = Parameterisation::coil_path;
        s.coil = coil;
        s.fixed_path = geometry::PathParams::zero(coil);
        s.fidelity = box;
        const int n = coil.n_p;
        s.x_lo.resize(2 * n);
        s.x_hi.resize(2 * n);
        for (int j = 0; j < n; ++j) {
            s.labels.push_back("delta_rho_" + std::to_string(j));
            s.x_lo[j] = -coil.delta_rho_max;
            s.x_hi[j] = coil.delta_rho_max;
        }
        for (int j = 0; j < n; ++j) {
            s.labels.push_back("delta_z_" + std::to_string(j));
            s.x_lo[n + j] = -coil.delta_z_max;
            s.x_hi[n + j] = coil.delta_z_max;
        }
        return s;
    }

    static DesignSpace make(Parameterisation kind, const geometry::NominalCoil& coil, const geometry::PathParams& path,
                            const flow::FidelityBox& box = {}) {
        switch (kind) {
            case Parameterisation::cross_section: return cross_section(coil, box);
            case Parameterisation::coil_path: return coil_path(coil, box);
            case Parameterisation::joint_sequential: return joint_sequential(coil, path, box);
        }
        throw InvalidArgument("unknown parameterisation");
    }

    int x_dim() const { return static_cast<int>(x_lo.size()); }
    int dim() const { return x_dim() + 2; }

    Eigen::VectorXd z_top() const {
        Eigen::VectorXd z(2);
        z << fidelity.hi.axial, fidelity.hi.radial;
        return z;
    }
    flow::FidelityVector top_fidelity() const { return fidelity.hi; }

    /// Joint (x, z) box.
    Eigen::VectorXd joint_lo() const {
        Eigen::VectorXd v(dim());
        v << x_lo, fidelity.lo.axial, fidelity.lo.radial;
        return v;
    }
    Eigen::VectorXd joint_hi() const {
        Eigen::VectorXd v(dim());
        v << x_hi, fidelity.hi.axial, fidelity.hi.radial;
        return v;
    }

    void validate() const {
        coil.validate();
        if (x_lo.size() != x_hi.size() || static_cast<std::size_t>(x_lo.size()) != labels.size() || x_lo.size() == 0)
            throw InvalidArgument("design space bounds and labels disagree");
        for (Eigen::Index i = 0; i < x_lo.size(); ++i)
            if (!std::isfinite(x_lo[i]) || !std::isfinite(x_hi[i]) || !(x_lo[i] < x_hi[i]))
                throw InvalidArgument("bad bounds for " + labels[static_cast<std::size_t>(i)]);
        for (std::size_t i = 0; i < labels.size(); ++i)
            for (std::size_t j = i + 1; j < labels.size(); ++j)
                if (labels[i] == labels[j]) throw InvalidArgument("duplicate label " + labels[i]);
        const auto& f = fidelity;
        if (!(f.lo.axial >= 1.0 && f.lo.radial >= 1.0 && f.lo.axial < f.hi.axial && f.lo.radial < f.hi.radial))
            throw InvalidArgument("bad fidelity box");
        fixed_path.validate(coil);
    }

    /// Throws InvalidArgument naming the first offending coordinate.
    void check_x(const Eigen::VectorXd& x) const {
        if (x.size() != x_lo.size())
            throw InvalidArgument("x has " + std::to_string(x.size()) + " entries, expected " + std::to_string(x_lo.size()));
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (!(x[i] >= x_lo[i] && x[i] <= x_hi[i]))
                throw InvalidArgument("x[" + std::to_string(i) + "] (" + labels[static_cast<std::size_t>(i)] + ") = " +
                                      std::to_string(x[i]) + " outside [" + std::to_string(x_lo[i]) + ", " +
                                      std::to_string(x_hi[i]) + "]");
    }

    void check_z(const flow::FidelityVector& z) const {
        if (!fidelity.contains(z)) throw InvalidArgument("z outside the fidelity box");
    }

    geometry::ReactorDesign decode(const Eigen::VectorXd& x) const {
        check_x(x);
        geometry::ReactorDesign d;
        if (kind == Parameterisation::coil_path) {
            const auto n = static_cast<std::size_t>(coil.n_p);
            d.path = geometry::PathParams::zero(coil);
            for (std::size_t j = 0; j < n; ++j) {
                d.path.delta_rho[j] = x[static_cast<Eigen::Index>(j)];
                d.path.delta_z[j] = x[static_cast<Eigen::Index>(n + j)];
            }
            return d;
        }
        d.path = fixed_path;
        geometry::CrossSectionParams cs{Eigen::MatrixXd(coil.n_l, coil.n_c)};
        for (int j = 0; j < coil.n_l; ++j)
            for (int i = 0; i < coil.n_c; ++i) cs.radii(j, i) = x[j * coil.n_c + i];
        d.cross_sections = cs;
        return d;
    }

private:
    static DesignSpace cross_section_on(Parameterisation kind, const geometry::NominalCoil& coil,
                                        const geometry::PathParams& path, const flow::FidelityBox& box) {
        coil.validate();
        path.validate(coil);
        DesignSpace s;
        s.kind = kind;
        s.coil = coil;
        s.fixed_path = path;
        s.fidelity = box;
        const int n = coil.n_l * coil.n_c;
        s.x_lo = Eigen::VectorXd::Constant(n, coil.radius_lo);
        s.x_hi = Eigen::VectorXd::Constant(n, coil.radius_hi);
        for (int j = 0; j < coil.n_l; ++j)
            for (int i = 0; i < coil.n_c; ++i) s.labels.push_back("r_" + std::to_string(j) + "_" + std::to_string(i));
        return s;
    }
};

}  // namespace coilopt
