#pragma once

// Convergence diagnostics over a campaign: lengthscale evolution and
// distribution, parameter variability, and embedding input export.

#include "coilopt/errors.hpp"
#include "coilopt/io/csv.hpp"
#include "coilopt/mfbo/state.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace coilopt::analysis {

inline std::vector<std::string> joint_labels(const DesignSpace& space) {
    auto labels = space.labels;
    labels.push_back("z_axial");
    labels.push_back("z_radial");
    return labels;
}

struct LengthscaleHistogram {
    std::vector<double> edges;            ///< log10 of normalized lengthscale
    std::vector<std::vector<int>> counts;  ///< one row per snapshot
};

struct LengthscaleHistory {
    std::vector<std::string> labels;  ///< design dimensions then fidelities
    std::vector<int> iterations;
    Eigen::MatrixXd raw;         ///< iterations x dimensions, input units
    Eigen::MatrixXd normalized;  ///< relative to the design-space box
    LengthscaleHistogram histogram;
};

inline constexpr int kHistogramBins = 8;

/// Objective-GP lengthscales per snapshot.
inline LengthscaleHistory lengthscale_history(const mfbo::CampaignState& s) {
    if (s.gp_snapshots.empty()) throw InvalidArgument("campaign has no GP snapshots");
    LengthscaleHistory h;
    h.labels = joint_labels(s.space);
    const auto rows = static_cast<Eigen::Index>(s.gp_snapshots.size());
    const auto cols = static_cast<Eigen::Index>(h.labels.size());
    h.raw.resize(rows, cols);
    h.normalized.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& snap = s.gp_snapshots[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(snap.objective.lengthscales.size()) != cols ||
            static_cast<Eigen::Index>(snap.objective.normalized_lengthscales.size()) != cols)
            throw InvalidArgument("snapshot " + std::to_string(r) + " has the wrong number of lengthscales");
        h.iterations.push_back(snap.iteration);
        for (Eigen::Index c = 0; c < cols; ++c) {
            h.raw(r, c) = snap.objective.lengthscales[static_cast<std::size_t>(c)];
            h.normalized(r, c) = snap.objective.normalized_lengthscales[static_cast<std::size_t>(c)];
        }
    }
    // Bins span the fitting bounds [1e-2, 1e2]; values outside land in the end bins.
    const double lo = -2.0, hi = 2.0;
    for (int b = 0; b <= kHistogramBins; ++b) h.histogram.edges.push_back(lo + (hi - lo) * b / kHistogramBins);
    for (Eigen::Index r = 0; r < rows; ++r) {
        std::vector<int> counts(kHistogramBins, 0);
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double v = std::log10(h.normalized(r, c));
            const int b = std::clamp(static_cast<int>(std::floor((v - lo) / (hi - lo) * kHistogramBins)), 0, kHistogramBins - 1);
            ++counts[static_cast<std::size_t>(b)];
        }
        h.histogram.counts.push_back(std::move(counts));
    }
    return h;
}

struct VariabilityReport {
    std::vector<std::string> labels;
    std::vector<double> values;
    int iteration = -1;
};

/// v_i = (1 / l_i) / max_j (1 / l_j), computed as min_j(l_j) / l_i so the
/// largest entry is exactly 1.
inline VariabilityReport parameter_variability(const std::vector<double>& lengthscales, std::vector<std::string> labels = {},
                                               int iteration = -1) {
    if (lengthscales.empty()) throw InvalidArgument("no lengthscales");
    for (std::size_t i = 0; i < lengthscales.size(); ++i)
        if (!(lengthscales[i] > 0.0) || !std::isfinite(lengthscales[i]))
            throw InvalidArgument("lengthscale " + std::to_string(i) + " must be positive and finite");
    if (labels.empty())
        for (std::size_t i = 0; i < lengthscales.size(); ++i) labels.push_back("dim_" + std::to_string(i));
    if (labels.size() != lengthscales.size()) throw InvalidArgument("labels and lengthscales differ in length");
    const double lmin = *std::min_element(lengthscales.begin(), lengthscales.end());
    VariabilityReport r;
    r.labels = std::move(labels);
    r.iteration = iteration;
    for (double l : lengthscales) r.values.push_back(l == lmin ? 1.0 : lmin / l);
    return r;
}

/// Variability of the design dimensions at the last snapshot, from the
/// box-normalized lengthscales (so units do not bias the ranking).
inline VariabilityReport final_variability(const mfbo::CampaignState& s) {
    if (s.gp_snapshots.empty()) throw InvalidArgument("campaign has no GP snapshots");
    const auto& snap = s.gp_snapshots.back();
    const auto nx = static_cast<std::size_t>(s.space.x_dim());
    std::vector<double> ls(snap.objective.normalized_lengthscales.begin(),
                           snap.objective.normalized_lengthscales.begin() + static_cast<std::ptrdiff_t>(nx));
    return parameter_variability(ls, s.space.labels, snap.iteration);
}

/// Embedding input: x columns first (design space only, no fidelities), then
/// label columns index, iteration, stage, ok, z_axial, z_radial, f, cost.
inline std::string export_embedding_csv(const mfbo::CampaignState& s) {
    if (s.history.empty()) throw InvalidArgument("campaign has no evaluations");
    std::string out;
    for (const auto& l : s.space.labels) out += l + ",";
    out += "index,iteration,stage,ok,z_axial,z_radial,f,cost\n";
    for (const auto& e : s.history) {
        for (Eigen::Index i = 0; i < e.x.size(); ++i) out += io::format_double(e.x[i]) + ",";
        out += std::to_string(e.index) + "," + std::to_string(e.iteration) + "," + mfbo::to_string(e.stage) + "," +
               (e.ok ? "1" : "0") + "," + io::format_double(e.z.axial) + "," + io::format_double(e.z.radial) + "," +
               io::format_double(e.f) + "," + io::format_double(e.cost) + "\n";
    }
    return out;
}

/// One row per evaluation: iteration, fidelities, cost, f and the best
/// top-fidelity f so far.
inline std::string campaign_trace_csv(const mfbo::CampaignState& s) {
    std::string out = "index,iteration,stage,ok,z_axial,z_radial,cost,cumulative_cost,f,best_so_far\n";
    const auto best = mfbo::best_so_far(s);
    double spent = 0.0;
    for (std::size_t i = 0; i < s.history.size(); ++i) {
        const auto& e = s.history[i];
        spent += e.cost;
        out += std::to_string(e.index) + "," + std::to_string(e.iteration) + "," + mfbo::to_string(e.stage) + "," +
               (e.ok ? "1" : "0") + "," + io::format_double(e.z.axial) + "," + io::format_double(e.z.radial) + "," +
               io::format_double(e.cost) + "," + io::format_double(spent) + "," + io::format_double(e.f) + "," +
               io::format_double(best[i]) + "\n";
    }
    return out;
}

inline std::string lengthscale_csv(const LengthscaleHistory& h, bool normalized = false) {
    std::string out = "iteration";
    for (const auto& l : h.labels) out += "," + l;
    out += "\n";
    const auto& m = normalized ? h.normalized : h.raw;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out += std::to_string(h.iterations[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < m.cols(); ++c) out += "," + io::format_double(m(r, c));
        out += "\n";
    }
    return out;
}

inline std::string histogram_csv(const LengthscaleHistory& h) {
    std::string out = "iteration";
    const auto& e = h.histogram.edges;
    for (std::size_t b = 0; b + 1 < e.size(); ++b) out += ",log10_l_" + io::format_double(e[b]) + "_" + io::format_double(e[b + 1]);
    out += "\n";
    for (std::size_t r = 0; r < h.histogram.counts.size(); ++r) {
        out += std::to_string(h.iterations[r]);
        for (int c : h.histogram.counts[r]) out += "," + std::to_string(c);
        out += "\n";
    }
    return out;
}

inline std::string variability_csv(const VariabilityReport& v) {
    std::string out = "label,variability\n";
    for (std::size_t i = 0; i < v.labels.size(); ++i) out += v.labels[i] + "," + io::format_double(v.values[i]) + "\n";
    return out;
}

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace detail

/// Normalized lengthscale traces on a log axis, one polyline per dimension.
inline std::string lengthscale_svg(const LengthscaleHistory& h) {
    const double w = 640, ht = 360, ml = 60, mr = 140, mt = 20, mb = 40;
    const double pw = w - ml - mr, ph = ht - mt - mb;
    const auto rows = h.normalized.rows();
    auto px = [&](Eigen::Index r) { return ml + (rows > 1 ? pw * static_cast<double>(r) / static_cast<double>(rows - 1) : pw / 2); };
    auto py = [&](double l) { return mt + ph * (2.0 - std::clamp(std::log10(l), -2.0, 2.0)) / 4.0; };
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"360\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect x=\"" + detail::fmt(ml) + "\" y=\"" + detail::fmt(mt) + "\" width=\"" + detail::fmt(pw) + "\" height=\"" +
         detail::fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int e = -2; e <= 2; ++e)
        s += "<text x=\"" + detail::fmt(ml - 8) + "\" y=\"" + detail::fmt(py(std::pow(10.0, e)) + 4) +
             "\" text-anchor=\"end\">1e" + std::to_string(e) + "</text>\n";
    s += "<text x=\"" + detail::fmt(ml + pw / 2) + "\" y=\"" + detail::fmt(ht - 8) + "\" text-anchor=\"middle\">iteration</text>\n";
    for (Eigen::Index c = 0; c < h.normalized.cols(); ++c) {
        const char* col = colors[c % 10];
        s += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" points=\"";
        for (Eigen::Index r = 0; r < rows; ++r) s += detail::fmt(px(r)) + "," + detail::fmt(py(h.normalized(r, c))) + " ";
        s += "\"/>\n";
        s += "<text x=\"" + detail::fmt(ml + pw + 8) + "\" y=\"" + detail::fmt(mt + 12 + 14 * static_cast<double>(c)) +
             "\" fill=\"" + col + "\">" + h.labels[static_cast<std::size_t>(c)] + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

/// Histogram counts as a heatmap: iterations across, log-lengthscale bins up.
inline std::string histogram_svg(const LengthscaleHistory& h) {
    const double w = 640, ht = 360, ml = 60, mt = 20, pw = 540, ph = 300;
    const auto rows = h.histogram.counts.size();
    const double cw = pw / static_cast<double>(std::max<std::size_t>(rows, 1));
    const double ch = ph / kHistogramBins;
    int peak = 1;
    for (const auto& r : h.histogram.counts)
        for (int c : r) peak = std::max(peak, c);
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(w) + "\" height=\"" + detail::fmt(ht) +
                    "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (std::size_t r = 0; r < rows; ++r)
        for (int b = 0; b < kHistogramBins; ++b) {
            const double shade = static_cast<double>(h.histogram.counts[r][static_cast<std::size_t>(b)]) / peak;
            const int g = static_cast<int>(std::lround(255 * (1.0 - shade)));
            s += "<rect x=\"" + detail::fmt(ml + cw * static_cast<double>(r)) + "\" y=\"" +
                 detail::fmt(mt + ph - ch * (b + 1)) + "\" width=\"" + detail::fmt(cw) + "\" height=\"" + detail::fmt(ch) +
                 "\" fill=\"rgb(" + std::to_string(g) + "," + std::to_string(g) + ",255)\"/>\n";
        }
    for (int b = 0; b <= kHistogramBins; b += 2)
        s += "<text x=\"" + detail::fmt(ml - 6) + "\" y=\"" + detail::fmt(mt + ph - ch * b + 4) + "\" text-anchor=\"end\">" +
             detail::fmt(h.histogram.edges[static_cast<std::size_t>(b)]) + "</text>\n";
    s += "<text x=\"" + detail::fmt(ml + pw / 2) + "\" y=\"" + detail::fmt(ht - 14) +
         "\" text-anchor=\"middle\">iteration (log10 normalized lengthscale up)</text>\n";
    s += "</svg>\n";
    return s;
}

}  // namespace coilopt::analysis
