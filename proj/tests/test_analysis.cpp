#include "coilopt/analysis/analysis.hpp"
#include "coilopt/io/csv.hpp"
#include "coilopt/mfbo/campaign.hpp"
#include "support/toy_evaluator.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace coilopt;
using namespace coilopt::analysis;
using coilopt::testing::ToyEvaluator;
using coilopt::testing::unit_space;

namespace {

mfbo::CampaignConfig quick_config() {
    mfbo::CampaignConfig c;
    c.max_iterations = 6;
    c.acquisition_starts = 16;
    c.polish_starts = 2;
    c.fit_max_iterations = 40;
    return c;
}

const mfbo::CampaignState& toy_campaign() {
    static const mfbo::CampaignState s = [] {
        ToyEvaluator ev;
        ev.weights = {1.0, 0.0, 0.5};
        return mfbo::run_campaign(unit_space(3), ev, 20.0, 21, quick_config());
    }();
    return s;
}

}  // namespace

TEST(Variability, KnownValues) {
    const auto r = parameter_variability({1.0, 2.0, 4.0});
    ASSERT_EQ(r.values.size(), 3u);
    EXPECT_EQ(r.values[0], 1.0);
    EXPECT_DOUBLE_EQ(r.values[1], 0.5);
    EXPECT_DOUBLE_EQ(r.values[2], 0.25);
    EXPECT_EQ(r.labels[2], "dim_2");
}

TEST(Variability, EqualLengthscalesAllOne) {
    for (double v : parameter_variability({0.3, 0.3, 0.3, 0.3}).values) EXPECT_EQ(v, 1.0);
}

TEST(Variability, PermutationAndScaleInvariant) {
    const auto a = parameter_variability({0.7, 0.2, 1.9});
    const auto b = parameter_variability({1.9, 0.7, 0.2});
    EXPECT_DOUBLE_EQ(a.values[0], b.values[1]);
    EXPECT_DOUBLE_EQ(a.values[1], b.values[2]);
    EXPECT_DOUBLE_EQ(a.values[2], b.values[0]);
    const auto c = parameter_variability({7.0, 2.0, 19.0});
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a.values[i], c.values[i], 1e-15);
}

TEST(Variability, RejectsBadInput) {
    EXPECT_THROW(parameter_variability({}), InvalidArgument);
    EXPECT_THROW(parameter_variability({1.0, 0.0}), InvalidArgument);
    EXPECT_THROW(parameter_variability({1.0, -2.0}), InvalidArgument);
    EXPECT_THROW(parameter_variability({1.0, std::nan("")}), InvalidArgument);
    EXPECT_THROW(parameter_variability({1.0, 2.0}, {"a"}), InvalidArgument);
}

TEST(History, OneRowPerSnapshot) {
    const auto& s = toy_campaign();
    const auto h = lengthscale_history(s);
    EXPECT_EQ(h.raw.rows(), static_cast<Eigen::Index>(s.gp_snapshots.size()));
    EXPECT_EQ(h.raw.cols(), 5);
    EXPECT_EQ(h.labels.back(), "z_radial");
    for (std::size_t r = 0; r < h.histogram.counts.size(); ++r) {
        const auto& c = h.histogram.counts[r];
        EXPECT_EQ(std::accumulate(c.begin(), c.end(), 0), 5);
    }
    EXPECT_EQ(h.histogram.edges.size(), static_cast<std::size_t>(kHistogramBins + 1));
    const auto csv = io::parse_csv(lengthscale_csv(h));
    EXPECT_EQ(csv.rows.size(), s.gp_snapshots.size());
    EXPECT_NE(lengthscale_svg(h).find("<svg"), std::string::npos);
    EXPECT_NE(histogram_svg(h).find("<svg"), std::string::npos);
}

TEST(History, SingleSnapshotAndEmpty) {
    auto s = toy_campaign();
    s.gp_snapshots.resize(1);
    EXPECT_EQ(lengthscale_history(s).raw.rows(), 1);
    s.gp_snapshots.clear();
    EXPECT_THROW(lengthscale_history(s), InvalidArgument);
    EXPECT_THROW(final_variability(s), InvalidArgument);
}

TEST(Embedding, RowsAndColumns) {
    const auto& s = toy_campaign();
    const auto t = io::parse_csv(export_embedding_csv(s));
    EXPECT_EQ(t.rows.size(), s.history.size());
    EXPECT_EQ(t.header[0], "u_0");
    EXPECT_EQ(t.header[3], "index");
    // Fidelities are labels only, after the design columns.
    EXPECT_GT(t.column("z_axial"), t.column("u_2"));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& e = s.history[r];
        for (int i = 0; i < 3; ++i) EXPECT_EQ(io::parse_double(t.rows[r][static_cast<std::size_t>(i)]), e.x[i]);
        EXPECT_EQ(io::parse_double(t.rows[r][t.column("cost")]), e.cost);
    }
}

TEST(Embedding, FormatRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23}) EXPECT_EQ(io::parse_double(io::format_double(v)), v);
    EXPECT_TRUE(std::isnan(io::parse_double(io::format_double(std::nan("")))));
    EXPECT_THROW(io::parse_double("1.0x"), InvalidArgument);
}

TEST(Variability, RelevantDimensionRanksFirst) {
    const auto& s = toy_campaign();
    const auto v = final_variability(s);
    ASSERT_EQ(v.values.size(), 3u);
    // u_0 drives the objective, u_1 does nothing.
    EXPECT_GT(v.values[0], v.values[1]);
    EXPECT_EQ(*std::max_element(v.values.begin(), v.values.end()), 1.0);
    EXPECT_EQ(io::parse_csv(variability_csv(v)).rows.size(), 3u);
}

TEST(Trace, BestSoFarIsMonotone) {
    const auto& s = toy_campaign();
    const auto t = io::parse_csv(campaign_trace_csv(s));
    ASSERT_EQ(t.rows.size(), s.history.size());
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& r : t.rows) {
        const double b = io::parse_double(r[t.column("best_so_far")]);
        if (std::isnan(b)) continue;
        EXPECT_LE(b, prev);
        prev = b;
    }
    EXPECT_EQ(io::parse_double(t.rows.back()[t.column("cumulative_cost")]), s.budget_spent);
}
