#include "coilopt/io/campaign_json.hpp"
#include "coilopt/io/csv.hpp"
#include "coilopt/mfbo/campaign.hpp"
#include "support/toy_evaluator.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace coilopt;
using coilopt::testing::FailingEvaluator;
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

ToyEvaluator toy() {
    ToyEvaluator t;
    t.weights = {1.0, 0.3};
    return t;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("coilopt_io_" + name)).string();
}

}  // namespace

TEST(CampaignJson, SerializeParseSerializeIsIdentity) {
    auto cfg = quick_config();
    cfg.keep_raw = true;
    const auto s = mfbo::run_campaign(unit_space(2), toy(), 20.0, 31, cfg);
    const auto text = io::serialize(s);
    const auto back = io::parse_campaign(text);
    EXPECT_EQ(io::serialize(back), text);
    EXPECT_EQ(back.history.size(), s.history.size());
    EXPECT_EQ(back.budget_spent, s.budget_spent);
    EXPECT_EQ(back.config, s.config);
    ASSERT_TRUE(back.history[0].raw.has_value());
    EXPECT_EQ(back.history[0].raw->concentration, s.history[0].raw->concentration);
    for (std::size_t i = 0; i < s.history.size(); ++i) {
        EXPECT_EQ(back.history[i].x, s.history[i].x);
        EXPECT_EQ(back.history[i].seed, s.history[i].seed);
    }
}

TEST(CampaignJson, ResumeFromFileMatchesUninterrupted) {
    const auto space = unit_space(2);
    const auto full = mfbo::run_campaign(space, toy(), 20.0, 32, quick_config());
    mfbo::CampaignHooks hooks;
    hooks.interrupt = [](const mfbo::CampaignState& s) { return s.history.size() == 14; };
    const auto part = mfbo::run_campaign(space, toy(), 20.0, 32, quick_config(), hooks);
    ASSERT_EQ(part.status, mfbo::CampaignStatus::running);
    const auto path = temp_path("resume.json");
    io::save_campaign(path, part);
    auto resumed = io::load_campaign(path);
    mfbo::advance(resumed, toy());
    EXPECT_EQ(io::serialize(resumed), io::serialize(full));
    std::filesystem::remove(path);
}

TEST(CampaignJson, NanAndMissingIncumbentWrittenAsNull) {
    auto cfg = quick_config();
    const auto s = mfbo::run_campaign(unit_space(2), FailingEvaluator(), 1.0, 33, cfg);
    const auto j = io::to_json(s);
    EXPECT_TRUE(j["incumbent"].is_null());
    EXPECT_TRUE(j["history"][0]["f"].is_null());
    EXPECT_EQ(j["status"], "aborted");
    EXPECT_EQ(io::serialize(io::parse_campaign(io::serialize(s))), io::serialize(s));
}

TEST(CampaignJson, RejectsUnknownSchemaVersion) {
    const auto s = mfbo::new_campaign(unit_space(2), 5.0, 1, quick_config());
    auto j = io::to_json(s);
    j["schema_version"] = 2;
    EXPECT_THROW(io::campaign_from_json(j), io::SchemaError);
    j.erase("schema_version");
    EXPECT_THROW(io::campaign_from_json(j), io::SchemaError);
}

TEST(CampaignJson, RejectsInconsistentDocuments) {
    const auto s = mfbo::run_campaign(unit_space(2), toy(), 5.0, 34, quick_config());
    {
        auto j = io::to_json(s);
        j["budget_spent"] = s.budget_spent + 1.0;
        EXPECT_THROW(io::campaign_from_json(j), io::SchemaError);
    }
    {
        auto j = io::to_json(s);
        j["history"][0]["z_rounded"][0] = 1.5;
        EXPECT_THROW(io::campaign_from_json(j), io::SchemaError);
    }
    {
        auto j = io::to_json(s);
        j["space"]["x_lo"][0] = 2.0;
        EXPECT_THROW(io::campaign_from_json(j), InvalidArgument);
    }
    EXPECT_THROW(io::parse_campaign("{not json"), io::SchemaError);
}

TEST(Csv, TraceRoundTrip) {
    rtd::TimeSeries s{{0.0, 0.5, 1.0}, {0.0, 0.25, 1.0 / 3.0}};
    const auto back = io::parse_trace_csv(io::trace_csv(s));
    EXPECT_EQ(back.time, s.time);
    EXPECT_EQ(back.concentration, s.concentration);
}

TEST(Csv, CommentsBlankLinesAndErrors) {
    const auto t = io::parse_csv("# header note\ntime, concentration\n\n0,1\r\n1,2\n");
    EXPECT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.column("concentration"), 1u);
    EXPECT_THROW(io::parse_csv("a,b\n1\n"), InvalidArgument);
    EXPECT_THROW(io::parse_csv(""), InvalidArgument);
    EXPECT_THROW(t.column("nope"), InvalidArgument);
}
