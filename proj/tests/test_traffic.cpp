#include <tmml/traffic.hpp>

#include <gtest/gtest.h>

#include <sstream>
#include <string>

namespace {

std::string complete_csv(int links, int intervals, int days)
{
    std::ostringstream os;
    os << "link_id,day,interval_index,speed_mph\n";
    for (int l = 0; l < links; ++l) {
        for (int d = 0; d < days; ++d) {
            for (int t = 0; t < intervals; ++t) {
                os << "L" << l << ',' << d << ',' << t << ',' << 40 + l + 0.5 * t << '\n';
            }
        }
    }
    return os.str();
}

tmml::IngestResult ingest(const std::string& text, int intervals = 24)
{
    std::istringstream in(text);
    return tmml::ingest_speed_csv(in, intervals, "speeds.csv");
}

std::string error_of(const std::string& text, int intervals = 24)
{
    try {
        ingest(text, intervals);
    } catch (const tmml::ValidationError& e) {
        return e.what();
    }
    return {};
}

TEST(Ingest, CompleteFileHasFullShapeAndNoMissing)
{
    const auto r = ingest(complete_csv(39, 24, 2));
    EXPECT_EQ(r.tensor.links(), 39);
    EXPECT_EQ(r.tensor.intervals(), 24);
    EXPECT_EQ(r.tensor.days(), 2);
    EXPECT_EQ(r.tensor.missing_count(), 0u);
    EXPECT_EQ(r.duplicates, 0);
    EXPECT_DOUBLE_EQ(r.tensor.at(3, 5, 1), 43 + 2.5);
}

TEST(Ingest, GapsAreMaskedNotFilled)
{
    const auto r = ingest("link_id,day,interval_index,speed_mph\nA,0,0,50\nA,1,3,40\n", 4);
    EXPECT_EQ(r.tensor.days(), 2);
    EXPECT_EQ(r.tensor.missing_count(), 6u);
    EXPECT_FALSE(r.tensor.get(0, 1, 0).has_value());
    EXPECT_EQ(r.tensor.get(0, 3, 1), 40.0);
}

TEST(Ingest, ErrorsCarryLineNumbers)
{
    const std::string head = "link_id,day,interval_index,speed_mph\n";
    EXPECT_NE(error_of(head + "A,0,0,50\nA,0,1\n").find("speeds.csv:3:"), std::string::npos);
    EXPECT_NE(error_of(head + "A,x,0,50\n").find(":2:"), std::string::npos);
    EXPECT_NE(error_of(head + "A,0,0,fast\n").find(":2:"), std::string::npos);
    EXPECT_NE(error_of(head + "A,0,0,-3\n").find(":2:"), std::string::npos);
    const auto range = error_of(head + "A,0,0,50\n\nA,0,24,50\n");
    EXPECT_NE(range.find(":4:"), std::string::npos) << range;
    EXPECT_NE(range.find("0..23"), std::string::npos) << range;
    EXPECT_NE(error_of("link,day,interval,speed\n").find(":1:"), std::string::npos);
}

TEST(Ingest, EmptyInputsAreRejected)
{
    EXPECT_NE(error_of("").find("empty file"), std::string::npos);
    EXPECT_NE(error_of("\n\n").find("empty file"), std::string::npos);
    EXPECT_NE(error_of("link_id,day,interval_index,speed_mph\n").find("no data rows"), std::string::npos);
}

TEST(Ingest, DuplicatesKeepTheLastRowAndAreCounted)
{
    const auto r = ingest("link_id,day,interval_index,speed_mph\nA,0,0,50\nA,0,0,20\nA,0,0,30\n", 2);
    EXPECT_EQ(r.duplicates, 2);
    EXPECT_EQ(r.tensor.at(0, 0, 0), 30.0);
}

TEST(Ingest, CrlfAndMissingFile)
{
    const auto r = ingest("link_id,day,interval_index,speed_mph\r\nA,0,0,50\r\n", 1);
    EXPECT_EQ(r.tensor.at(0, 0, 0), 50.0);
    EXPECT_THROW(tmml::ingest_speed_csv("/nonexistent/speeds.csv", 24), tmml::ValidationError);
}

TEST(Ingest, ExportRoundTripIsExact)
{
    const auto data = tmml::gen_traffic_speeds({}, 11);
    std::ostringstream os;
    tmml::write_speed_csv(os, data.observed);
    const auto back = ingest(os.str());
    EXPECT_EQ(back.duplicates, 0);
    EXPECT_TRUE(back.tensor == data.observed);
}

TEST(Ingest, SparseRoundTripIsExact)
{
    const auto first = ingest("link_id,day,interval_index,speed_mph\nB,5,1,0.1\nA,2,0,33.3333333333\nB,2,2,7\n", 3);
    std::ostringstream os;
    tmml::write_speed_csv(os, first.tensor);
    EXPECT_TRUE(ingest(os.str(), 3).tensor == first.tensor);
    EXPECT_EQ(first.tensor.link_ids(), (std::vector<std::string>{"B", "A"}));
    EXPECT_EQ(first.tensor.day_labels(), (std::vector<long long>{2, 5}));
}

TEST(TrafficGenerator, ShapeAndDeterminism)
{
    const tmml::TrafficConfig cfg;
    const auto a = tmml::gen_traffic_speeds(cfg, 3);
    const auto b = tmml::gen_traffic_speeds(cfg, 3);
    const auto c = tmml::gen_traffic_speeds(cfg, 4);
    EXPECT_EQ(a.observed.links(), 39);
    EXPECT_EQ(a.observed.intervals(), 24);
    EXPECT_EQ(a.observed.days(), cfg.history_days + 1);
    EXPECT_EQ(a.observed.missing_count(), 0u);
    EXPECT_EQ(a.truth.size(), 39u);
    EXPECT_TRUE(a.observed == b.observed);
    EXPECT_EQ(a.truth, b.truth);
    EXPECT_FALSE(a.observed == c.observed);
}

TEST(TrafficGenerator, RejectsBadConfig)
{
    tmml::TrafficConfig cfg;
    cfg.group_drop.pop_back();
    EXPECT_THROW(tmml::gen_traffic_speeds(cfg, 1), tmml::ValidationError);
    cfg = {};
    cfg.congestion_probability = 2.0;
    EXPECT_THROW(tmml::gen_traffic_speeds(cfg, 1), tmml::ValidationError);
}

TEST(KfExperiment, TmlBeatsPlainFilterOnDefaultScenario)
{
    const auto data = tmml::gen_traffic_speeds({}, 7);
    const auto r = tmml::run_kf_experiment(data.observed, &data.truth, {}, 7);
    EXPECT_LT(r.mae_tml, r.mae_no_tml);
    EXPECT_GE(r.delta_p_positive, 0.9);
    EXPECT_EQ(r.traces.size(), 2u * 39u);
    EXPECT_GE(r.k, 2);
    for (const auto& trace : r.traces) {
        ASSERT_EQ(trace.rows.size(), 24u);
        for (const auto& row : trace.rows) {
            EXPECT_GE(row.delta_p, 0.0);
            EXPECT_GE(row.p11, 0.0);
            if (trace.mode == tmml::KfMode::no_tml) {
                EXPECT_EQ(row.delta_p, 0.0);
            }
        }
    }
}

TEST(KfExperiment, DeterministicAndTraceCsvShape)
{
    const auto data = tmml::gen_traffic_speeds({}, 5);
    const auto a = tmml::run_kf_experiment(data.observed, &data.truth, {}, 5);
    const auto b = tmml::run_kf_experiment(data.observed, &data.truth, {}, 5);
    std::ostringstream sa;
    std::ostringstream sb;
    tmml::write_kf_trace_csv(sa, a.traces);
    tmml::write_kf_trace_csv(sb, b.traces);
    EXPECT_EQ(sa.str(), sb.str());
    const std::string text = sa.str();
    EXPECT_EQ(text.rfind("link_id,interval_index,mode,prediction,p11,delta_p\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * 39 * 24);
    EXPECT_EQ(text.find('\r'), std::string::npos);
}

TEST(KfExperiment, NeedsHistory)
{
    tmml::SpeedTensor one({"A"}, 4, {0});
    for (int t = 0; t < 4; ++t) {
        one.set(0, t, 0, 50.0);
    }
    EXPECT_THROW(tmml::run_kf_experiment(one, nullptr, {}, 1), tmml::ValidationError);
}

} // namespace
