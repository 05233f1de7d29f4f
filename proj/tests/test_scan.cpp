#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nfc/scan.hpp"

using namespace nfc;

TEST(LinearGrid, InclusiveAndSnapped) {
    const auto g = linear_grid(0.0, 1.0, 0.1);
    ASSERT_EQ(g.size(), 11u);
    EXPECT_EQ(g.back(), 1.0);
    EXPECT_NEAR(g[3], 0.3, 1e-15);
    EXPECT_EQ(linear_grid(2.0, 2.0, 0.5).size(), 1u);
    EXPECT_THROW(linear_grid(0.0, 1.0, 0.0), InvalidArgument);
    EXPECT_THROW(linear_grid(1.0, 0.0, 0.1), InvalidArgument);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
    try {
        parallel_for(50, 3, [](std::size_t i) {
            if (i == 7 || i == 31) throw std::runtime_error("index " + std::to_string(i));
        });
        FAIL() << "expected a throw";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "index 7");
    }
}

TEST(ScanResult, RowMajorCoordinates) {
    ScanResult r;
    r.axes = {{"a", {1.0, 2.0}}, {"b", {10.0, 20.0, 30.0}}};
    ASSERT_EQ(r.cells(), 6u);
    EXPECT_EQ(r.coords(0), (std::vector<double>{1.0, 10.0}));
    EXPECT_EQ(r.coords(2), (std::vector<double>{1.0, 30.0}));
    EXPECT_EQ(r.coords(4), (std::vector<double>{2.0, 20.0}));
    EXPECT_FALSE(r.well_formed());
    r.efficiency.assign(6, 0.5);
    r.fidelity.assign(6, 0.9);
    EXPECT_TRUE(r.well_formed());
    r.extra["x"].assign(5, 0.0);
    EXPECT_FALSE(r.well_formed());
}

TEST(ScanKXi, ZeroThicknessColumnAndThreadIndependence) {
    const PulseSpec p{1.0, 25.0, 5.0};
    const std::vector<double> ks{0.0, 0.5}, xs{0.0, 20.0, 40.0};
    const auto a = scan_k_xi(p, 50.0, 3, ks, xs, 1);
    const auto b = scan_k_xi(p, 50.0, 3, ks, xs, 3);
    ASSERT_TRUE(a.well_formed());
    EXPECT_EQ(a.efficiency, b.efficiency);
    EXPECT_EQ(a.fidelity, b.fidelity);
    EXPECT_EQ(a.grid_hash, b.grid_hash);
    EXPECT_EQ(a.config_hash, b.config_hash);
    EXPECT_EQ(a.efficiency[0], 0.0);
    EXPECT_EQ(a.efficiency[3], 0.0);
    EXPECT_GT(a.efficiency[1], 0.0);
    EXPECT_TRUE(a.points.empty());
    EXPECT_THROW(scan_k_xi(p, 50.0, 3, {}, xs), InvalidArgument);
}

TEST(ScanKXi, CellMatchesDirectEvaluation) {
    const PulseSpec p{1.0, 25.0, 5.0};
    const auto r = scan_k_xi(p, 50.0, 5, {0.3}, {25.0});
    EXPECT_DOUBLE_EQ(r.efficiency[0], analytic_efficiency(p, build_shaped_comb(5, 50.0, 0.3, 5.0, 25.0)));
}

TEST(ScanKXi, EqualPerformanceReferencePairs) {
    const auto pts5 = scan_k_xi(PulseSpec{1.0, 25.0, 5.0}, 50.0, 9, {0.0}, {0.0}).points;
    ASSERT_EQ(pts5.size(), 2u);
    EXPECT_NEAR(pts5[0].efficiency, pts5[1].efficiency, 0.02);
    const auto pts1 = scan_k_xi(PulseSpec{1.0, 5.0, 1.0}, 50.0, 21, {0.0}, {0.0}).points;
    ASSERT_EQ(pts1.size(), 2u);
    EXPECT_NEAR(pts1[0].efficiency, pts1[1].efficiency, 0.02);
}

TEST(ScanM, MaximumOverGridAndEdgeCases) {
    const PulseSpec p{1.0, 25.0, 5.0};
    const auto r = scan_m(p, 50.0, 0.0, {1, 3}, 0.0, 15.0, 0.5);
    ASSERT_TRUE(r.well_formed());
    for (std::size_t a = 0; a < 2; ++a) {
        const int m = a == 0 ? 1 : 3;
        const double xo = r.extra.at("xi_bar_opt")[a];
        EXPECT_DOUBLE_EQ(r.efficiency[a], analytic_efficiency(p, build_shaped_comb(m, 50.0, 0.0, 5.0, m * xo)));
        for (double x : {xo - 0.5, xo + 0.5})
            if (x >= 0.0 && x <= 15.0)
                EXPECT_LE(analytic_efficiency(p, build_shaped_comb(m, 50.0, 0.0, 5.0, m * x)), r.efficiency[a]);
    }
    const auto z = scan_m(p, 50.0, 0.0, {1}, 0.0, 0.0);
    EXPECT_EQ(z.efficiency[0], 0.0);
    EXPECT_THROW(scan_m(p, 50.0, 0.0, {2}), InvalidArgument);
    EXPECT_THROW(scan_m(p, 50.0, 0.0, {}), InvalidArgument);
}

TEST(Scenario, NamesRoundTrip) {
    for (const auto& [id, name] : scenario_names()) EXPECT_EQ(parse_scenario_id(name), id);
    EXPECT_THROW(parse_scenario_id("nope"), InvalidArgument);
    EXPECT_DOUBLE_EQ(default_xi_bar(ScenarioId::Hybrid6), 11.2);
    EXPECT_DOUBLE_EQ(default_xi_bar(ScenarioId::Doppler10), 5.6);
    EXPECT_THROW(scenario_comb(ScenarioId::RefPoints, {}), InvalidArgument);
}

TEST(Scenario, ReferencePointsRunAnalytically) {
    const auto r = run_scenario("fig2_refpoints");
    ASSERT_EQ(r.runs.size(), 4u);
    for (const auto& run : r.runs) {
        EXPECT_EQ(run.method, "analytic");
        EXPECT_EQ(run.traces.size(), 2u);
        EXPECT_GT(run.report.efficiency, 0.4);
    }
    EXPECT_FALSE(r.calibration.has_value());
}

TEST(Scenario, FixedTauISkipsCalibration) {
    ScenarioParams p;
    p.tau_i = 50.0;
    const auto r = run_scenario(ScenarioId::Doppler4, p);
    EXPECT_FALSE(r.calibration.has_value());
    ASSERT_EQ(r.runs.size(), 1u);
    EXPECT_EQ(r.runs[0].pulse.tau_i, 50.0);
    EXPECT_EQ(r.runs[0].traces.size(), 5u);
    EXPECT_DOUBLE_EQ(*r.params.xi_bar, 5.6);
}

TEST(Calibration, PicksBestGridPointAndCaches) {
    const auto comb = build_dynamical_doppler(DopplerVariant::M4, 50.0, 5.6, 60.0, 100.0);
    const std::vector<double> grid{30.0, 40.0, 50.0};
    ReportOptions o;
    o.shift_mode = ShiftMode::Optimize;
    const auto c = calibrate_tau_i(comb, 7.0, grid, std::nullopt, o);
    ASSERT_EQ(c.efficiency.size(), 3u);
    double best = 0.0;
    for (double e : c.efficiency) best = std::max(best, e);
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (c.efficiency[i] == best) {
            EXPECT_EQ(c.tau_i, grid[i]);
            break;
        }
    const auto again = calibrate_tau_i(comb, 7.0, grid, std::nullopt, o);
    EXPECT_EQ(again.efficiency, c.efficiency);
    EXPECT_THROW(calibrate_tau_i(comb, 7.0, {}), InvalidArgument);
}

TEST(DynamicalScan, PrunedAndFullCombsOnFixedTauI) {
    ScenarioParams p;
    p.tau_i = 50.0;
    const auto with = scan_dynamical_xi({0.0, 5.6}, true, p);
    const auto without = scan_dynamical_xi({0.0, 5.6}, false, p);
    EXPECT_EQ(with.scenario, "scan_dyn_with_outer");
    EXPECT_EQ(without.scenario, "scan_dyn_without_outer");
    EXPECT_EQ(with.efficiency[0], 0.0);
    EXPECT_GT(with.efficiency[1], 0.3);
    EXPECT_NEAR(with.efficiency[1], without.efficiency[1], 0.1);
    EXPECT_THROW(scan_dynamical_xi({}, true, p), InvalidArgument);
}
