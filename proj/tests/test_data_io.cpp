#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "epiforge/data_io.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/grid.hpp"
#include "epiforge/rng.hpp"

using namespace epiforge;

namespace {

Trajectory quarter_step_trajectory(int steps, std::size_t state_dim) {
    Trajectory traj;
    for (int k = 0; k <= steps; ++k) {
        traj.times.push_back(0.25 * k);
        std::vector<double> state(state_dim);
        for (std::size_t j = 0; j < state_dim; ++j)
            state[j] = 100.0 * k + static_cast<double>(j);
        traj.states.push_back(std::move(state));
    }
    return traj;
}

} // namespace

TEST_CASE("assemble_snapshots keeps one row per whole day") {
    const auto traj = quarter_step_trajectory(480, 5); // 120 days at dt = 0.25
    const SnapshotMatrix snap = assemble_snapshots(traj, 1.0);
    REQUIRE(snap.n_cells == 1);
    REQUIRE(snap.rows.size() == 121);
    for (std::size_t k = 0; k < snap.days.size(); ++k)
        REQUIRE(snap.days[k] == static_cast<int>(k));
    // row k must be the state at t = k days, i.e. trajectory index 4k
    REQUIRE(snap.rows[0] == traj.states[0]);
    REQUIRE(snap.rows[1] == traj.states[4]);
    REQUIRE(snap.rows[120] == traj.states[480]);
}

TEST_CASE("assemble_snapshots cadence equal to the step keeps everything") {
    const auto traj = quarter_step_trajectory(8, 5);
    const SnapshotMatrix snap = assemble_snapshots(traj, 0.25);
    REQUIRE(snap.rows.size() == 9);
}

TEST_CASE("assemble_snapshots rejects incompatible cadences") {
    const auto traj = quarter_step_trajectory(8, 5);
    REQUIRE_THROWS_AS(assemble_snapshots(traj, 0.3), Error);  // not a multiple
    REQUIRE_THROWS_AS(assemble_snapshots(traj, 0.1), Error);  // finer than the step
    REQUIRE_THROWS_AS(assemble_snapshots(traj, -1.0), Error);
    try {
        assemble_snapshots(traj, 0.3);
        FAIL("expected a cadence error");
    } catch (const Error& e) {
        REQUIRE(e.kind() == ErrorKind::CadenceMismatch);
    }
}

TEST_CASE("assemble_snapshots requires state length to be a compartment multiple") {
    const auto traj = quarter_step_trajectory(4, 7); // 7 is not a multiple of 5
    REQUIRE_THROWS_AS(assemble_snapshots(traj, 1.0), Error);
}

TEST_CASE("snapshot CSV round-trips bit-exactly") {
    Rng rng(31415);
    SnapshotMatrix snap;
    snap.n_cells = 3;
    for (int day = 0; day < 4; ++day) {
        snap.days.push_back(day * 2); // non-contiguous days survive the trip
        std::vector<double> row(15);
        for (auto& v : row) v = rng.uniform(0.0, 1.0);
        snap.rows.push_back(std::move(row));
    }

    std::ostringstream out;
    write_snapshot_csv(snap, out);
    const std::string text = out.str();
    REQUIRE(text.rfind("day,s_0,s_1,s_2,e_0", 0) == 0);

    std::istringstream in(text);
    const SnapshotMatrix back = read_snapshot_csv(in);
    REQUIRE(back.n_cells == snap.n_cells);
    REQUIRE(back.days == snap.days);
    REQUIRE(back.rows == snap.rows); // exact: %.17g preserves doubles
}

TEST_CASE("snapshot CSV reader reports malformed input with line numbers") {
    {
        std::istringstream in("nonsense\n");
        REQUIRE_THROWS_WITH(read_snapshot_csv(in),
                            Catch::Matchers::ContainsSubstring("line 1"));
    }
    {
        std::istringstream in("day,s_0,e_0,i_0,r_0,d_0\n0,1,0,0,0\n");
        REQUIRE_THROWS_WITH(read_snapshot_csv(in),
                            Catch::Matchers::ContainsSubstring("line 2"));
    }
    {
        std::istringstream in("day,s_0,e_0,i_0,r_0,d_0\n0,1,0,bad,0,0\n");
        REQUIRE_THROWS_AS(read_snapshot_csv(in), Error);
    }
    {
        std::istringstream in("day,s_0,e_0,i_0,r_0,d_0\n");
        REQUIRE_THROWS_WITH(read_snapshot_csv(in),
                            Catch::Matchers::ContainsSubstring("no data rows"));
    }
    {
        // Wrong column order in header
        std::istringstream in("day,e_0,s_0,i_0,r_0,d_0\n0,1,1,1,1,1\n");
        REQUIRE_THROWS_AS(read_snapshot_csv(in), Error);
    }
}

TEST_CASE("normalize divides by the day-0 living population") {
    SnapshotMatrix snap;
    snap.n_cells = 2;
    snap.days = {0, 1};
    // s = {3, 1}, e = {0.5, 0.5}, i = {0, 0}, r = {0, 0}, d = {10, 10}
    // living total = 3 + 1 + 0.5 + 0.5 = 5 (dead are excluded)
    snap.rows = {{3, 1, 0.5, 0.5, 0, 0, 0, 0, 10, 10},
                 {2, 2, 0.5, 0.5, 0, 0, 0, 0, 10, 10}};
    const auto [scaled, scale] = normalize(snap);
    REQUIRE(scale == 5.0);
    REQUIRE(scaled.rows[0][0] == Catch::Approx(0.6).margin(1e-15));
    REQUIRE(scaled.rows[1][8] == Catch::Approx(2.0).margin(1e-15));
    REQUIRE(scaled.days == snap.days);

    SnapshotMatrix dead_world = snap;
    dead_world.rows[0] = {0, 0, 0, 0, 0, 0, 0, 0, 10, 10};
    try {
        normalize(dead_world);
        FAIL("expected a population error");
    } catch (const Error& e) {
        REQUIRE(e.kind() == ErrorKind::ZeroPopulation);
    }
}

TEST_CASE("aggregate_mean collapses cells to their spatial average") {
    SnapshotMatrix snap;
    snap.n_cells = 2;
    snap.days = {0};
    snap.rows = {{1.0, 3.0, 0.2, 0.4, 0, 0, 0, 0, 0.5, 1.5}};
    const SnapshotMatrix agg = aggregate_mean(snap);
    REQUIRE(agg.n_cells == 1);
    REQUIRE(agg.rows[0].size() == 5);
    REQUIRE(agg.rows[0][0] == Catch::Approx(2.0).margin(1e-15));  // s
    REQUIRE(agg.rows[0][1] == Catch::Approx(0.3).margin(1e-15));  // e
    REQUIRE(agg.rows[0][4] == Catch::Approx(1.0).margin(1e-15));  // d
}

TEST_CASE("split_train_forecast keeps day labels on both sides") {
    SnapshotMatrix snap;
    snap.n_cells = 1;
    for (int day = 1; day <= 10; ++day) {
        snap.days.push_back(day);
        snap.rows.push_back(std::vector<double>(5, static_cast<double>(day)));
    }
    const auto [train, holdout] = split_train_forecast(snap, 7);
    REQUIRE(train.rows.size() == 7);
    REQUIRE(holdout.rows.size() == 3);
    REQUIRE(train.days.back() == 7);
    REQUIRE(holdout.days.front() == 8);
    REQUIRE(holdout.rows[0][0] == 8.0);

    REQUIRE_THROWS_AS(split_train_forecast(snap, 1), Error);
    REQUIRE_THROWS_AS(split_train_forecast(snap, 10), Error);
    REQUIRE_THROWS_AS(split_train_forecast(snap, 11), Error);
}

TEST_CASE("synthetic bump mass matches the closed-form Gaussian integral") {
    const Grid grid = build_grid(32, 32, 1.0);
    InitialConditionSpec spec;
    spec.bumps[1].push_back({16.0, 16.0, 1.5, 2.0}); // e compartment
    const CompartmentFields fields = synth_initial_conditions(grid, spec);

    double sum = 0.0;
    for (double v : fields.e) sum += v;
    // Integral of A*exp(-r^2/(2 sigma^2)) over the plane = A*2*pi*sigma^2
    // = 2 * 2*pi * 2.25 = 9*pi; cell sum approximates it except for tails
    // that are ~1e-20 here.
    const double expected = 9.0 * std::numbers::pi;
    REQUIRE(expected == Catch::Approx(28.274333882308138).margin(1e-12));
    REQUIRE(sum == Catch::Approx(expected).epsilon(1e-12));

    for (double v : fields.s) REQUIRE(v == 0.0); // untouched compartments stay zero
}

TEST_CASE("uniform background and bumps are additive") {
    const Grid grid = build_grid(8, 8, 0.5);
    InitialConditionSpec spec;
    spec.uniform[0] = 0.7;
    spec.bumps[0].push_back({2.0, 2.0, 0.5, 1.0});
    const CompartmentFields fields = synth_initial_conditions(grid, spec);
    // At the bump center the Gaussian contributes exactly its amplitude:
    // cell (3,3) has center ((3+0.5)*0.5, (3+0.5)*0.5) = (1.75, 1.75).
    // Instead probe the exact center by picking bump at a cell center.
    InitialConditionSpec centered;
    centered.uniform[0] = 0.7;
    centered.bumps[0].push_back({grid.center_x(4), grid.center_y(4), 0.5, 1.0});
    const CompartmentFields f2 = synth_initial_conditions(grid, centered);
    REQUIRE(f2.s[static_cast<std::size_t>(grid.index(4, 4))] ==
            Catch::Approx(1.7).margin(1e-12));
    REQUIRE(fields.s[0] >= 0.7);
}

TEST_CASE("initial condition validation") {
    InitialConditionSpec spec;
    spec.uniform[0] = -0.1;
    REQUIRE_THROWS_AS(spec.validate(), Error);
    spec.uniform[0] = 0.0;
    spec.bumps[2].push_back({1.0, 1.0, 0.0, 1.0}); // sigma must be > 0
    REQUIRE_THROWS_AS(spec.validate(), Error);
    spec.bumps[2].clear();
    spec.bumps[2].push_back({1.0, 1.0, 1.0, -2.0}); // amp must be >= 0
    REQUIRE_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("case series loader handles region lines and column subsets") {
    std::istringstream in("# region: testshire\n"
                          "date,i,d\n"
                          "2021-03-01,10,1\n"
                          "2021-03-02,12,1\n"
                          "2021-03-04,15,2\n");
    const CaseSeries series = load_case_series(in);
    REQUIRE(series.region == "testshire");
    REQUIRE(series.present == std::array<bool, 5>{false, false, true, false, true});
    REQUIRE(series.day_offsets == std::vector<int>{0, 1, 3}); // gap preserved
    REQUIRE(series.counts[2] == std::vector<double>{10, 12, 15});
    REQUIRE(series.counts[4] == std::vector<double>{1, 1, 2});
    REQUIRE(series.counts[0].empty());
}

TEST_CASE("case series loader rejects bad input with line numbers") {
    {
        std::istringstream in("date,d,i\n2021-03-01,1,10\n"); // wrong order
        REQUIRE_THROWS_AS(load_case_series(in), Error);
    }
    {
        std::istringstream in("date,i\n2021-03-02,5\n2021-03-02,6\n");
        try {
            load_case_series(in);
            FAIL("expected a date error");
        } catch (const Error& e) {
            REQUIRE(e.kind() == ErrorKind::NonMonotonicDates);
            REQUIRE_THAT(e.what(), Catch::Matchers::ContainsSubstring("line 3"));
        }
    }
    {
        std::istringstream in("date,i\n2021-03-02,-5\n");
        try {
            load_case_series(in);
            FAIL("expected a count error");
        } catch (const Error& e) {
            REQUIRE(e.kind() == ErrorKind::NegativeCount);
        }
    }
    {
        std::istringstream in("date,i\n03/02/2021,5\n");
        REQUIRE_THROWS_WITH(load_case_series(in),
                            Catch::Matchers::ContainsSubstring("ISO-8601"));
    }
    {
        std::istringstream in("date,i\n");
        REQUIRE_THROWS_WITH(load_case_series(in),
                            Catch::Matchers::ContainsSubstring("no data rows"));
    }
}

TEST_CASE("case series round-trips through its writer") {
    CaseSeries series;
    series.region = "roundtrip";
    series.dates = {"2021-03-01", "2021-03-02"};
    series.day_offsets = {0, 1};
    series.present[2] = series.present[4] = true;
    series.counts[2] = {10.5, 12.25};
    series.counts[4] = {1, 2};

    std::ostringstream out;
    write_case_series(series, out);
    std::istringstream in(out.str());
    const CaseSeries back = load_case_series(in);
    REQUIRE(back.region == series.region);
    REQUIRE(back.dates == series.dates);
    REQUIRE(back.present == series.present);
    REQUIRE(back.counts[2] == series.counts[2]);
    REQUIRE(back.counts[4] == series.counts[4]);
}

TEST_CASE("case series imputation fills the documented defaults") {
    CaseSeries series;
    series.dates = {"2021-03-01"};
    series.day_offsets = {0};
    series.present[2] = true;
    series.counts[2] = {10.0};

    const SnapshotMatrix snap = case_series_to_snapshots(series, 1000.0);
    REQUIRE(snap.n_cells == 1);
    REQUIRE(snap.rows[0][2] == 10.0);                    // i as observed
    REQUIRE(snap.rows[0][1] == 15.0);                    // e = 1.5 * i
    REQUIRE(snap.rows[0][3] == 0.0);                     // r defaults to zero
    REQUIRE(snap.rows[0][4] == 0.0);                     // d defaults to zero
    REQUIRE(snap.rows[0][0] == 1000.0 - 15.0 - 10.0);    // s absorbs the rest

    // Observed s wins over the imputed remainder.
    CaseSeries with_s = series;
    with_s.present[0] = true;
    with_s.counts[0] = {900.0};
    REQUIRE(case_series_to_snapshots(with_s, 1000.0).rows[0][0] == 900.0);

    // i column is mandatory.
    CaseSeries no_i;
    no_i.dates = {"2021-03-01"};
    no_i.day_offsets = {0};
    no_i.present[4] = true;
    no_i.counts[4] = {1.0};
    REQUIRE_THROWS_AS(case_series_to_snapshots(no_i, 1000.0), Error);

    // Population smaller than the observed counts is rejected.
    REQUIRE_THROWS_AS(case_series_to_snapshots(series, 20.0), Error);

    // Custom exposed ratio.
    REQUIRE(case_series_to_snapshots(series, 1000.0, 0.0).rows[0][1] == 0.0);
}
