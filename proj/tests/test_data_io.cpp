#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "swg/data_io.hpp"
#include "swg/inference.hpp"
#include "swg/model_io.hpp"
#include "swg/rng.hpp"
#include "swg/simulate.hpp"
#include "test_helpers.hpp"

using namespace swg;

namespace {

const char* kRrHeader =
    "EUROPEAN CLIMATE ASSESSMENT & DATASET (ECA&D)\n"
    "\n"
    "This is the blended series of station FOO\n"
    "\n"
    " STAID, SOUID,    DATE,   RR,   Q_RR\n";

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("parsing a small precipitation file with every row kind") {
    std::istringstream in(std::string(kRrHeader) +
                          "  123,  456, 19960101,   25,    0\n"
                          "  123,  456, 19960102,    0,    0\n"
                          "  123,  456, 19960103, -9999,    9\n"
                          "  123,  456, 19960104,   13,    1\n"
                          "  123,  456, 19960105,   -4,    0\n"
                          "  123,  456, 19961301,    7,    0\n"
                          "  123,  456, not_a_date,    7,    0\n"
                          "  123,  456, 19960106\n");
    const EcadParseResult r = parse_ecad(in, EcadVariable::Precip);
    CHECK(r.station_id == "123");
    // Valid: day 1 (2.5 mm), day 2 (0.0 mm). Missing: day 3 (Q=9), day 4
    // (suspect). Rejected: day 5 (negative with Q=0). Malformed: bad month,
    // bad date, short row.
    REQUIRE(r.records.size() == 5);
    CHECK(r.records[0].date == 19960101);
    CHECK(r.records[0].value == doctest::Approx(2.5));
    CHECK(r.records[0].flag == '.');
    CHECK(r.records[1].value == 0.0);
    CHECK(r.records[2].flag == 'm');
    CHECK(is_missing(r.records[2].value));
    CHECK(r.records[3].flag == 's');
    CHECK(r.records[4].flag == 'x');
    CHECK(r.n_missing >= 1);
    CHECK(r.n_suspect == 1);
    CHECK(r.diagnostics.size() == 4);  // negative value + 3 malformed rows

    // Suspect values can be kept on request.
    std::istringstream in2(std::string(kRrHeader) + "  123,  456, 19960104,   13,    1\n");
    const EcadParseResult keep = parse_ecad(in2, EcadVariable::Precip, false);
    CHECK(keep.records[0].value == doctest::Approx(1.3));
    CHECK(keep.records[0].flag == '.');
}

TEST_CASE("parser refuses files without the table") {
    std::istringstream no_header("just some text\nwith no data\n");
    CHECK_THROWS_AS(parse_ecad(no_header, EcadVariable::Temp), DataFormatError);
    std::istringstream no_rows{std::string(kRrHeader)};
    CHECK_THROWS_AS(parse_ecad(no_rows, EcadVariable::Temp), DataFormatError);
}

TEST_CASE("merge: outer join, leap-day drop, thresholding") {
    // 1996 is a leap year: Feb 29 exists in the source but not in the
    // 365-day calendar.
    EcadParseResult rr;
    rr.station_id = "123";
    rr.records = {{19960228, 3.0, '.'},
                  {19960229, 9.0, '.'},   // dropped with the leap day
                  {19960301, 0.05, '.'},  // below the threshold: becomes 0
                  {19960302, 0.1, '.'}};
    EcadParseResult tg;
    tg.station_id = "123";
    tg.records = {{19960228, 5.5, '.'}, {19960301, 6.5, '.'}, {19971215, -2.0, '.'}};

    MergeSummary ms;
    const DailySeries s = merge_and_normalize(rr, tg, 1996, 1997, 0.1, "foo", &ms);
    CHECK(s.calendar.first_year == 1996);
    CHECK(s.calendar.n_years == 2);
    CHECK(s.n_days() == 730);
    CHECK(ms.n_days == 730);

    // Day-of-year on the fixed calendar: Feb 28 is day 59, Mar 1 is day 60.
    CHECK(s.precip[58] == doctest::Approx(3.0));
    CHECK(s.temp[58] == doctest::Approx(5.5));
    CHECK(s.precip[59] == 0.0);  // 0.05 thresholded to exact zero
    CHECK(s.temp[59] == doctest::Approx(6.5));
    CHECK(s.precip[60] == doctest::Approx(0.1));  // at the threshold: kept
    CHECK(ms.thresholded == 1);

    // Unmatched days are missing with 'm' flags.
    CHECK(is_missing(s.precip[0]));
    CHECK(s.flags[0].precip == 'm');
    CHECK(is_missing(s.temp[59 + 365]));  // 1997 day 60
    const long dec15 = 365 + 348;  // 1997, day 349
    CHECK(s.temp[dec15] == doctest::Approx(-2.0));

    // A range with no data throws.
    CHECK_THROWS_AS(merge_and_normalize(rr, tg, 1980, 1981, 0.1, "foo", nullptr),
                    DataFormatError);
}

TEST_CASE("date arithmetic on the fixed calendar") {
    const Calendar cal{1996, 2};
    CHECK(date_of_day(cal, 1) == 19960101);
    CHECK(date_of_day(cal, 59) == 19960228);
    CHECK(date_of_day(cal, 60) == 19960301);  // no Feb 29
    CHECK(date_of_day(cal, 365) == 19961231);
    CHECK(date_of_day(cal, 366) == 19970101);
    CHECK(date_of_day(cal, 730) == 19971231);
    // Round trip through day_of_year_from_month_day.
    CHECK(day_of_year_from_month_day(2, 29) == 0);  // not representable
    CHECK(day_of_year_from_month_day(12, 31) == 365);
}

TEST_CASE("summary statistics of a constructed series") {
    // Two years: year one fully observed, year two heavily gapped so only
    // year one enters the yearly precipitation mean.
    DailySeries s;
    s.calendar = Calendar{2000, 2};
    s.station = "foo";
    const long n = 730;
    s.precip.assign(n, 0.0);
    s.temp.assign(n, 10.0);
    s.flags.resize(n);
    // Year one: every 5th day wet with 4 mm: 73 wet days, total 292 mm.
    for (long t = 0; t < 365; t += 5) s.precip[t] = 4.0;
    // Year two: 100 missing precipitation days (> 10%).
    for (long t = 365; t < 465; ++t) s.precip[t] = kMissing;
    s.precip[500] = 30.0;
    // Winter days colder than summer days.
    for (long t = 0; t < n; ++t) {
        const int month = month_of_day_of_year(s.calendar.day_of_year(t + 1));
        if (month == 12 || month <= 2) s.temp[t] = 0.0;
        if (month >= 6 && month <= 8) s.temp[t] = 20.0;
    }
    const SummaryStats st = summary_stats(s);
    CHECK(st.mean_yearly_precip == doctest::Approx(292.0));
    CHECK(st.max_daily_precip == doctest::Approx(30.0));
    // Wet days: 73 in year one, 1 in year two, of 630 observed days.
    CHECK(st.precip_frequency == doctest::Approx(74.0 / 630.0).epsilon(1e-12));
    CHECK(st.mean_positive_precip == doctest::Approx((73.0 * 4.0 + 30.0) / 74.0).epsilon(1e-12));
    CHECK(st.temp_mean[0] == doctest::Approx(0.0));   // winter
    CHECK(st.temp_mean[2] == doctest::Approx(20.0));  // summer
    CHECK(st.temp_sd[0] == doctest::Approx(0.0));
    CHECK(st.n_days == 730);
    CHECK(st.precip_missing == 100);
    CHECK(st.temp_missing == 0);
}

TEST_CASE("series files round-trip exactly") {
    ModelSpec spec;
    spec.n_components = 2;
    spec.n_dirac = 1;
    RngStream rng(10001, 0);
    DailySeries s = test::random_series(spec, Calendar{1987, 2}, 730, rng, 0.2);
    s.station = "roundtrip";
    s.dryness_threshold = 0.25;
    s.flags[3].precip = 's';
    s.flags[4].temp = 'x';

    const std::string path = tmp_path("swg_series_roundtrip.tsv");
    write_series_file(s, path, {"origin=unit-test"});
    const DailySeries r = read_series_file(path);
    CHECK(r.station == s.station);
    CHECK(r.calendar.first_year == 1987);
    CHECK(r.calendar.n_years == 2);
    CHECK(r.dryness_threshold == 0.25);
    REQUIRE(r.n_days() == s.n_days());
    for (long t = 0; t < s.n_days(); ++t) {
        if (is_missing(s.precip[t]))
            CHECK(is_missing(r.precip[t]));
        else
            CHECK(r.precip[t] == doctest::Approx(s.precip[t]).epsilon(1e-9));
        if (is_missing(s.temp[t]))
            CHECK(is_missing(r.temp[t]));
        else
            CHECK(r.temp[t] == doctest::Approx(s.temp[t]).epsilon(1e-9));
        CHECK(r.flags[t].precip == s.flags[t].precip);
        CHECK(r.flags[t].temp == s.flags[t].temp);
    }
    std::remove(path.c_str());
}

TEST_CASE("series reader rejects corrupted files") {
    const std::string path = tmp_path("swg_series_bad.tsv");
    auto write = [&](const std::string& text) {
        FILE* f = std::fopen(path.c_str(), "w");
        REQUIRE(f);
        std::fputs(text.c_str(), f);
        std::fclose(f);
    };

    write("not a series file\n");
    CHECK_THROWS_AS(read_series_file(path), DataFormatError);

    // A gap in the dates (Jan 2 missing).
    write(
        "# swg-series v1\n# station=x\n# first_year=2000\n# n_years=1\n# period=365\n"
        "# dryness_threshold=0.1\n# columns=date\tprecip\ttemp\tflags\n"
        "20000101\t0\t1.5\t..\n"
        "20000103\t0\t1.5\t..\n");
    CHECK_THROWS_AS(read_series_file(path), DataFormatError);

    // Malformed value field.
    write(
        "# swg-series v1\n# station=x\n# first_year=2000\n# n_years=1\n# period=365\n"
        "# dryness_threshold=0.1\n# columns=date\tprecip\ttemp\tflags\n"
        "20000101\tzero\t1.5\t..\n");
    CHECK_THROWS_AS(read_series_file(path), DataFormatError);

    CHECK_THROWS_AS(read_series_file(tmp_path("no_such_file.tsv")), DataFormatError);
    std::remove(path.c_str());
}

TEST_CASE("station metadata validation") {
    StationMeta ok;
    ok.id = "x";
    validate_station_meta(ok);  // missing coordinates are fine
    ok.latitude = 37.3;
    ok.longitude = -6.0;
    validate_station_meta(ok);
    StationMeta bad = ok;
    bad.latitude = 123.0;
    CHECK_THROWS_AS(validate_station_meta(bad), InvalidParameterError);
    bad = ok;
    bad.longitude = -200.0;
    CHECK_THROWS_AS(validate_station_meta(bad), InvalidParameterError);
}

TEST_CASE("model files round-trip bit for bit") {
    ModelSpec spec;
    spec.n_states = 2;
    spec.n_components = 3;
    spec.n_dirac = 1;
    spec.degree = 1;
    spec.trend.kind = TrendKind::PiecewiseLinear;
    spec.trend.break_year = 1981;
    RngStream rng(10002, 0);
    FittedModel m;
    m.station = "roundtrip";
    m.spec = spec;
    m.calendar = Calendar{1960, 4};
    m.dryness_threshold = 0.1;
    m.params = test::random_parameters(spec, rng);
    m.loglik = -1234.5678901234567;
    m.bic = 1300.0;
    m.n_params = count_parameters(spec);
    m.n_obs = 1460;
    m.iterations = 17;
    m.converged = true;
    m.restart_logliks = {-1234.5678901234567, -1250.25};

    const std::string path = tmp_path("swg_model_roundtrip.json");
    save_model(m, path, "fingerprint123", 42);
    const LoadedModel lm = load_model(path);
    CHECK(lm.data_fingerprint == "fingerprint123");
    CHECK(lm.seed == 42);
    const FittedModel& r = lm.model;
    CHECK(r.station == m.station);
    CHECK(r.spec.n_states == 2);
    CHECK(r.spec.trend.kind == TrendKind::PiecewiseLinear);
    CHECK(r.spec.trend.break_year == 1981);
    CHECK(r.calendar.first_year == 1960);
    CHECK(r.loglik == m.loglik);  // exact: doubles survive the JSON round trip
    CHECK(r.n_obs == 1460);
    CHECK(r.converged);
    REQUIRE(r.restart_logliks.size() == 2);
    CHECK(r.restart_logliks[0] == m.restart_logliks[0]);
    CHECK(test::max_abs_diff(r.params, m.params) == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("model loader validates content") {
    const std::string path = tmp_path("swg_model_bad.json");
    FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f);
    std::fputs("{\"format\":\"something-else\",\"version\":1}", f);
    std::fclose(f);
    CHECK_THROWS_AS(load_model(path), DataFormatError);
    f = std::fopen(path.c_str(), "w");
    REQUIRE(f);
    std::fputs("not json at all {", f);
    std::fclose(f);
    CHECK_THROWS_AS(load_model(path), DataFormatError);
    std::remove(path.c_str());
}

TEST_CASE("trajectory batches round-trip and detect truncation") {
    const std::string path = tmp_path("swg_batch_roundtrip.bin");
    BatchHeader h;
    h.n_trajectories = 3;
    h.n_days = 40;
    h.seed = 7;
    h.emit_states = true;
    h.first_year = 1990;
    h.period = 365;
    h.dryness_threshold = 0.1;
    h.station = "batch";
    h.model_fingerprint = "abc";

    RngStream rng(10003, 0);
    std::vector<Trajectory> trajs(3);
    for (auto& tr : trajs) {
        tr.precip.resize(40);
        tr.temp.resize(40);
        tr.state.resize(40);
        tr.component.resize(40);
        for (int t = 0; t < 40; ++t) {
            tr.precip[t] = rng.uniform() < 0.5 ? 0.0 : rng.exponential_mean(2.0);
            tr.temp[t] = rng.normal(5.0, 3.0);
            tr.state[t] = rng.uniform() < 0.5 ? 0 : 1;
            tr.component[t] = tr.precip[t] > 0.0 ? 1 : 0;
        }
    }
    {
        BatchWriter w(path, h);
        for (const auto& tr : trajs) w.write(tr);
        w.close();
    }
    BatchReader r(path);
    CHECK(r.header().n_trajectories == 3);
    CHECK(r.header().emit_states);
    CHECK(r.header().station == "batch");
    // Random access in arbitrary order, bit-exact payload.
    for (int i : {2, 0, 1}) {
        const Trajectory tr = r.read(i);
        CHECK(tr.precip == trajs[i].precip);
        CHECK(tr.temp == trajs[i].temp);
        CHECK(tr.state == trajs[i].state);
        CHECK(tr.component == trajs[i].component);
    }
    CHECK_THROWS_AS(r.read(3), InvalidParameterError);

    // A series view applies the dry convention and the calendar.
    const DailySeries s = r.read_series(1);
    CHECK(s.calendar.first_year == 1990);
    CHECK(s.n_days() == 40);
    CHECK(s.dryness_threshold == 0.1);

    // Truncated payload is rejected on open.
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
    CHECK_THROWS_AS(BatchReader{path}, DataFormatError);

    // Writing fewer trajectories than promised is an error.
    {
        BatchWriter w(path, h);
        w.write(trajs[0]);
        CHECK_THROWS_AS(w.close(), DataFormatError);
    }
    std::remove(path.c_str());
}
