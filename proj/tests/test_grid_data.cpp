#include "climreg/errors.hpp"
#include "climreg/grid_data.hpp"
#include "climreg/io_util.hpp"

#include "support/test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace climreg;

TEST_SUITE("grid_data") {

TEST_CASE("csv_long single day, 4 cells, 2 channels") {
    testutil::TempDir tmp("csv_small");
    const std::string csv =
        "date,lat,lon,channel,value\n"
        "2001-07-03,-10,-40,tmin,18.5\n"
        "2001-07-03,-10,-39,tmin,19\n"
        "2001-07-03,-9,-40,tmin,17.25\n"
        "2001-07-03,-9,-39,tmin,18\n"
        "2001-07-03,-10,-40,tmax,29.5\n"
        "2001-07-03,-10,-39,tmax,30\n"
        "2001-07-03,-9,-40,tmax,28.75\n"
        "2001-07-03,-9,-39,tmax,29\n";
    const auto path = tmp.path() / "one_day.csv";
    write_text_file(path, csv);

    const DailyFieldSeries s = load_series(path, SeriesFormat::csv_long);
    CHECK(s.fields.size() == 1);
    CHECK(s.geometry.height == 2);
    CHECK(s.geometry.width == 2);
    CHECK(s.n_channels() == 2);
    CHECK(s.geometry.resolution == doctest::Approx(1.0));
    // lat rows run south to north, tmin before tmax (file order).
    CHECK(s.channel_names[0] == "tmin");
    CHECK(s.fields[0].at(0, 0, 0, 2, 2) == doctest::Approx(18.5));
    CHECK(s.fields[0].at(1, 1, 1, 2, 2) == doctest::Approx(29.0));
}

TEST_CASE("csv_long duplicate record is an error") {
    testutil::TempDir tmp("csv_dup");
    const std::string csv =
        "date,lat,lon,channel,value\n"
        "2001-07-03,-10,-40,tmin,18.5\n"
        "2001-07-03,-10,-40,tmin,18.5\n";
    const auto path = tmp.path() / "dup.csv";
    write_text_file(path, csv);
    CHECK_THROWS_AS(load_series(path, SeriesFormat::csv_long), DataError);
}

TEST_CASE("csv_long malformed header is an error") {
    testutil::TempDir tmp("csv_hdr");
    const auto path = tmp.path() / "bad.csv";
    write_text_file(path, "date,lat,lon,value\n");
    CHECK_THROWS_AS(load_series(path, SeriesFormat::csv_long), DataError);
}

TEST_CASE("csv_long empty value means missing, zero-filled") {
    testutil::TempDir tmp("csv_missing");
    const std::string csv =
        "date,lat,lon,channel,value\n"
        "2001-07-03,-10,-40,tmin,\n"
        "2001-07-03,-10,-39,tmin,19\n"
        "2001-07-03,-9,-40,tmin,17\n"
        "2001-07-03,-9,-39,tmin,18\n";
    const auto path = tmp.path() / "missing.csv";
    write_text_file(path, csv);
    const DailyFieldSeries s = load_series(path, SeriesFormat::csv_long);
    CHECK(s.fields[0].missing[0] == 1);
    CHECK(s.fields[0].values[0] == 0.0);
    CHECK(s.fields[0].missing[1] == 0);
}

TEST_CASE("round-trip is bitwise identity on a 10-day synthetic series") {
    SyntheticSpec spec;
    spec.geometry = {-12.0, -50.0, 0.5, 4, 5};
    spec.n_regimes = 3;
    spec.first_year = 2001;
    spec.last_year = 2001;
    spec.noise_sigma = 0.4;
    spec.seasonal_amplitude = 1.0;
    spec.seed = 7;
    DailyFieldSeries s = synthesize(spec).series;
    s.fields.resize(10);

    testutil::TempDir tmp("roundtrip");
    for (const SeriesFormat fmt : {SeriesFormat::packed_binary, SeriesFormat::csv_long}) {
        const auto path = tmp.path() / (fmt == SeriesFormat::csv_long ? "s.csv" : "s.bin");
        write_series(s, path, fmt);
        const DailyFieldSeries r = load_series(path, fmt);
        REQUIRE(r.fields.size() == s.fields.size());
        CHECK(r.geometry.height == s.geometry.height);
        CHECK(r.geometry.width == s.geometry.width);
        CHECK(r.channel_names == s.channel_names);
        for (std::size_t i = 0; i < s.fields.size(); ++i) {
            CHECK(r.fields[i].date == s.fields[i].date);
            CHECK(r.fields[i].values == s.fields[i].values); // bitwise
            CHECK(r.fields[i].missing == s.fields[i].missing);
        }
    }
}

TEST_CASE("packed_binary rejects non-monotone dates") {
    testutil::TempDir tmp("nonmono");
    SyntheticSpec spec;
    spec.geometry = {-12.0, -50.0, 1.0, 2, 2};
    spec.n_regimes = 1;
    spec.first_year = 2001;
    spec.last_year = 2001;
    DailyFieldSeries s = synthesize(spec).series;
    s.fields.resize(3);
    std::swap(s.fields[0], s.fields[1]);
    const auto path = tmp.path() / "bad.bin";
    CHECK_THROWS_AS(write_series(s, path, SeriesFormat::packed_binary), DataError);
}

TEST_CASE("spatial_subset identity and idempotence") {
    const DailyFieldSeries s = testutil::random_series(6, 7, 2, 3, 11);
    const BBox full{s.geometry.lat_min, s.geometry.lat_max(), s.geometry.lon_min,
                    s.geometry.lon_max()};
    const DailyFieldSeries same = spatial_subset(s, full);
    CHECK(same.geometry.height == s.geometry.height);
    CHECK(same.geometry.width == s.geometry.width);
    for (std::size_t i = 0; i < s.fields.size(); ++i) {
        CHECK(same.fields[i].values == s.fields[i].values);
    }

    const BBox box{2.0, 4.0, 1.0, 5.0};
    const DailyFieldSeries once = spatial_subset(s, box);
    const DailyFieldSeries twice = spatial_subset(once, box);
    CHECK(once.geometry.height == twice.geometry.height);
    CHECK(once.geometry.width == twice.geometry.width);
    for (std::size_t i = 0; i < once.fields.size(); ++i) {
        CHECK(once.fields[i].values == twice.fields[i].values);
    }
}

TEST_CASE("paper bounding box at 0.1 degrees keeps 151 x 146 grid centers") {
    // Host grid slightly larger than the study box.
    DailyFieldSeries s;
    s.geometry = {-23.0, -58.5, 0.1, 171, 166};
    s.channel_names = {"tmin"};
    DailyField f;
    f.date = {2000, 1, 1};
    f.values.assign(s.cells_per_channel(), 1.0);
    f.missing.assign(s.cells_per_channel(), 0);
    s.fields.push_back(std::move(f));

    const BBox paper_box{-22.0, -7.0, -57.5, -43.0};
    const DailyFieldSeries sub = spatial_subset(s, paper_box);

    // Enumeration oracle: count centers lat_min + i*0.1 in the closed box.
    int lat_count = 0, lon_count = 0;
    for (int i = 0; i < s.geometry.height; ++i) {
        const double lat = s.geometry.lat_at(i);
        if (lat >= paper_box.lat_min - 1e-7 && lat <= paper_box.lat_max + 1e-7) {
            ++lat_count;
        }
    }
    for (int j = 0; j < s.geometry.width; ++j) {
        const double lon = s.geometry.lon_at(j);
        if (lon >= paper_box.lon_min - 1e-7 && lon <= paper_box.lon_max + 1e-7) {
            ++lon_count;
        }
    }
    CHECK(lat_count == 151);
    CHECK(lon_count == 146);
    CHECK(sub.geometry.height == 151);
    CHECK(sub.geometry.width == 146);
}

TEST_CASE("spatial_subset outside the grid is an error") {
    const DailyFieldSeries s = testutil::random_series(4, 4, 1, 1, 3);
    CHECK_THROWS_AS(spatial_subset(s, BBox{100.0, 110.0, 100.0, 110.0}), DataError);
}

TEST_CASE("split_by_years partitions exactly by year") {
    SyntheticSpec spec;
    spec.geometry = {-12.0, -50.0, 1.0, 3, 3};
    spec.n_regimes = 2;
    spec.first_year = 1961;
    spec.last_year = 2024;
    spec.seed = 5;
    const DailyFieldSeries s = synthesize(spec).series;

    SUBCASE("empty test set") {
        const auto [train, test] = split_by_years(s, {});
        CHECK(test.fields.empty());
        CHECK(train.fields.size() == s.fields.size());
    }
    SUBCASE("paper test years") {
        const auto [train, test] = split_by_years(s, {1981, 2000});
        CHECK(train.fields.size() + test.fields.size() == s.fields.size());
        long expected = 0;
        for (const DailyField& f : s.fields) {
            if (f.date.year == 1981 || f.date.year == 2000) {
                ++expected;
            }
        }
        CHECK(static_cast<long>(test.fields.size()) == expected);
        CHECK(expected == 365 + 366); // 1981 regular, 2000 leap
        for (const DailyField& f : test.fields) {
            CHECK((f.date.year == 1981 || f.date.year == 2000));
        }
        // Order preserved within both partitions.
        for (std::size_t i = 1; i < train.fields.size(); ++i) {
            CHECK(train.fields[i - 1].date < train.fields[i].date);
        }
        for (std::size_t i = 1; i < test.fields.size(); ++i) {
            CHECK(test.fields[i - 1].date < test.fields[i].date);
        }
    }
    SUBCASE("all years to test") {
        std::vector<int> years;
        for (int y = 1961; y <= 2024; ++y) {
            years.push_back(y);
        }
        const auto [train, test] = split_by_years(s, years);
        CHECK(train.fields.empty());
        CHECK(test.fields.size() == s.fields.size());
    }
}

TEST_CASE("normalize gives per-channel mean 0 and sd 1") {
    DailyFieldSeries s = testutil::random_series(5, 5, 2, 40, 17);
    // A few missing cells to exercise the mask handling.
    s.fields[0].missing[3] = 1;
    s.fields[7].missing[12] = 1;
    const ChannelStats stats = compute_channel_stats(s);
    const DailyFieldSeries n = normalize(s, stats);
    const ChannelStats post = compute_channel_stats(n);
    for (int c = 0; c < 2; ++c) {
        CHECK(std::abs(post.mean[c]) < 1e-9);
        CHECK(std::abs(post.stddev[c] - 1.0) < 1e-9);
    }
    // Missing cells zero-filled.
    CHECK(n.fields[0].values[3] == 0.0);
    CHECK(n.fields[0].missing[3] == 1);
}

TEST_CASE("normalize with identity stats is the identity") {
    const DailyFieldSeries s = testutil::random_series(3, 3, 1, 5, 19);
    ChannelStats stats;
    stats.mean = {0.0};
    stats.stddev = {1.0};
    const DailyFieldSeries n = normalize(s, stats);
    for (std::size_t i = 0; i < s.fields.size(); ++i) {
        CHECK(n.fields[i].values == s.fields[i].values);
    }
}

TEST_CASE("normalize rejects a constant channel") {
    DailyFieldSeries s = testutil::random_series(3, 3, 1, 5, 23);
    for (DailyField& f : s.fields) {
        std::fill(f.values.begin(), f.values.end(), 4.0);
    }
    const ChannelStats stats = compute_channel_stats(s);
    CHECK_THROWS_AS(normalize(s, stats), DataError);
}

TEST_CASE("synthesize is deterministic per seed") {
    SyntheticSpec spec;
    spec.geometry = {-12.0, -50.0, 1.0, 4, 4};
    spec.n_regimes = 4;
    spec.first_year = 2000;
    spec.last_year = 2001;
    spec.noise_sigma = 0.3;
    spec.coupling_strength = 0.2;
    spec.seed = 42;
    const SyntheticData a = synthesize(spec);
    const SyntheticData b = synthesize(spec);
    REQUIRE(a.series.fields.size() == b.series.fields.size());
    for (std::size_t i = 0; i < a.series.fields.size(); ++i) {
        CHECK(a.series.fields[i].values == b.series.fields[i].values);
    }
    CHECK(a.true_labels == b.true_labels);
    REQUIRE(a.oni.entries.size() == b.oni.entries.size());
    for (std::size_t i = 0; i < a.oni.entries.size(); ++i) {
        CHECK(a.oni.entries[i].oni == b.oni.entries[i].oni);
    }
}

TEST_CASE("noise-free, season-free days equal their regime pattern") {
    SyntheticSpec spec;
    spec.geometry = {-12.0, -50.0, 1.0, 5, 5};
    spec.n_regimes = 3;
    spec.first_year = 2002;
    spec.last_year = 2002;
    spec.noise_sigma = 0.0;
    spec.seasonal_amplitude = 0.0;
    spec.seed = 9;
    const SyntheticData d = synthesize(spec);
    // All days with the same label carry bitwise identical fields.
    std::map<int, const DailyField*> reference;
    for (std::size_t i = 0; i < d.series.fields.size(); ++i) {
        const int label = d.true_labels[i].second;
        const auto it = reference.find(label);
        if (it == reference.end()) {
            reference[label] = &d.series.fields[i];
        } else {
            CHECK(d.series.fields[i].values == it->second->values);
        }
    }
    // Distinct regimes have distinct patterns.
    REQUIRE(reference.size() == 3);
    CHECK(reference[0]->values != reference[1]->values);
    CHECK(reference[1]->values != reference[2]->values);
}

TEST_CASE("uncoupled synthesis is independent of ENSO state") {
    int fails = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SyntheticSpec spec;
        spec.geometry = {-12.0, -50.0, 1.0, 2, 2};
        spec.n_regimes = 4;
        spec.first_year = 2000;
        spec.last_year = 2007;
        spec.coupling_strength = 0.0;
        spec.noise_sigma = 0.0;
        spec.seed = seed;
        const SyntheticData d = synthesize(spec);

        // Contingency of regime vs ENSO month over days.
        std::map<long long, bool> elnino;
        for (std::size_t i = 0; i < d.oni.entries.size(); ++i) {
            const OniEntry& e = d.oni.entries[i];
            elnino[month_index(e.year, e.month)] = e.oni >= 0.5;
        }
        std::vector<std::vector<long>> table(spec.n_regimes, std::vector<long>(2, 0));
        for (const auto& [date, regime] : d.true_labels) {
            table[regime][elnino.at(month_index(date)) ? 1 : 0]++;
        }
        if (testutil::chi_squared_independence_p(table) <= 0.01) {
            ++fails;
        }
    }
    CHECK(fails <= 1);
}

TEST_CASE("coupled synthesis raises the planted regime during El Nino months") {
    SyntheticSpec spec;
    spec.geometry = {-12.0, -50.0, 1.0, 2, 2};
    spec.n_regimes = 4;
    spec.enso_coupled_regime = 2;
    spec.coupling_strength = 0.3;
    spec.first_year = 2000;
    spec.last_year = 2007;
    spec.seed = 3;
    const SyntheticData d = synthesize(spec);
    std::map<long long, bool> elnino;
    for (const OniEntry& e : d.oni.entries) {
        elnino[month_index(e.year, e.month)] = e.oni >= 0.5;
    }
    long n_en = 0, n_ne = 0, hit_en = 0, hit_ne = 0;
    for (const auto& [date, regime] : d.true_labels) {
        if (elnino.at(month_index(date))) {
            ++n_en;
            hit_en += regime == 2 ? 1 : 0;
        } else {
            ++n_ne;
            hit_ne += regime == 2 ? 1 : 0;
        }
    }
    const double p_en = static_cast<double>(hit_en) / n_en;
    const double p_ne = static_cast<double>(hit_ne) / n_ne;
    CHECK(p_en > p_ne + 0.2);
}

TEST_CASE("synthetic spec validation") {
    SyntheticSpec spec;
    spec.n_regimes = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.n_regimes = 4;
    spec.coupling_strength = 1.5;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.coupling_strength = 0.2;
    spec.enso_coupled_regime = 7;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

} // TEST_SUITE
