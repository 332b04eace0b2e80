#include "climreg/errors.hpp"
#include "climreg/regimes.hpp"

#include "support/test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace climreg;

namespace {

PrototypeBank random_bank(int k, int dim, std::uint64_t seed) {
    return init_prototypes(k, dim, seed);
}

Latent random_unit(int dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(dim);
    for (double& x : v) {
        x = rng.normal();
    }
    double norm = 0.0;
    for (const double x : v) {
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) {
        x /= norm;
    }
    return Latent{std::move(v)};
}

RegimeSequence constant_sequence(int label, int n_days, Date start = {1990, 1, 1}) {
    RegimeSequence seq;
    Date d = start;
    for (int i = 0; i < n_days; ++i) {
        seq.entries.emplace_back(d, label);
        d = next_day(d);
    }
    return seq;
}

} // namespace

TEST_SUITE("regimes") {

TEST_CASE("a latent equal to a prototype returns that prototype") {
    const PrototypeBank bank = random_bank(8, 6, 21);
    Latent z;
    z.v.assign(bank.row(3), bank.row(3) + bank.dim);
    CHECK(assign_regime(z, bank) == 3);
}

TEST_CASE("exact ties break to the lowest index") {
    PrototypeBank bank = random_bank(8, 6, 22);
    // Make rows 2 and 7 identical.
    for (int d = 0; d < bank.dim; ++d) {
        bank.row(7)[d] = bank.row(2)[d];
    }
    const Latent z = random_unit(6, 4);
    const int a = assign_regime(z, bank);
    if (a == 2 || a == 7) {
        CHECK(a == 2);
    }
    Latent exact;
    exact.v.assign(bank.row(2), bank.row(2) + bank.dim);
    CHECK(assign_regime(exact, bank) == 2);
}

TEST_CASE("assign_regime agrees with the softmax argmax at any temperature") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const PrototypeBank bank = random_bank(7, 5, 100 + seed);
        const Latent z = random_unit(5, 200 + seed);
        const int hard = assign_regime(z, bank);
        for (const double tau : {0.025, 0.1, 1.0}) {
            const AssignmentDistribution p = prototype_probs(z, bank, tau);
            const int soft = static_cast<int>(
                std::max_element(p.probs.begin(), p.probs.end()) - p.probs.begin());
            CHECK(hard == soft);
        }
    }
}

TEST_CASE("discretize is deterministic and K=1 labels everything 0") {
    const DailyFieldSeries s = testutil::random_series(8, 8, 2, 30, 23);
    const DailyFieldSeries n = normalize(s, compute_channel_stats(s));
    EncoderDims dims;
    dims.patch_size = 2;
    dims.n_channels = 2;
    dims.embed_dim = 8;
    dims.hidden_dim = 8;
    dims.latent_dim = 8;
    const EncoderParams params = init_params(dims, 77);
    ViewConfig vc;
    vc.out_size = 8;
    vc.patch_size = 2;

    const PrototypeBank bank = random_bank(5, 8, 31);
    const RegimeSequence a = discretize(params, bank, n, vc, 1);
    const RegimeSequence b = discretize(params, bank, n, vc, 4);
    CHECK(a.entries == b.entries);
    CHECK(a.entries.size() == n.fields.size());

    const PrototypeBank single = random_bank(1, 8, 32);
    const RegimeSequence ones = discretize(params, single, n, vc);
    for (const auto& [date, k] : ones.entries) {
        CHECK(k == 0);
    }
}

TEST_CASE("monthly frequency of a constant sequence") {
    const RegimeSequence seq = constant_sequence(5, 400);
    const MonthlyFrequencyTable t = monthly_frequency(seq, 8);
    long total = 0;
    for (int k = 0; k < 8; ++k) {
        for (int m = 0; m < 12; ++m) {
            total += t.counts[k][m];
            if (k == 5 && t.counts[k][m] > 0) {
                CHECK(t.percent[k][m] == doctest::Approx(100.0));
            }
            if (k != 5) {
                CHECK(t.counts[k][m] == 0);
            }
        }
    }
    CHECK(total == 400);
}

TEST_CASE("monthly frequency columns sum to 100 and counts partition T") {
    Rng rng(5);
    RegimeSequence seq;
    Date d{1995, 1, 1};
    const int T = 3000;
    for (int i = 0; i < T; ++i) {
        seq.entries.emplace_back(d, static_cast<int>(rng.uniform_int(4)));
        d = next_day(d);
    }
    const MonthlyFrequencyTable t = monthly_frequency(seq, 4);
    long total = 0;
    for (int m = 0; m < 12; ++m) {
        double col = 0.0;
        for (int k = 0; k < 4; ++k) {
            col += t.percent[k][m];
            total += t.counts[k][m];
        }
        CHECK(col == doctest::Approx(100.0).epsilon(1e-6));
    }
    CHECK(total == T);
}

TEST_CASE("uniform random labels approach 100/K per cell") {
    Rng rng(7);
    RegimeSequence seq;
    Date d{1980, 1, 1};
    const int T = 14600; // about 40 years
    for (int i = 0; i < T; ++i) {
        seq.entries.emplace_back(d, static_cast<int>(rng.uniform_int(4)));
        d = next_day(d);
    }
    const MonthlyFrequencyTable t = monthly_frequency(seq, 4);
    // ~1200 days per month; 3 binomial standard deviations in percent.
    const double sd = 100.0 * std::sqrt(0.25 * 0.75 / 1200.0);
    for (int k = 0; k < 4; ++k) {
        for (int m = 0; m < 12; ++m) {
            CHECK(std::abs(t.percent[k][m] - 25.0) <= 3.0 * sd + 0.5);
        }
    }
}

TEST_CASE("seasonal meta-clusters") {
    MonthlyFrequencyTable t;
    t.n_clusters = 4;
    t.counts.assign(4, {});
    t.percent.assign(4, {});
    // Cluster 0 peaks in January; cluster 1 uniform (12-way tie -> January);
    // cluster 2 peaks in July; cluster 3 never occurs.
    t.counts[0][0] = 50;
    t.percent[0][0] = 60.0;
    t.percent[0][6] = 40.0;
    t.counts[0][6] = 30;
    for (int m = 0; m < 12; ++m) {
        t.counts[1][m] = 10;
        t.percent[1][m] = 8.0;
    }
    t.counts[2][6] = 20;
    t.percent[2][6] = 90.0;
    const auto seasons = seasonal_meta_clusters(t);
    CHECK(seasons[0] == Season::DJF);
    CHECK(seasons[1] == Season::DJF); // tie -> earliest month -> January
    CHECK(seasons[2] == Season::JJA);
    CHECK(seasons[3] == Season::Unused);
}

TEST_CASE("quantile anomalies: the all-days cluster is exactly zero") {
    const DailyFieldSeries s = testutil::random_series(4, 4, 1, 120, 83);
    const RegimeSequence seq = constant_sequence(0, 120, {2000, 1, 1});
    const std::vector<double> grid = {0.05, 0.25, 0.5, 0.75, 0.95};
    const auto rows = quantile_anomalies(seq, s, grid, 0, 2);
    REQUIRE(rows.size() == 2);
    for (const double d : rows[0].delta) {
        CHECK(d == 0.0); // exact: identical pooled sample
    }
    CHECK(rows[1].missing); // cluster 1 never occurs
}

TEST_CASE("a uniformly warmer cluster has positive anomalies at every quantile") {
    DailyFieldSeries s = testutil::random_series(4, 4, 1, 200, 89);
    RegimeSequence seq;
    Rng rng(91);
    for (std::size_t i = 0; i < s.fields.size(); ++i) {
        const int label = rng.uniform() < 0.5 ? 1 : 0;
        if (label == 1) {
            for (double& v : s.fields[i].values) {
                v += 2.0;
            }
        }
        seq.entries.emplace_back(s.fields[i].date, label);
    }
    const std::vector<double> grid = {0.05, 0.25, 0.5, 0.75, 0.95};
    const auto rows = quantile_anomalies(seq, s, grid, 0, 2);
    for (const double d : rows[1].delta) {
        CHECK(d > 0.0);
    }
}

TEST_CASE("median anomaly matches an independent full-sort oracle") {
    DailyFieldSeries s = testutil::random_series(5, 5, 2, 150, 97);
    RegimeSequence seq;
    Rng rng(101);
    for (std::size_t i = 0; i < s.fields.size(); ++i) {
        seq.entries.emplace_back(s.fields[i].date, static_cast<int>(rng.uniform_int(3)));
    }
    const std::vector<double> grid = {0.5};
    const int channel = 1;
    const auto rows = quantile_anomalies(seq, s, grid, channel, 3);

    // Oracle: collect and fully sort, then interpolate the median directly.
    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    const std::size_t cells = s.cells_per_channel();
    std::vector<double> all;
    std::vector<std::vector<double>> per(3);
    for (std::size_t i = 0; i < s.fields.size(); ++i) {
        for (std::size_t cell = 0; cell < cells; ++cell) {
            const double v = s.fields[i].values[static_cast<std::size_t>(channel) * cells + cell];
            all.push_back(v);
            per[seq.entries[i].second].push_back(v);
        }
    }
    const double med_all = median_of(all);
    for (int k = 0; k < 3; ++k) {
        const double expected = median_of(per[k]) - med_all;
        CHECK(rows[k].delta[0] == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("quantile function is monotone in q") {
    std::vector<double> values;
    Rng rng(103);
    for (int i = 0; i < 500; ++i) {
        values.push_back(rng.uniform(-10.0, 10.0));
    }
    std::sort(values.begin(), values.end());
    double prev = -1e300;
    for (double q = 0.01; q < 1.0; q += 0.01) {
        const double v = sorted_quantile(values, q);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("regime CSV round-trip") {
    testutil::TempDir tmp("regimes_csv");
    RegimeSequence seq = constant_sequence(2, 10, {2011, 12, 28});
    const auto path = tmp.path() / "regimes.csv";
    write_regimes(seq, path);
    const RegimeSequence r = load_regimes(path);
    CHECK(r.entries == seq.entries);
}

} // TEST_SUITE
