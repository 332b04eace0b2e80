#include "climreg/teleconnection.hpp"
#include "climreg/calendar.hpp"
#include "climreg/errors.hpp"
#include "climreg/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace climreg {

std::string enso_state_name(EnsoState s) {
    switch (s) {
    case EnsoState::ElNino: return "elnino";
    case EnsoState::Neutral: return "neutral";
    case EnsoState::LaNina: return "lanina";
    }
    return "neutral";
}

EnsoStateSeries classify_enso(const OniSeries& oni, double threshold, int persistence) {
    if (!(threshold > 0.0)) {
        throw ConfigError("ENSO threshold must be positive");
    }
    if (persistence < 1) {
        throw ConfigError("ENSO persistence must be >= 1");
    }
    oni.validate();
    EnsoStateSeries out;
    if (oni.entries.empty()) {
        return out;
    }
    out.first_month = month_index(oni.entries.front().year, oni.entries.front().month);
    const std::size_t n = oni.entries.size();
    out.states.assign(n, EnsoState::Neutral);

    // Mark maximal runs of warm (oni >= +thr) and cold (oni <= -thr) months
    // whose length reaches the persistence requirement.
    auto mark_runs = [&](auto in_phase, EnsoState state) {
        std::size_t i = 0;
        while (i < n) {
            if (!in_phase(oni.entries[i].oni)) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < n && in_phase(oni.entries[j].oni)) {
                ++j;
            }
            if (j - i >= static_cast<std::size_t>(persistence)) {
                for (std::size_t t = i; t < j; ++t) {
                    out.states[t] = state;
                }
            }
            i = j;
        }
    };
    mark_runs([&](double v) { return v >= threshold; }, EnsoState::ElNino);
    mark_runs([&](double v) { return v <= -threshold; }, EnsoState::LaNina);
    return out;
}

MonthlyRegimeCounts monthly_regime_counts(const RegimeSequence& seq, int n_clusters) {
    if (seq.entries.empty()) {
        throw DataError("cannot count months of an empty regime sequence");
    }
    MonthlyRegimeCounts out;
    out.n_clusters = n_clusters;
    std::map<long long, MonthCount> by_month;
    for (const auto& [date, k] : seq.entries) {
        if (k < 0 || k >= n_clusters) {
            throw DataError("cluster index out of range in regime sequence");
        }
        const long long idx = month_index(date);
        auto it = by_month.find(idx);
        if (it == by_month.end()) {
            MonthCount mc;
            mc.year = date.year;
            mc.month = date.month;
            mc.per_cluster.assign(n_clusters, 0);
            it = by_month.emplace(idx, std::move(mc)).first;
        }
        ++it->second.per_cluster[k];
        ++it->second.total;
    }
    out.months.reserve(by_month.size());
    for (auto& [idx, mc] : by_month) {
        out.months.push_back(std::move(mc));
    }
    return out;
}

ConditionalProbs conditional_probs(const MonthlyRegimeCounts& counts,
                                   const EnsoStateSeries& states, EnsoState condition,
                                   const YearRange& period, std::optional<int> month_filter,
                                   int lag, long n_min) {
    if (period.first > period.last) {
        throw ConfigError("period year range is empty");
    }
    if (month_filter && (*month_filter < 1 || *month_filter > 12)) {
        throw ConfigError("month filter must be in [1, 12]");
    }
    std::vector<long> pooled(counts.n_clusters, 0);
    long total = 0;
    for (const MonthCount& mc : counts.months) {
        if (mc.year < period.first || mc.year > period.last) {
            continue;
        }
        if (month_filter && mc.month != *month_filter) {
            continue;
        }
        const auto state = states.state_at(month_index(mc.year, mc.month) - lag);
        if (!state || *state != condition) {
            continue; // outside ONI coverage or wrong condition
        }
        for (int k = 0; k < counts.n_clusters; ++k) {
            pooled[k] += mc.per_cluster[k];
        }
        total += mc.total;
    }

    ConditionalProbs out;
    out.n_days = total;
    if (total < n_min || total == 0) {
        out.missing = true;
        return out;
    }
    out.p.resize(counts.n_clusters);
    for (int k = 0; k < counts.n_clusters; ++k) {
        out.p[k] = static_cast<double>(pooled[k]) / static_cast<double>(total);
    }
    return out;
}

AnomalySlice probability_anomaly(const ConditionalProbs& enso,
                                 const ConditionalProbs& neutral) {
    AnomalySlice slice;
    slice.n_enso = enso.n_days;
    slice.n_neutral = neutral.n_days;
    slice.n_clusters = static_cast<int>(std::max(enso.p.size(), neutral.p.size()));
    if (enso.missing || neutral.missing) {
        slice.missing = true;
        return slice;
    }
    if (enso.p.size() != neutral.p.size()) {
        throw ConfigError("conditional distributions have different cluster counts");
    }
    slice.p_enso = enso.p;
    slice.p_neutral = neutral.p;
    slice.delta.resize(enso.p.size());
    for (std::size_t k = 0; k < enso.p.size(); ++k) {
        slice.delta[k] = enso.p[k] - neutral.p[k];
    }
    return slice;
}

namespace {
AnomalySlice one_slice(const MonthlyRegimeCounts& counts, const EnsoStateSeries& states,
                       const YearRange& period, std::optional<int> month_filter, int lag,
                       long n_min) {
    const ConditionalProbs pe =
        conditional_probs(counts, states, EnsoState::ElNino, period, month_filter, lag, n_min);
    const ConditionalProbs pn =
        conditional_probs(counts, states, EnsoState::Neutral, period, month_filter, lag, n_min);
    AnomalySlice slice = probability_anomaly(pe, pn);
    slice.period = period.label();
    slice.month = month_filter.value_or(0);
    slice.lag = lag;
    slice.n_clusters = counts.n_clusters;
    return slice;
}
} // namespace

std::vector<AnomalySlice> lagged_anomalies(const MonthlyRegimeCounts& counts,
                                           const EnsoStateSeries& states, const LagRange& lags,
                                           const YearRange& period, long n_min) {
    if (lags.tau_min > lags.tau_max) {
        throw ConfigError("lag range is empty");
    }
    std::vector<AnomalySlice> out;
    out.reserve(lags.tau_max - lags.tau_min + 1);
    for (int tau = lags.tau_min; tau <= lags.tau_max; ++tau) {
        out.push_back(one_slice(counts, states, period, std::nullopt, tau, n_min));
    }
    return out;
}

std::vector<AnomalySlice> month_conditioned_anomalies(const MonthlyRegimeCounts& counts,
                                                      const EnsoStateSeries& states, int m,
                                                      const LagRange& lags,
                                                      const YearRange& period, long n_min) {
    if (m < 1 || m > 12) {
        throw ConfigError("month must be in [1, 12]");
    }
    if (lags.tau_min > lags.tau_max) {
        throw ConfigError("lag range is empty");
    }
    std::vector<AnomalySlice> out;
    out.reserve(lags.tau_max - lags.tau_min + 1);
    for (int tau = lags.tau_min; tau <= lags.tau_max; ++tau) {
        out.push_back(one_slice(counts, states, period, m, tau, n_min));
    }
    return out;
}

std::vector<AnomalySlice> compare_periods(const MonthlyRegimeCounts& counts,
                                          const EnsoStateSeries& states,
                                          const std::vector<YearRange>& periods, long n_min) {
    std::vector<AnomalySlice> out;
    out.reserve(periods.size());
    for (const YearRange& period : periods) {
        out.push_back(one_slice(counts, states, period, std::nullopt, 0, n_min));
    }
    return out;
}

FrequencyTimeseries frequency_timeseries(const MonthlyRegimeCounts& counts, int cluster,
                                         int window) {
    if (cluster < 0 || cluster >= counts.n_clusters) {
        throw ConfigError("cluster index out of range");
    }
    if (window < 1 || window % 2 == 0) {
        throw ConfigError("running-mean window must be odd and >= 1");
    }
    FrequencyTimeseries out;
    out.cluster = cluster;
    const std::size_t n = counts.months.size();
    out.year.resize(n);
    out.month.resize(n);
    out.fraction.resize(n);
    out.running_mean.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const MonthCount& mc = counts.months[i];
        out.year[i] = mc.year;
        out.month[i] = mc.month;
        out.fraction[i] = mc.total > 0
                              ? static_cast<double>(mc.per_cluster[cluster]) / mc.total
                              : 0.0;
    }
    const int half = window / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= static_cast<std::size_t>(half) ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + static_cast<std::size_t>(half));
        double sum = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) {
            sum += out.fraction[j];
        }
        out.running_mean[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lag-profile grouping
// ---------------------------------------------------------------------------

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace

std::vector<std::string> group_by_lag_profile(const std::vector<AnomalySlice>& lag_table,
                                              int n_clusters, int n_groups) {
    // Lag profile per cluster from the complete slices.
    std::vector<std::vector<double>> profile(n_clusters);
    bool any_missing_slice = false;
    for (const AnomalySlice& slice : lag_table) {
        if (slice.missing) {
            any_missing_slice = true;
            continue;
        }
        if (static_cast<int>(slice.delta.size()) != n_clusters) {
            throw ConfigError("lag table cluster count mismatch");
        }
        for (int k = 0; k < n_clusters; ++k) {
            profile[k].push_back(slice.delta[k]);
        }
    }

    // Constant profiles have no correlation structure; missing slices make
    // every profile incomplete. Both go to the distinguished flat group.
    std::vector<int> active;
    std::vector<std::string> labels(n_clusters, "flat");
    for (int k = 0; k < n_clusters; ++k) {
        if (any_missing_slice || profile[k].size() < 2) {
            continue;
        }
        const double first = profile[k].front();
        bool constant = true;
        for (const double v : profile[k]) {
            if (v != first) {
                constant = false;
                break;
            }
        }
        if (!constant) {
            active.push_back(k);
        }
    }

    if (n_groups < 1 || n_groups > static_cast<int>(active.size())) {
        throw ConfigError("n_groups exceeds the number of distinct lag profiles");
    }

    // Average-linkage agglomeration under correlation distance; merge ties
    // resolved by lowest member cluster indices.
    const std::size_t na = active.size();
    std::vector<std::vector<double>> dist(na, std::vector<double>(na, 0.0));
    for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = i + 1; j < na; ++j) {
            const double d = 1.0 - pearson(profile[active[i]], profile[active[j]]);
            dist[i][j] = dist[j][i] = d;
        }
    }
    std::vector<std::vector<int>> groups; // member positions into `active`
    groups.reserve(na);
    for (std::size_t i = 0; i < na; ++i) {
        groups.push_back({static_cast<int>(i)});
    }
    while (static_cast<int>(groups.size()) > n_groups) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            for (std::size_t j = i + 1; j < groups.size(); ++j) {
                double sum = 0.0;
                for (const int a : groups[i]) {
                    for (const int b : groups[j]) {
                        sum += dist[a][b];
                    }
                }
                const double d = sum / static_cast<double>(groups[i].size() * groups[j].size());
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        groups[bi].insert(groups[bi].end(), groups[bj].begin(), groups[bj].end());
        std::sort(groups[bi].begin(), groups[bi].end());
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    // Label groups by smallest member cluster index.
    std::sort(groups.begin(), groups.end(),
              [&](const std::vector<int>& a, const std::vector<int>& b) {
                  return active[a.front()] < active[b.front()];
              });
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (const int pos : groups[g]) {
            labels[active[pos]] = "g" + std::to_string(g);
        }
    }
    return labels;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_enso_states(const OniSeries& oni, const EnsoStateSeries& states,
                       const std::filesystem::path& path) {
    if (oni.entries.size() != states.states.size()) {
        throw ConfigError("ONI and state series sizes differ");
    }
    std::ostringstream out;
    out << "year,month,oni,state\n";
    for (std::size_t i = 0; i < oni.entries.size(); ++i) {
        const OniEntry& e = oni.entries[i];
        out << e.year << ',' << e.month << ',' << format_double(e.oni) << ','
            << enso_state_name(states.states[i]) << '\n';
    }
    write_text_file(path, out.str());
}

void write_anomaly_slices(const std::vector<AnomalySlice>& slices,
                          const std::filesystem::path& path) {
    std::ostringstream out;
    out << "period,month,lag,cluster,p_enso,p_neutral,delta_p,n_enso,n_neutral\n";
    for (const AnomalySlice& s : slices) {
        const std::size_t rows =
            s.n_clusters > 0 ? static_cast<std::size_t>(s.n_clusters) : s.delta.size();
        for (std::size_t k = 0; k < rows; ++k) {
            out << s.period << ',' << (s.month == 0 ? std::string("all") : std::to_string(s.month))
                << ',' << s.lag << ',' << k << ',';
            if (!s.missing) {
                out << format_double(s.p_enso[k]) << ',' << format_double(s.p_neutral[k]) << ','
                    << format_double(s.delta[k]);
            } else {
                out << ",,";
            }
            out << ',' << s.n_enso << ',' << s.n_neutral << '\n';
        }
    }
    write_text_file(path, out.str());
}

std::vector<AnomalySlice> load_anomaly_slices(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty() ||
        lines[0] != "period,month,lag,cluster,p_enso,p_neutral,delta_p,n_enso,n_neutral") {
        throw DataError("malformed anomaly table header");
    }
    int n_clusters = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto f = split_csv(lines[i]);
        if (f.size() != 9) {
            throw DataError("malformed anomaly row " + std::to_string(i + 1));
        }
        n_clusters = std::max(n_clusters, static_cast<int>(parse_long(f[3])) + 1);
    }
    std::map<std::string, AnomalySlice> slices;
    std::vector<std::string> order;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto f = split_csv(lines[i]);
        if (f.size() != 9) {
            throw DataError("malformed anomaly row " + std::to_string(i + 1));
        }
        const std::string key = f[0] + "|" + f[1] + "|" + f[2];
        auto it = slices.find(key);
        if (it == slices.end()) {
            AnomalySlice s;
            s.period = f[0];
            s.month = f[1] == "all" ? 0 : static_cast<int>(parse_long(f[1]));
            s.lag = static_cast<int>(parse_long(f[2]));
            s.n_clusters = n_clusters;
            s.missing = f[4].empty();
            if (!s.missing) {
                s.p_enso.assign(n_clusters, 0.0);
                s.p_neutral.assign(n_clusters, 0.0);
                s.delta.assign(n_clusters, 0.0);
            }
            s.n_enso = parse_long(f[7]);
            s.n_neutral = parse_long(f[8]);
            it = slices.emplace(key, std::move(s)).first;
            order.push_back(key);
        }
        AnomalySlice& s = it->second;
        if (!s.missing && !f[4].empty()) {
            const int k = static_cast<int>(parse_long(f[3]));
            if (k < 0 || k >= n_clusters) {
                throw DataError("cluster index out of range in anomaly table");
            }
            s.p_enso[k] = parse_double(f[4]);
            s.p_neutral[k] = parse_double(f[5]);
            s.delta[k] = parse_double(f[6]);
        }
    }
    std::vector<AnomalySlice> out;
    out.reserve(order.size());
    for (const std::string& key : order) {
        out.push_back(std::move(slices.at(key)));
    }
    return out;
}

void write_frequency_timeseries(const std::vector<FrequencyTimeseries>& series,
                                const std::filesystem::path& path) {
    std::ostringstream out;
    out << "cluster,year,month,fraction,running_mean\n";
    for (const FrequencyTimeseries& ts : series) {
        for (std::size_t i = 0; i < ts.fraction.size(); ++i) {
            out << ts.cluster << ',' << ts.year[i] << ',' << ts.month[i] << ','
                << format_double(ts.fraction[i]) << ',' << format_double(ts.running_mean[i])
                << '\n';
        }
    }
    write_text_file(path, out.str());
}

void write_groups(const std::vector<std::string>& groups, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "cluster,group\n";
    for (std::size_t k = 0; k < groups.size(); ++k) {
        out << k << ',' << groups[k] << '\n';
    }
    write_text_file(path, out.str());
}

} // namespace climreg
