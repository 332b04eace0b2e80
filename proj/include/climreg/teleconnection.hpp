#pragma once

#include "climreg/oni.hpp"
#include "climreg/regimes.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace climreg {

enum class EnsoState { ElNino, Neutral, LaNina };
std::string enso_state_name(EnsoState s);

/// Monthly ENSO states over the same index set as the source ONI series.
struct EnsoStateSeries {
    long long first_month = 0; // month_index of entries[0]
    std::vector<EnsoState> states;

    std::optional<EnsoState> state_at(long long month_idx) const {
        const long long off = month_idx - first_month;
        if (off < 0 || off >= static_cast<long long>(states.size())) {
            return std::nullopt;
        }
        return states[static_cast<std::size_t>(off)];
    }
};

/// A month is El Nino (La Nina) iff it belongs to a run of at least
/// `persistence` consecutive months with oni >= +threshold (<= -threshold);
/// otherwise Neutral. persistence = 1 is plain thresholding.
EnsoStateSeries classify_enso(const OniSeries& oni, double threshold = 0.5,
                              int persistence = 5);

struct LagRange {
    int tau_min = -12;
    int tau_max = 12;
};

struct YearRange {
    int first = 0;
    int last = 0;
    std::string label() const { return std::to_string(first) + "-" + std::to_string(last); }
};

/// Daily regime counts pooled by calendar month.
struct MonthCount {
    int year = 0;
    int month = 0;
    std::vector<long> per_cluster;
    long total = 0;
};

struct MonthlyRegimeCounts {
    int n_clusters = 0;
    std::vector<MonthCount> months; // date-ordered
};

MonthlyRegimeCounts monthly_regime_counts(const RegimeSequence& seq, int n_clusters);

/// P(k | condition) pooled over daily counts of target months inside
/// `period` (and of calendar month `month_filter` when set) whose ENSO
/// state at month t - lag matches `condition`. Months whose lagged source
/// falls outside the ONI coverage are excluded. Marked missing when fewer
/// than n_min days are pooled.
struct ConditionalProbs {
    std::vector<double> p;
    long n_days = 0;
    bool missing = false;
};

ConditionalProbs conditional_probs(const MonthlyRegimeCounts& counts,
                                   const EnsoStateSeries& states, EnsoState condition,
                                   const YearRange& period, std::optional<int> month_filter,
                                   int lag, long n_min);

/// One ElNino-vs-Neutral contrast: entries are missing when either
/// conditional is missing.
struct AnomalySlice {
    std::string period;
    int month = 0; // 0 = unconditioned
    int lag = 0;
    int n_clusters = 0;
    bool missing = false;
    std::vector<double> p_enso;
    std::vector<double> p_neutral;
    std::vector<double> delta; // p_enso - p_neutral
    long n_enso = 0;
    long n_neutral = 0;
};

/// Elementwise difference of the two conditionals.
AnomalySlice probability_anomaly(const ConditionalProbs& enso, const ConditionalProbs& neutral);

/// Delta P_k(tau) for every lag in the range: regime occurrence at month t
/// conditioned on the ENSO state at month t - tau, so positive lags are
/// delayed responses after ENSO and negative lags precursor behavior.
std::vector<AnomalySlice> lagged_anomalies(const MonthlyRegimeCounts& counts,
                                           const EnsoStateSeries& states, const LagRange& lags,
                                           const YearRange& period, long n_min);

/// Same restricted to target months with calendar month m (1..12).
std::vector<AnomalySlice> month_conditioned_anomalies(const MonthlyRegimeCounts& counts,
                                                      const EnsoStateSeries& states, int m,
                                                      const LagRange& lags,
                                                      const YearRange& period, long n_min);

/// Lag-0 Delta P_k computed independently per period.
std::vector<AnomalySlice> compare_periods(const MonthlyRegimeCounts& counts,
                                          const EnsoStateSeries& states,
                                          const std::vector<YearRange>& periods, long n_min);

/// Monthly occurrence fraction of one cluster plus a centered running mean
/// (window odd; shrinks at the boundaries).
struct FrequencyTimeseries {
    int cluster = 0;
    std::vector<int> year;
    std::vector<int> month;
    std::vector<double> fraction;
    std::vector<double> running_mean;
};

FrequencyTimeseries frequency_timeseries(const MonthlyRegimeCounts& counts, int cluster,
                                         int window);

/// Average-linkage hierarchical grouping of complete lag profiles under
/// correlation distance (1 - corr), cut at n_groups. Constant or incomplete
/// profiles are set aside in one distinguished "flat" group. Group labels
/// g0, g1, ... are ordered by smallest member cluster.
std::vector<std::string> group_by_lag_profile(const std::vector<AnomalySlice>& lag_table,
                                              int n_clusters, int n_groups);

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_enso_states(const OniSeries& oni, const EnsoStateSeries& states,
                       const std::filesystem::path& path);

/// Header `period,month,lag,cluster,p_enso,p_neutral,delta_p,n_enso,n_neutral`;
/// month is "all" for unconditioned slices, probability fields empty when
/// missing.
void write_anomaly_slices(const std::vector<AnomalySlice>& slices,
                          const std::filesystem::path& path);
/// Cluster count is inferred from the cluster column.
std::vector<AnomalySlice> load_anomaly_slices(const std::filesystem::path& path);

void write_frequency_timeseries(const std::vector<FrequencyTimeseries>& series,
                                const std::filesystem::path& path);

void write_groups(const std::vector<std::string>& groups, const std::filesystem::path& path);

} // namespace climreg
