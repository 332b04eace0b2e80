#pragma once

#include "climreg/encoder.hpp"
#include "climreg/grid_data.hpp"
#include "climreg/msn.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace climreg {

/// Dated deterministic categorical sequence produced by inference.
struct RegimeSequence {
    std::vector<std::pair<Date, int>> entries; // strictly increasing dates
};

/// Day counts and per-month percentages of each cluster.
struct MonthlyFrequencyTable {
    int n_clusters = 0;
    std::vector<std::array<long, 12>> counts;   // [cluster][month-1]
    std::vector<std::array<double, 12>> percent; // column-normalized per month
};

enum class Season { DJF, MAM, JJA, SON, Unused };
std::string season_name(Season s);

/// Delta-quantile anomalies of one channel, cluster-conditional minus full
/// dataset, in the channel's physical units.
struct QuantileAnomalyRow {
    int cluster = 0;
    std::string channel;
    bool missing = false;              // cluster never occurs
    std::vector<double> delta;         // one per grid quantile
};

struct QuantileAnomalyTable {
    std::vector<double> quantile_grid; // strictly increasing in (0,1)
    std::vector<QuantileAnomalyRow> rows;
};

/// argmax_k <z, q_k>, ties broken by lowest index.
int assign_regime(const Latent& z, const PrototypeBank& bank);

/// Full-field inference with the stable target encoder: each day is
/// resampled (unmasked) to the encoder input size, encoded and assigned.
/// The series must already be normalized with the training statistics.
RegimeSequence discretize(const EncoderParams& target_params, const PrototypeBank& bank,
                          const DailyFieldSeries& normalized, const ViewConfig& view,
                          int n_workers = 1);

MonthlyFrequencyTable monthly_frequency(const RegimeSequence& seq, int n_clusters);

/// Season of each cluster's peak month (earliest month wins ties);
/// clusters that never occur map to Season::Unused.
std::vector<Season> seasonal_meta_clusters(const MonthlyFrequencyTable& table);

/// Linear-interpolation empirical quantile of sorted values.
double sorted_quantile(const std::vector<double>& sorted_values, double q);

/// Raw-unit quantile anomalies for one channel: values of days in cluster k
/// pooled over space and time, Delta_k(q) = Q_cluster(q) - Q_all(q).
std::vector<QuantileAnomalyRow> quantile_anomalies(const RegimeSequence& seq,
                                                   const DailyFieldSeries& raw,
                                                   const std::vector<double>& quantile_grid,
                                                   int channel, int n_clusters);

/// All channels stacked into one table.
QuantileAnomalyTable quantile_anomalies_all(const RegimeSequence& seq,
                                            const DailyFieldSeries& raw,
                                            const std::vector<double>& quantile_grid,
                                            int n_clusters);

/// CSV with header `date,cluster`.
void write_regimes(const RegimeSequence& seq, const std::filesystem::path& path);
RegimeSequence load_regimes(const std::filesystem::path& path);

void write_monthly_frequency(const MonthlyFrequencyTable& table,
                             const std::filesystem::path& path);
void write_meta_clusters(const MonthlyFrequencyTable& table, const std::vector<Season>& seasons,
                         const std::filesystem::path& path);
void write_quantile_anomalies(const QuantileAnomalyTable& table,
                              const std::filesystem::path& path);

} // namespace climreg
