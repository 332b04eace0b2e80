#pragma once

#include "climreg/config.hpp"

#include <filesystem>

namespace climreg {

/// Fixed artifact names inside the output directory.
namespace artifact {
inline constexpr const char* dataset = "dataset.bin";
inline constexpr const char* true_labels = "true_labels.csv";
inline constexpr const char* oni = "oni.csv";
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* checkpoint = "checkpoint.bin";
inline constexpr const char* train_report = "train_report.csv";
inline constexpr const char* regimes = "regimes.csv";
inline constexpr const char* enso_states = "enso_states.csv";
inline constexpr const char* monthly_frequency = "monthly_frequency.csv";
inline constexpr const char* meta_clusters = "meta_clusters.csv";
inline constexpr const char* quantile_anomalies = "quantile_anomalies.csv";
inline constexpr const char* delta_p = "delta_p.csv";
inline constexpr const char* lagged_anomalies = "lagged_anomalies.csv";
inline constexpr const char* month_conditioned = "month_conditioned.csv";
inline constexpr const char* freq_timeseries = "freq_timeseries.csv";
inline constexpr const char* groups = "groups.csv";
inline constexpr const char* summary = "summary.json";
} // namespace artifact

/// Loads the configured data source (synthesizing if so configured) and
/// applies the spatial subset when a bbox is given.
DailyFieldSeries load_input_series(const PipelineConfig& cfg);

/// Writes dataset.bin, true_labels.csv, oni.csv and manifest.json.
void cmd_synth(const PipelineConfig& cfg);

/// Trains on the non-test years and writes checkpoint.bin,
/// train_report.csv and manifest.json.
void cmd_train(const PipelineConfig& cfg);

/// Labels every day of the (subset) series with the target encoder.
void cmd_discretize(const PipelineConfig& cfg, const std::filesystem::path& checkpoint_path);

/// Emits the nine analysis CSV artifacts plus manifest.json. With
/// check_oracle set, re-derives every anomaly slice by brute-force
/// day-level counting and requires exact agreement.
void cmd_analyze(const PipelineConfig& cfg, const std::filesystem::path& regimes_path,
                 const std::filesystem::path& oni_path, bool check_oracle = false);

/// Summarizes an analysis directory: top-|delta P| clusters per period with
/// their peak lags and peak months, plus per-cluster plot bundles.
void cmd_report(const PipelineConfig& cfg, const std::filesystem::path& analysis_dir);

} // namespace climreg
