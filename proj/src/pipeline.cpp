#include "climreg/pipeline.hpp"
#include "climreg/checkpoint.hpp"
#include "climreg/errors.hpp"
#include "climreg/io_util.hpp"
#include "climreg/threading.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace climreg {

using nlohmann::json;

namespace {

void write_manifest(const PipelineConfig& cfg, const std::filesystem::path& dir) {
    write_text_file(dir / artifact::manifest, config_to_json(cfg).dump(2) + "\n");
}

std::filesystem::path ensure_out_dir(const PipelineConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    return cfg.out_dir;
}

/// Periods default to the full span of the labeled record.
std::vector<YearRange> resolve_periods(const PipelineConfig& cfg, const RegimeSequence& seq) {
    if (!cfg.analysis.periods.empty()) {
        return cfg.analysis.periods;
    }
    return {{seq.entries.front().first.year, seq.entries.back().first.year}};
}

/// Day-level counting oracle used by --oracle: recomputes one slice
/// directly from the daily sequence, bypassing the monthly pooling.
AnomalySlice brute_force_slice(const RegimeSequence& seq, const EnsoStateSeries& states,
                               int n_clusters, const YearRange& period, int month_filter,
                               int lag, long n_min) {
    std::vector<long> ce(n_clusters, 0), cn(n_clusters, 0);
    long te = 0, tn = 0;
    for (const auto& [date, k] : seq.entries) {
        if (date.year < period.first || date.year > period.last) {
            continue;
        }
        if (month_filter != 0 && date.month != month_filter) {
            continue;
        }
        const auto st = states.state_at(month_index(date) - lag);
        if (!st) {
            continue;
        }
        if (*st == EnsoState::ElNino) {
            ++ce[k];
            ++te;
        } else if (*st == EnsoState::Neutral) {
            ++cn[k];
            ++tn;
        }
    }
    AnomalySlice s;
    s.period = period.label();
    s.month = month_filter;
    s.lag = lag;
    s.n_clusters = n_clusters;
    s.n_enso = te;
    s.n_neutral = tn;
    if (te < n_min || tn < n_min || te == 0 || tn == 0) {
        s.missing = true;
        return s;
    }
    s.p_enso.resize(n_clusters);
    s.p_neutral.resize(n_clusters);
    s.delta.resize(n_clusters);
    for (int k = 0; k < n_clusters; ++k) {
        s.p_enso[k] = static_cast<double>(ce[k]) / static_cast<double>(te);
        s.p_neutral[k] = static_cast<double>(cn[k]) / static_cast<double>(tn);
        s.delta[k] = s.p_enso[k] - s.p_neutral[k];
    }
    return s;
}

void check_slice_against_oracle(const AnomalySlice& got, const AnomalySlice& want) {
    const std::string where = "slice period=" + got.period + " month=" +
                              std::to_string(got.month) + " lag=" + std::to_string(got.lag);
    if (got.missing != want.missing || got.n_enso != want.n_enso ||
        got.n_neutral != want.n_neutral) {
        throw NumericError("oracle disagreement (structure) at " + where);
    }
    if (got.missing) {
        return;
    }
    for (std::size_t k = 0; k < got.delta.size(); ++k) {
        if (got.p_enso[k] != want.p_enso[k] || got.p_neutral[k] != want.p_neutral[k] ||
            got.delta[k] != want.delta[k]) {
            throw NumericError("oracle disagreement (values) at " + where);
        }
    }
}

void check_zero_sum(const std::vector<AnomalySlice>& slices) {
    for (const AnomalySlice& s : slices) {
        if (s.missing) {
            continue;
        }
        double sum = 0.0;
        for (const double d : s.delta) {
            sum += d;
        }
        if (std::abs(sum) > 1e-9) {
            throw NumericError("anomaly slice violates zero-sum invariant");
        }
    }
}

} // namespace

DailyFieldSeries load_input_series(const PipelineConfig& cfg) {
    DailyFieldSeries series;
    if (cfg.data.synthetic) {
        series = synthesize(*cfg.data.synthetic).series;
    } else {
        series = load_series(cfg.data.path, cfg.data.format);
    }
    if (cfg.bbox) {
        series = spatial_subset(series, *cfg.bbox);
    }
    return series;
}

void cmd_synth(const PipelineConfig& cfg) {
    if (!cfg.data.synthetic) {
        throw ConfigError("synth requires a synthetic data source in the config");
    }
    const auto dir = ensure_out_dir(cfg);
    const SyntheticData data = synthesize(*cfg.data.synthetic);
    write_series(data.series, dir / artifact::dataset, SeriesFormat::packed_binary);
    write_labels(data.true_labels, dir / artifact::true_labels);
    write_oni(data.oni, dir / artifact::oni);
    write_manifest(cfg, dir);
}

void cmd_train(const PipelineConfig& cfg) {
    const auto dir = ensure_out_dir(cfg);
    const DailyFieldSeries series = load_input_series(cfg);
    auto [train_split, test_split] = split_by_years(series, cfg.test_years);
    if (train_split.fields.empty()) {
        throw DataError("training split is empty");
    }
    const ChannelStats stats = compute_channel_stats(train_split);
    const DailyFieldSeries normalized = normalize(train_split, stats);

    const EncoderDims dims = cfg.encoder_dims(series.n_channels());
    const TrainResult result =
        train(normalized, cfg.views, dims, cfg.train, worker_count());

    Checkpoint ckpt;
    ckpt.anchor = result.anchor;
    ckpt.target = result.target;
    ckpt.bank = result.bank;
    ckpt.stats = stats;
    ckpt.view = cfg.views;
    save_checkpoint(ckpt, dir / artifact::checkpoint);
    write_train_report(result.report, dir / artifact::train_report);
    write_manifest(cfg, dir);
}

void cmd_discretize(const PipelineConfig& cfg, const std::filesystem::path& checkpoint_path) {
    const auto dir = ensure_out_dir(cfg);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const DailyFieldSeries series = load_input_series(cfg);
    if (series.n_channels() != ckpt.anchor.dims.n_channels) {
        throw DataError("checkpoint channel count does not match dataset");
    }
    const DailyFieldSeries normalized = normalize(series, ckpt.stats);
    const RegimeSequence seq =
        discretize(ckpt.target, ckpt.bank, normalized, ckpt.view, worker_count());
    write_regimes(seq, dir / artifact::regimes);
    write_manifest(cfg, dir);
}

void cmd_analyze(const PipelineConfig& cfg, const std::filesystem::path& regimes_path,
                 const std::filesystem::path& oni_path, bool check_oracle) {
    const auto dir = ensure_out_dir(cfg);
    const RegimeSequence seq = load_regimes(regimes_path);
    if (seq.entries.empty()) {
        throw DataError("regime sequence is empty");
    }
    const OniSeries oni = load_oni(oni_path);
    const EnsoStateSeries states =
        classify_enso(oni, cfg.analysis.enso_threshold, cfg.analysis.enso_persistence);

    const int K = cfg.train.k_prototypes;
    const MonthlyRegimeCounts counts = monthly_regime_counts(seq, K);
    const std::vector<YearRange> periods = resolve_periods(cfg, seq);

    // 1. ENSO states
    write_enso_states(oni, states, dir / artifact::enso_states);

    // 2-3. Monthly frequencies and seasonal meta-clusters
    const MonthlyFrequencyTable freq = monthly_frequency(seq, K);
    write_monthly_frequency(freq, dir / artifact::monthly_frequency);
    write_meta_clusters(freq, seasonal_meta_clusters(freq), dir / artifact::meta_clusters);

    // 4. Quantile anomalies against the raw (unnormalized) series
    const DailyFieldSeries raw = load_input_series(cfg);
    const QuantileAnomalyTable qtable =
        quantile_anomalies_all(seq, raw, cfg.analysis.quantile_grid, K);
    write_quantile_anomalies(qtable, dir / artifact::quantile_anomalies);

    // 5. Lag-0 contrast per period
    const std::vector<AnomalySlice> per_period =
        compare_periods(counts, states, periods, cfg.analysis.n_min);
    check_zero_sum(per_period);
    write_anomaly_slices(per_period, dir / artifact::delta_p);

    // 6. Lagged anomalies per period
    std::vector<AnomalySlice> lagged;
    for (const YearRange& period : periods) {
        auto slices = lagged_anomalies(counts, states, cfg.analysis.lags, period,
                                       cfg.analysis.n_min);
        lagged.insert(lagged.end(), slices.begin(), slices.end());
    }
    check_zero_sum(lagged);
    write_anomaly_slices(lagged, dir / artifact::lagged_anomalies);

    // 7. Month-conditioned anomalies per period
    std::vector<AnomalySlice> monthly;
    for (const YearRange& period : periods) {
        for (int m = 1; m <= 12; ++m) {
            auto slices = month_conditioned_anomalies(counts, states, m, cfg.analysis.lags,
                                                      period, cfg.analysis.n_min);
            monthly.insert(monthly.end(), slices.begin(), slices.end());
        }
    }
    check_zero_sum(monthly);
    write_anomaly_slices(monthly, dir / artifact::month_conditioned);

    // 8. Frequency time series with running means, every cluster
    std::vector<FrequencyTimeseries> series_rows;
    series_rows.reserve(K);
    for (int k = 0; k < K; ++k) {
        series_rows.push_back(frequency_timeseries(counts, k, cfg.analysis.window));
    }
    write_frequency_timeseries(series_rows, dir / artifact::freq_timeseries);

    // 9. Lag-profile groups over the first (reference) period. If fewer
    // distinct profiles exist than requested groups, fall back to as many
    // groups as the data supports.
    {
        const auto reference = lagged_anomalies(counts, states, cfg.analysis.lags,
                                                periods.front(), cfg.analysis.n_min);
        int complete = 0;
        bool any_missing = false;
        for (const AnomalySlice& s : reference) {
            any_missing = any_missing || s.missing;
        }
        if (!any_missing) {
            std::set<int> varying;
            for (int k = 0; k < K; ++k) {
                for (std::size_t t = 1; t < reference.size(); ++t) {
                    if (reference[t].delta[k] != reference[0].delta[k]) {
                        varying.insert(k);
                        break;
                    }
                }
            }
            complete = static_cast<int>(varying.size());
        }
        const int n_groups = std::min(cfg.analysis.n_groups, complete);
        std::vector<std::string> groups;
        if (n_groups >= 1) {
            groups = group_by_lag_profile(reference, K, n_groups);
        } else {
            groups.assign(K, "flat");
        }
        write_groups(groups, dir / artifact::groups);
    }

    if (check_oracle) {
        for (const AnomalySlice& s : per_period) {
            const YearRange period = {std::stoi(s.period.substr(0, s.period.find('-'))),
                                      std::stoi(s.period.substr(s.period.find('-') + 1))};
            check_slice_against_oracle(
                s, brute_force_slice(seq, states, K, period, 0, 0, cfg.analysis.n_min));
        }
        auto check_group = [&](const std::vector<AnomalySlice>& slices) {
            for (const AnomalySlice& s : slices) {
                const YearRange period = {std::stoi(s.period.substr(0, s.period.find('-'))),
                                          std::stoi(s.period.substr(s.period.find('-') + 1))};
                check_slice_against_oracle(
                    s, brute_force_slice(seq, states, K, period, s.month, s.lag,
                                         cfg.analysis.n_min));
            }
        };
        check_group(lagged);
        check_group(monthly);
    }

    write_manifest(cfg, dir);
}

void cmd_report(const PipelineConfig& cfg, const std::filesystem::path& analysis_dir) {
    const std::filesystem::path delta_path = analysis_dir / artifact::delta_p;
    const std::filesystem::path lag_path = analysis_dir / artifact::lagged_anomalies;
    const std::filesystem::path freq_path = analysis_dir / artifact::monthly_frequency;
    const std::filesystem::path ts_path = analysis_dir / artifact::freq_timeseries;
    for (const auto& p : {delta_path, lag_path, freq_path, ts_path}) {
        if (!std::filesystem::exists(p)) {
            throw DataError("analysis directory is missing " + p.string());
        }
    }
    const std::vector<AnomalySlice> per_period = load_anomaly_slices(delta_path);
    const std::vector<AnomalySlice> lagged = load_anomaly_slices(lag_path);

    // Peak month per cluster from the monthly frequency table.
    const auto freq_lines = read_lines(freq_path);
    std::vector<double> best_pct;
    std::vector<int> peak_month;
    for (std::size_t i = 1; i < freq_lines.size(); ++i) {
        if (freq_lines[i].empty()) {
            continue;
        }
        const auto f = split_csv(freq_lines[i]);
        const int k = static_cast<int>(parse_long(f[0]));
        const int m = static_cast<int>(parse_long(f[1]));
        const double pct = parse_double(f[3]);
        if (k >= static_cast<int>(best_pct.size())) {
            best_pct.resize(k + 1, -1.0);
            peak_month.resize(k + 1, 1);
        }
        if (pct > best_pct[k]) {
            best_pct[k] = pct;
            peak_month[k] = m;
        }
    }

    json summary;
    summary["periods"] = json::array();
    std::set<int> bundle_clusters;
    for (const AnomalySlice& s : per_period) {
        json jp;
        jp["period"] = s.period;
        jp["top_clusters"] = json::array();
        if (!s.missing) {
            std::vector<int> idx(s.delta.size());
            for (std::size_t k = 0; k < idx.size(); ++k) {
                idx[k] = static_cast<int>(k);
            }
            std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
                return std::abs(s.delta[a]) > std::abs(s.delta[b]);
            });
            const int top_n = std::min<int>(cfg.analysis.report_top_n,
                                            static_cast<int>(idx.size()));
            for (int t = 0; t < top_n; ++t) {
                const int k = idx[t];
                bundle_clusters.insert(k);
                // Peak lag: largest |delta P(tau)| for this period/cluster.
                int best_lag = 0;
                double best_abs = -1.0;
                for (const AnomalySlice& ls : lagged) {
                    if (ls.period != s.period || ls.missing) {
                        continue;
                    }
                    if (std::abs(ls.delta[k]) > best_abs) {
                        best_abs = std::abs(ls.delta[k]);
                        best_lag = ls.lag;
                    }
                }
                jp["top_clusters"].push_back({{"cluster", k},
                                              {"delta_p", s.delta[k]},
                                              {"peak_lag", best_lag},
                                              {"peak_month", peak_month[k]}});
            }
        }
        summary["periods"].push_back(jp);
    }

    const auto dir = ensure_out_dir(cfg);
    write_text_file(dir / artifact::summary, summary.dump(2) + "\n");

    // Plot-ready bundle: one lag profile and one time series per top cluster.
    const auto ts_lines = read_lines(ts_path);
    for (const int k : bundle_clusters) {
        std::string lag_csv = "period,lag,delta_p\n";
        for (const AnomalySlice& ls : lagged) {
            if (ls.missing) {
                continue;
            }
            lag_csv += ls.period + "," + std::to_string(ls.lag) + "," +
                       format_double(ls.delta[k]) + "\n";
        }
        write_text_file(dir / ("report_cluster_" + std::to_string(k) + "_lags.csv"), lag_csv);

        std::string ts_csv = "year,month,fraction,running_mean\n";
        const std::string prefix = std::to_string(k) + ",";
        for (std::size_t i = 1; i < ts_lines.size(); ++i) {
            if (ts_lines[i].rfind(prefix, 0) == 0) {
                ts_csv += ts_lines[i].substr(prefix.size()) + "\n";
            }
        }
        write_text_file(dir / ("report_cluster_" + std::to_string(k) + "_timeseries.csv"),
                        ts_csv);
    }
}

} // namespace climreg
