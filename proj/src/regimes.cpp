#include "climreg/regimes.hpp"
#include "climreg/errors.hpp"
#include "climreg/io_util.hpp"
#include "climreg/threading.hpp"
#include "climreg/views.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace climreg {

std::string season_name(Season s) {
    switch (s) {
    case Season::DJF: return "DJF";
    case Season::MAM: return "MAM";
    case Season::JJA: return "JJA";
    case Season::SON: return "SON";
    case Season::Unused: return "unused";
    }
    return "unused";
}

int assign_regime(const Latent& z, const PrototypeBank& bank) {
    if (static_cast<int>(z.v.size()) != bank.dim) {
        throw ConfigError("latent dimension does not match prototype bank");
    }
    int best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < bank.k; ++k) {
        const double* q = bank.row(k);
        double dot = 0.0;
        for (int d = 0; d < bank.dim; ++d) {
            dot += z.v[d] * q[d];
        }
        if (dot > best_sim) { // strict: ties keep the lowest index
            best_sim = dot;
            best = k;
        }
    }
    return best;
}

RegimeSequence discretize(const EncoderParams& target_params, const PrototypeBank& bank,
                          const DailyFieldSeries& normalized, const ViewConfig& view,
                          int n_workers) {
    RegimeSequence seq;
    const std::size_t n = normalized.fields.size();
    seq.entries.resize(n);
    constexpr std::size_t kBlock = 64;
    const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
    parallel_blocks(n_blocks, n_workers, [&](std::size_t b) {
        const std::size_t lo = b * kBlock;
        const std::size_t hi = std::min(n, lo + kBlock);
        for (std::size_t i = lo; i < hi; ++i) {
            const DailyField& f = normalized.fields[i];
            const View full = full_view(f, normalized.geometry, normalized.n_channels(),
                                        view.out_size, view.patch_size);
            const Latent z = encode(target_params, full);
            seq.entries[i] = {f.date, assign_regime(z, bank)};
        }
    });
    return seq;
}

MonthlyFrequencyTable monthly_frequency(const RegimeSequence& seq, int n_clusters) {
    if (seq.entries.empty()) {
        throw DataError("cannot compute monthly frequencies of an empty sequence");
    }
    MonthlyFrequencyTable table;
    table.n_clusters = n_clusters;
    table.counts.assign(n_clusters, {});
    table.percent.assign(n_clusters, {});
    for (const auto& [date, k] : seq.entries) {
        if (k < 0 || k >= n_clusters) {
            throw DataError("cluster index out of range in regime sequence");
        }
        ++table.counts[k][date.month - 1];
    }
    for (int m = 0; m < 12; ++m) {
        long total = 0;
        for (int k = 0; k < n_clusters; ++k) {
            total += table.counts[k][m];
        }
        for (int k = 0; k < n_clusters; ++k) {
            table.percent[k][m] =
                total > 0 ? 100.0 * static_cast<double>(table.counts[k][m]) / total : 0.0;
        }
    }
    return table;
}

std::vector<Season> seasonal_meta_clusters(const MonthlyFrequencyTable& table) {
    // Meteorological seasons by calendar month of peak occurrence.
    static constexpr Season by_month[12] = {
        Season::DJF, Season::DJF, Season::MAM, Season::MAM, Season::MAM, Season::JJA,
        Season::JJA, Season::JJA, Season::SON, Season::SON, Season::SON, Season::DJF};
    std::vector<Season> out(table.n_clusters, Season::Unused);
    for (int k = 0; k < table.n_clusters; ++k) {
        long total = 0;
        int peak = 0;
        for (int m = 0; m < 12; ++m) {
            total += table.counts[k][m];
            if (table.percent[k][m] > table.percent[k][peak]) {
                peak = m; // strict: earliest month wins ties
            }
        }
        out[k] = total == 0 ? Season::Unused : by_month[peak];
    }
    return out;
}

double sorted_quantile(const std::vector<double>& sorted_values, double q) {
    if (sorted_values.empty()) {
        throw DataError("quantile of empty sample");
    }
    const std::size_t n = sorted_values.size();
    if (n == 1) {
        return sorted_values[0];
    }
    const double h = q * static_cast<double>(n - 1);
    const std::size_t lo = std::min(static_cast<std::size_t>(h), n - 2);
    const double frac = h - static_cast<double>(lo);
    return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

std::vector<QuantileAnomalyRow> quantile_anomalies(const RegimeSequence& seq,
                                                   const DailyFieldSeries& raw,
                                                   const std::vector<double>& quantile_grid,
                                                   int channel, int n_clusters) {
    if (channel < 0 || channel >= raw.n_channels()) {
        throw ConfigError("channel index out of range");
    }
    for (std::size_t i = 0; i + 1 < quantile_grid.size(); ++i) {
        if (!(quantile_grid[i] < quantile_grid[i + 1])) {
            throw ConfigError("quantile grid must be strictly increasing");
        }
    }
    if (!quantile_grid.empty() &&
        (quantile_grid.front() <= 0.0 || quantile_grid.back() >= 1.0)) {
        throw ConfigError("quantile grid must lie inside (0, 1)");
    }

    // Label lookup by date; days of the series without a label are skipped.
    std::vector<int> labels(raw.fields.size(), -1);
    {
        std::size_t j = 0;
        for (std::size_t i = 0; i < raw.fields.size(); ++i) {
            while (j < seq.entries.size() && seq.entries[j].first < raw.fields[i].date) {
                ++j;
            }
            if (j < seq.entries.size() && seq.entries[j].first == raw.fields[i].date) {
                labels[i] = seq.entries[j].second;
            }
        }
    }

    const std::size_t cells = raw.cells_per_channel();
    std::vector<double> all;
    std::vector<std::vector<double>> per_cluster(n_clusters);
    for (std::size_t i = 0; i < raw.fields.size(); ++i) {
        if (labels[i] < 0) {
            continue;
        }
        if (labels[i] >= n_clusters) {
            throw DataError("cluster index out of range in regime sequence");
        }
        const DailyField& f = raw.fields[i];
        for (std::size_t cell = 0; cell < cells; ++cell) {
            if (f.missing[cell]) {
                continue;
            }
            const double v = f.values[static_cast<std::size_t>(channel) * cells + cell];
            all.push_back(v);
            per_cluster[labels[i]].push_back(v);
        }
    }
    if (all.empty()) {
        throw DataError("no labeled values available for quantile anomalies");
    }
    std::sort(all.begin(), all.end());

    std::vector<QuantileAnomalyRow> rows;
    rows.reserve(n_clusters);
    for (int k = 0; k < n_clusters; ++k) {
        QuantileAnomalyRow row;
        row.cluster = k;
        row.channel = raw.channel_names[channel];
        if (per_cluster[k].empty()) {
            row.missing = true;
            row.delta.assign(quantile_grid.size(),
                             std::numeric_limits<double>::quiet_NaN());
        } else {
            std::sort(per_cluster[k].begin(), per_cluster[k].end());
            row.delta.reserve(quantile_grid.size());
            for (const double q : quantile_grid) {
                row.delta.push_back(sorted_quantile(per_cluster[k], q) -
                                    sorted_quantile(all, q));
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

QuantileAnomalyTable quantile_anomalies_all(const RegimeSequence& seq,
                                            const DailyFieldSeries& raw,
                                            const std::vector<double>& quantile_grid,
                                            int n_clusters) {
    QuantileAnomalyTable table;
    table.quantile_grid = quantile_grid;
    for (int c = 0; c < raw.n_channels(); ++c) {
        auto rows = quantile_anomalies(seq, raw, quantile_grid, c, n_clusters);
        for (auto& r : rows) {
            table.rows.push_back(std::move(r));
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_regimes(const RegimeSequence& seq, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "date,cluster\n";
    for (const auto& [date, k] : seq.entries) {
        out << format_date(date) << ',' << k << '\n';
    }
    write_text_file(path, out.str());
}

RegimeSequence load_regimes(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "date,cluster") {
        throw DataError("malformed regime file header");
    }
    RegimeSequence seq;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto fields = split_csv(lines[i]);
        if (fields.size() != 2) {
            throw DataError("malformed regime row " + std::to_string(i + 1));
        }
        seq.entries.emplace_back(parse_date(fields[0]),
                                 static_cast<int>(parse_long(fields[1])));
    }
    for (std::size_t i = 1; i < seq.entries.size(); ++i) {
        if (!(seq.entries[i - 1].first < seq.entries[i].first)) {
            throw DataError("regime dates not strictly increasing");
        }
    }
    return seq;
}

void write_monthly_frequency(const MonthlyFrequencyTable& table,
                             const std::filesystem::path& path) {
    std::ostringstream out;
    out << "cluster,month,count,percent\n";
    for (int k = 0; k < table.n_clusters; ++k) {
        for (int m = 0; m < 12; ++m) {
            out << k << ',' << (m + 1) << ',' << table.counts[k][m] << ','
                << format_double(table.percent[k][m]) << '\n';
        }
    }
    write_text_file(path, out.str());
}

void write_meta_clusters(const MonthlyFrequencyTable& table, const std::vector<Season>& seasons,
                         const std::filesystem::path& path) {
    std::ostringstream out;
    out << "cluster,peak_month,season\n";
    for (int k = 0; k < table.n_clusters; ++k) {
        int peak = 0;
        for (int m = 0; m < 12; ++m) {
            if (table.percent[k][m] > table.percent[k][peak]) {
                peak = m;
            }
        }
        out << k << ',' << (peak + 1) << ',' << season_name(seasons[k]) << '\n';
    }
    write_text_file(path, out.str());
}

void write_quantile_anomalies(const QuantileAnomalyTable& table,
                              const std::filesystem::path& path) {
    std::ostringstream out;
    out << "cluster,channel,quantile,delta_c\n";
    for (const QuantileAnomalyRow& row : table.rows) {
        for (std::size_t qi = 0; qi < table.quantile_grid.size(); ++qi) {
            out << row.cluster << ',' << row.channel << ','
                << format_double(table.quantile_grid[qi]) << ',';
            if (!row.missing) {
                out << format_double(row.delta[qi]);
            }
            out << '\n';
        }
    }
    write_text_file(path, out.str());
}

} // namespace climreg
