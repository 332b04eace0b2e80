#include "climreg/grid_data.hpp"
#include "climreg/errors.hpp"
#include "climreg/io_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace climreg {

using nlohmann::json;

void GridGeometry::validate() const {
    if (resolution <= 0.0) {
        throw DataError("grid resolution must be positive");
    }
    if (height < 1 || width < 1) {
        throw DataError("grid must have at least one cell per axis");
    }
}

void DailyFieldSeries::validate() const {
    geometry.validate();
    if (channel_names.empty()) {
        throw DataError("series must have at least one channel");
    }
    const std::size_t cells = cells_per_channel();
    const std::size_t expected = cells * channel_names.size();
    const Date* prev = nullptr;
    for (const DailyField& f : fields) {
        if (prev && !(*prev < f.date)) {
            throw DataError("dates not strictly increasing at " + format_date(f.date));
        }
        if (f.values.size() != expected || f.missing.size() != cells) {
            throw DataError("field shape mismatch at " + format_date(f.date));
        }
        prev = &f.date;
    }
}

void SyntheticSpec::validate() const {
    geometry.validate();
    if (channel_names.empty()) {
        throw ConfigError("synthetic spec needs at least one channel");
    }
    if (n_regimes < 1 || n_regimes > 64) {
        throw ConfigError("n_regimes must be in [1, 64]");
    }
    if (first_year > last_year) {
        throw ConfigError("first_year must not exceed last_year");
    }
    if (coupling_strength < 0.0 || coupling_strength > 1.0) {
        throw ConfigError("coupling_strength must be in [0, 1]");
    }
    if (enso_coupled_regime < 0 || enso_coupled_regime >= n_regimes) {
        throw ConfigError("enso_coupled_regime out of range");
    }
    if (coupling_delay_months < 0) {
        throw ConfigError("coupling_delay_months must be >= 0");
    }
    if (seasonal_amplitude < 0.0 || noise_sigma < 0.0) {
        throw ConfigError("amplitudes must be non-negative");
    }
    if (enso_period_months < 1 || enso_phase_months < 0 ||
        enso_phase_months > enso_period_months) {
        throw ConfigError("invalid synthetic ENSO cycle");
    }
}

// ---------------------------------------------------------------------------
// csv_long format
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kCsvLongHeader = "date,lat,lon,channel,value";

/// Collects sorted unique coordinates, merging values closer than eps.
std::vector<double> unique_coords(std::vector<double> values, double eps) {
    std::sort(values.begin(), values.end());
    std::vector<double> out;
    for (double v : values) {
        if (out.empty() || v - out.back() > eps) {
            out.push_back(v);
        }
    }
    return out;
}

/// Uniform spacing of sorted coordinates; throws if the grid has gaps.
double infer_resolution(const std::vector<double>& coords, const char* axis) {
    if (coords.size() < 2) {
        return 0.0;
    }
    const double step = coords[1] - coords[0];
    for (std::size_t i = 1; i + 1 < coords.size(); ++i) {
        const double d = coords[i + 1] - coords[i];
        if (std::abs(d - step) > 1e-6 * std::max(1.0, std::abs(step))) {
            throw DataError(std::string("non-uniform ") + axis + " spacing in csv grid");
        }
    }
    return step;
}

int coord_index(double value, double origin, double resolution) {
    const double pos = (value - origin) / resolution;
    const int idx = static_cast<int>(std::lround(pos));
    if (std::abs(pos - idx) > 1e-3) {
        throw DataError("coordinate off the inferred grid");
    }
    return idx;
}

DailyFieldSeries load_csv_long(const std::filesystem::path& path) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty() || lines[0] != kCsvLongHeader) {
        throw DataError("malformed csv_long header (expected '" +
                        std::string(kCsvLongHeader) + "')");
    }

    struct Row {
        Date date;
        double lat;
        double lon;
        std::string channel;
        bool has_value;
        float value; // binary32 as stored on disk
    };
    std::vector<Row> rows;
    rows.reserve(lines.size() - 1);
    std::vector<double> lats, lons;
    std::vector<std::string> channels;

    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) {
            continue;
        }
        const auto fields = split_csv(lines[ln]);
        if (fields.size() != 5) {
            throw DataError("csv_long row " + std::to_string(ln + 1) +
                            " has " + std::to_string(fields.size()) + " fields");
        }
        Row r;
        r.date = parse_date(fields[0]);
        r.lat = parse_double(fields[1]);
        r.lon = parse_double(fields[2]);
        r.channel = fields[3];
        r.has_value = !fields[4].empty();
        r.value = r.has_value ? parse_float(fields[4]) : 0.0f;
        lats.push_back(r.lat);
        lons.push_back(r.lon);
        if (std::find(channels.begin(), channels.end(), r.channel) == channels.end()) {
            channels.push_back(r.channel);
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) {
        throw DataError("csv_long file has no data rows");
    }

    const std::vector<double> ulats = unique_coords(lats, 1e-9);
    const std::vector<double> ulons = unique_coords(lons, 1e-9);
    double res = infer_resolution(ulats, "latitude");
    const double lon_res = infer_resolution(ulons, "longitude");
    if (res == 0.0) {
        res = lon_res;
    } else if (lon_res != 0.0 &&
               std::abs(lon_res - res) > 1e-6 * std::max(1.0, std::abs(res))) {
        throw DataError("latitude and longitude spacing disagree");
    }
    if (res == 0.0) {
        res = 1.0; // single-cell grid
    }

    GridGeometry geom;
    geom.lat_min = ulats.front();
    geom.lon_min = ulons.front();
    geom.resolution = res;
    geom.height = static_cast<int>(ulats.size());
    geom.width = static_cast<int>(ulons.size());
    geom.validate();

    const int V = static_cast<int>(channels.size());
    const std::size_t cells = static_cast<std::size_t>(geom.height) * geom.width;

    std::map<Date, std::size_t> date_slot;
    DailyFieldSeries series;
    series.geometry = geom;
    series.channel_names = channels;
    std::vector<std::vector<std::uint8_t>> filled; // per date, V*H*W flags

    for (const Row& r : rows) {
        auto it = date_slot.find(r.date);
        if (it == date_slot.end()) {
            it = date_slot.emplace(r.date, series.fields.size()).first;
            DailyField f;
            f.date = r.date;
            f.values.assign(cells * V, 0.0);
            f.missing.assign(cells, 1);
            series.fields.push_back(std::move(f));
            filled.emplace_back(cells * V, 0);
        }
        DailyField& f = series.fields[it->second];
        const int i = coord_index(r.lat, geom.lat_min, geom.resolution);
        const int j = coord_index(r.lon, geom.lon_min, geom.resolution);
        const int c = static_cast<int>(
            std::find(channels.begin(), channels.end(), r.channel) - channels.begin());
        const std::size_t flat = (static_cast<std::size_t>(c) * geom.height + i) * geom.width + j;
        if (filled[it->second][flat]) {
            throw DataError("duplicate record for " + format_date(r.date) + " at (" +
                            format_double(r.lat) + "," + format_double(r.lon) + ") channel " +
                            r.channel);
        }
        filled[it->second][flat] = 1;
        if (r.has_value) {
            f.values[flat] = r.value;
        }
    }

    // A cell is non-missing iff every channel got an explicit value; rows
    // with an empty value field count as seen but leave the cell missing.
    std::vector<std::vector<std::uint8_t>> valued(filled.size());
    for (std::size_t s = 0; s < filled.size(); ++s) {
        valued[s].assign(cells * V, 0);
    }
    for (const Row& r : rows) {
        if (!r.has_value) {
            continue;
        }
        const std::size_t slot = date_slot.at(r.date);
        const int i = coord_index(r.lat, geom.lat_min, geom.resolution);
        const int j = coord_index(r.lon, geom.lon_min, geom.resolution);
        const int c = static_cast<int>(
            std::find(channels.begin(), channels.end(), r.channel) - channels.begin());
        valued[slot][(static_cast<std::size_t>(c) * geom.height + i) * geom.width + j] = 1;
    }
    for (std::size_t s = 0; s < series.fields.size(); ++s) {
        DailyField& f = series.fields[s];
        for (std::size_t cell = 0; cell < cells; ++cell) {
            bool all = true;
            for (int c = 0; c < V; ++c) {
                if (!valued[s][static_cast<std::size_t>(c) * cells + cell]) {
                    all = false;
                }
            }
            f.missing[cell] = all ? 0 : 1;
            if (!all) {
                for (int c = 0; c < V; ++c) {
                    f.values[static_cast<std::size_t>(c) * cells + cell] = 0.0;
                }
            }
        }
    }

    std::sort(series.fields.begin(), series.fields.end(),
              [](const DailyField& a, const DailyField& b) { return a.date < b.date; });
    series.validate();
    return series;
}

void write_csv_long(const DailyFieldSeries& series, const std::filesystem::path& path) {
    std::ostringstream out;
    out << kCsvLongHeader << '\n';
    const GridGeometry& g = series.geometry;
    const std::size_t cells = series.cells_per_channel();
    for (const DailyField& f : series.fields) {
        const std::string date = format_date(f.date);
        for (int c = 0; c < series.n_channels(); ++c) {
            for (int i = 0; i < g.height; ++i) {
                for (int j = 0; j < g.width; ++j) {
                    const std::size_t cell = static_cast<std::size_t>(i) * g.width + j;
                    out << date << ',' << format_double(g.lat_at(i)) << ','
                        << format_double(g.lon_at(j)) << ',' << series.channel_names[c] << ',';
                    if (!f.missing[cell]) {
                        out << format_float(static_cast<float>(
                            f.values[static_cast<std::size_t>(c) * cells + cell]));
                    }
                    out << '\n';
                }
            }
        }
    }
    write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------
// packed_binary format
// ---------------------------------------------------------------------------

DailyFieldSeries load_packed_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file: " + path.string());
    }
    std::string header_line;
    if (!std::getline(in, header_line)) {
        throw DataError("missing packed_binary header");
    }
    json header;
    try {
        header = json::parse(header_line);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed packed_binary header: ") + e.what());
    }

    DailyFieldSeries series;
    try {
        if (header.at("dtype").get<std::string>() != "f32") {
            throw DataError("unsupported packed_binary dtype");
        }
        const json& jg = header.at("geometry");
        series.geometry.lat_min = jg.at("lat_min").get<double>();
        series.geometry.lon_min = jg.at("lon_min").get<double>();
        series.geometry.resolution = jg.at("resolution").get<double>();
        series.geometry.height = jg.at("height").get<int>();
        series.geometry.width = jg.at("width").get<int>();
        series.channel_names = header.at("channels").get<std::vector<std::string>>();
        const auto date_strings = header.at("dates").get<std::vector<std::string>>();
        series.fields.reserve(date_strings.size());
        for (const std::string& ds : date_strings) {
            DailyField f;
            f.date = parse_date(ds);
            series.fields.push_back(std::move(f));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed packed_binary header: ") + e.what());
    }

    const std::size_t cells = series.cells_per_channel();
    const std::size_t per_day = cells * series.channel_names.size();
    std::vector<float> buf(per_day);
    for (DailyField& f : series.fields) {
        read_f32_le(in, buf.data(), per_day);
        f.values.assign(buf.begin(), buf.end());
        f.missing.assign(cells, 0);
        // NaN payload cells mark missing values.
        for (std::size_t cell = 0; cell < cells; ++cell) {
            bool any_nan = false;
            for (std::size_t c = 0; c < series.channel_names.size(); ++c) {
                if (std::isnan(f.values[c * cells + cell])) {
                    any_nan = true;
                }
            }
            if (any_nan) {
                f.missing[cell] = 1;
                for (std::size_t c = 0; c < series.channel_names.size(); ++c) {
                    f.values[c * cells + cell] = 0.0;
                }
            }
        }
    }
    series.validate();
    return series;
}

void write_packed_binary(const DailyFieldSeries& series, const std::filesystem::path& path) {
    json header;
    header["dtype"] = "f32";
    header["order"] = "[day][channel][lat][lon]";
    header["geometry"] = {{"lat_min", series.geometry.lat_min},
                          {"lon_min", series.geometry.lon_min},
                          {"resolution", series.geometry.resolution},
                          {"height", series.geometry.height},
                          {"width", series.geometry.width}};
    header["channels"] = series.channel_names;
    std::vector<std::string> dates;
    dates.reserve(series.fields.size());
    for (const DailyField& f : series.fields) {
        dates.push_back(format_date(f.date));
    }
    header["dates"] = dates;

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write file: " + path.string());
    }
    out << header.dump() << '\n';
    const std::size_t cells = series.cells_per_channel();
    std::vector<float> day_buf;
    for (const DailyField& f : series.fields) {
        day_buf.assign(f.values.begin(), f.values.end());
        for (std::size_t cell = 0; cell < cells; ++cell) {
            if (f.missing[cell]) {
                for (std::size_t c = 0; c < series.channel_names.size(); ++c) {
                    day_buf[c * cells + cell] = std::numeric_limits<float>::quiet_NaN();
                }
            }
        }
        write_f32_le(out, day_buf.data(), day_buf.size());
    }
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

} // namespace

DailyFieldSeries load_series(const std::filesystem::path& path, SeriesFormat format) {
    if (!std::filesystem::exists(path)) {
        throw DataError("file does not exist: " + path.string());
    }
    return format == SeriesFormat::csv_long ? load_csv_long(path) : load_packed_binary(path);
}

void write_series(const DailyFieldSeries& series, const std::filesystem::path& path,
                  SeriesFormat format) {
    series.validate();
    if (format == SeriesFormat::csv_long) {
        write_csv_long(series, path);
    } else {
        write_packed_binary(series, path);
    }
}

// ---------------------------------------------------------------------------
// Subsetting and splitting
// ---------------------------------------------------------------------------

DailyFieldSeries spatial_subset(const DailyFieldSeries& series, const BBox& bbox) {
    const GridGeometry& g = series.geometry;
    const double tol = g.resolution * 1e-6;
    int i0 = -1, i1 = -2, j0 = -1, j1 = -2;
    for (int i = 0; i < g.height; ++i) {
        const double lat = g.lat_at(i);
        if (lat >= bbox.lat_min - tol && lat <= bbox.lat_max + tol) {
            if (i0 < 0) {
                i0 = i;
            }
            i1 = i;
        }
    }
    for (int j = 0; j < g.width; ++j) {
        const double lon = g.lon_at(j);
        if (lon >= bbox.lon_min - tol && lon <= bbox.lon_max + tol) {
            if (j0 < 0) {
                j0 = j;
            }
            j1 = j;
        }
    }
    if (i0 < 0 || j0 < 0) {
        throw DataError("bounding box does not intersect the grid");
    }

    DailyFieldSeries out;
    out.geometry = g;
    out.geometry.lat_min = g.lat_at(i0);
    out.geometry.lon_min = g.lon_at(j0);
    out.geometry.height = i1 - i0 + 1;
    out.geometry.width = j1 - j0 + 1;
    out.channel_names = series.channel_names;

    const std::size_t in_cells = series.cells_per_channel();
    const std::size_t out_cells = out.cells_per_channel();
    const int V = series.n_channels();
    out.fields.reserve(series.fields.size());
    for (const DailyField& f : series.fields) {
        DailyField nf;
        nf.date = f.date;
        nf.values.resize(out_cells * V);
        nf.missing.resize(out_cells);
        for (int i = 0; i < out.geometry.height; ++i) {
            for (int j = 0; j < out.geometry.width; ++j) {
                const std::size_t src_cell =
                    static_cast<std::size_t>(i0 + i) * g.width + (j0 + j);
                const std::size_t dst_cell =
                    static_cast<std::size_t>(i) * out.geometry.width + j;
                nf.missing[dst_cell] = f.missing[src_cell];
                for (int c = 0; c < V; ++c) {
                    nf.values[static_cast<std::size_t>(c) * out_cells + dst_cell] =
                        f.values[static_cast<std::size_t>(c) * in_cells + src_cell];
                }
            }
        }
        out.fields.push_back(std::move(nf));
    }
    return out;
}

std::pair<DailyFieldSeries, DailyFieldSeries>
split_by_years(const DailyFieldSeries& series, const std::vector<int>& test_years) {
    const std::set<int> years(test_years.begin(), test_years.end());
    DailyFieldSeries train, test;
    train.geometry = test.geometry = series.geometry;
    train.channel_names = test.channel_names = series.channel_names;
    for (const DailyField& f : series.fields) {
        (years.count(f.date.year) ? test : train).fields.push_back(f);
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

ChannelStats compute_channel_stats(const DailyFieldSeries& series) {
    const int V = series.n_channels();
    const std::size_t cells = series.cells_per_channel();
    ChannelStats stats;
    stats.mean.assign(V, 0.0);
    stats.stddev.assign(V, 0.0);
    for (int c = 0; c < V; ++c) {
        double sum = 0.0;
        long long n = 0;
        for (const DailyField& f : series.fields) {
            for (std::size_t cell = 0; cell < cells; ++cell) {
                if (!f.missing[cell]) {
                    sum += f.values[static_cast<std::size_t>(c) * cells + cell];
                    ++n;
                }
            }
        }
        const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
        double ss = 0.0;
        for (const DailyField& f : series.fields) {
            for (std::size_t cell = 0; cell < cells; ++cell) {
                if (!f.missing[cell]) {
                    const double d = f.values[static_cast<std::size_t>(c) * cells + cell] - mean;
                    ss += d * d;
                }
            }
        }
        stats.mean[c] = mean;
        stats.stddev[c] = n > 0 ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
    }
    return stats;
}

DailyFieldSeries normalize(const DailyFieldSeries& series, const ChannelStats& stats) {
    const int V = series.n_channels();
    if (static_cast<int>(stats.mean.size()) != V ||
        static_cast<int>(stats.stddev.size()) != V) {
        throw DataError("channel stats do not match series channels");
    }
    for (int c = 0; c < V; ++c) {
        if (!(stats.stddev[c] > 0.0)) {
            throw DataError("zero standard deviation in channel '" +
                            series.channel_names[c] + "'");
        }
    }
    DailyFieldSeries out;
    out.geometry = series.geometry;
    out.channel_names = series.channel_names;
    out.channel_stats = stats;
    const std::size_t cells = series.cells_per_channel();
    out.fields.reserve(series.fields.size());
    for (const DailyField& f : series.fields) {
        DailyField nf;
        nf.date = f.date;
        nf.missing = f.missing;
        nf.values.resize(f.values.size());
        for (int c = 0; c < V; ++c) {
            const double mean = stats.mean[c];
            const double inv = 1.0 / stats.stddev[c];
            for (std::size_t cell = 0; cell < cells; ++cell) {
                const std::size_t flat = static_cast<std::size_t>(c) * cells + cell;
                nf.values[flat] =
                    f.missing[cell] ? 0.0 : (f.values[flat] - mean) * inv;
            }
        }
        out.fields.push_back(std::move(nf));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

SyntheticData synthesize(const SyntheticSpec& spec) {
    spec.validate();
    const GridGeometry& g = spec.geometry;
    const int V = static_cast<int>(spec.channel_names.size());
    const int G = spec.n_regimes;
    const std::size_t cells = static_cast<std::size_t>(g.height) * g.width;

    const Rng root(spec.seed);

    // Fixed spatial pattern per (regime, channel): a base level from a
    // shuffled even grid of temperatures, plus two low-order sinusoids.
    // Even spacing keeps regimes thermally distinct for any G.
    Rng pattern_rng = root.fork(1);
    std::vector<std::vector<double>> patterns(
        static_cast<std::size_t>(G) * V, std::vector<double>(cells, 0.0));
    constexpr double kBaseLo = 12.0;
    constexpr double kBaseHi = 32.0;
    for (int c = 0; c < V; ++c) {
        std::vector<int> order(G);
        for (int r = 0; r < G; ++r) {
            order[r] = r;
        }
        Rng perm_rng = pattern_rng.fork(100 + c);
        perm_rng.shuffle(order);
        for (int r = 0; r < G; ++r) {
            Rng wave_rng = pattern_rng.fork(1000 + r * 64 + c);
            const double base =
                kBaseLo + (order[r] + 0.5) * (kBaseHi - kBaseLo) / G;
            const double fy1 = wave_rng.uniform(0.5, 2.0);
            const double fx1 = wave_rng.uniform(0.5, 2.0);
            const double ph1 = wave_rng.uniform(0.0, 6.283185307179586);
            const double fy2 = wave_rng.uniform(1.0, 3.0);
            const double fx2 = wave_rng.uniform(1.0, 3.0);
            const double ph2 = wave_rng.uniform(0.0, 6.283185307179586);
            std::vector<double>& p = patterns[static_cast<std::size_t>(r) * V + c];
            for (int i = 0; i < g.height; ++i) {
                for (int j = 0; j < g.width; ++j) {
                    const double u = static_cast<double>(i) / g.height;
                    const double v = static_cast<double>(j) / g.width;
                    p[static_cast<std::size_t>(i) * g.width + j] =
                        base + 1.2 * std::sin(6.283185307179586 * (fy1 * u + fx1 * v) + ph1) +
                        0.6 * std::sin(6.283185307179586 * (fy2 * u + fx2 * v) + ph2);
                }
            }
        }
    }

    // Square-wave ENSO months and the matching ONI series.
    const long long start_month = month_index(spec.first_year, 1);
    const long long end_month = month_index(spec.last_year, 12);
    const int n_months = static_cast<int>(end_month - start_month + 1);
    std::vector<std::uint8_t> elnino(n_months, 0);
    OniSeries oni;
    oni.entries.reserve(n_months);
    for (int m = 0; m < n_months; ++m) {
        elnino[m] = (m % spec.enso_period_months) < spec.enso_phase_months ? 1 : 0;
        int year, month;
        month_from_index(start_month + m, year, month);
        const double wiggle = 0.1 * std::sin(2.0 * 3.141592653589793 * m / 7.0);
        oni.entries.push_back({year, month, (elnino[m] ? 1.2 : 0.0) + wiggle});
    }

    Rng regime_rng = root.fork(2);
    const Rng noise_root = root.fork(3);

    SyntheticData out;
    out.series.geometry = g;
    out.series.channel_names = spec.channel_names;
    out.oni = std::move(oni);

    const Date first{spec.first_year, 1, 1};
    const Date last{spec.last_year, 12, 31};
    long long day_ordinal = 0;
    for (Date d = first; d <= last; d = next_day(d), ++day_ordinal) {
        const int month_offset = static_cast<int>(month_index(d) - start_month);
        const int source_month = month_offset - spec.coupling_delay_months;
        const bool coupled = source_month >= 0 && elnino[source_month];

        double p_planted = 1.0 / G + (coupled ? spec.coupling_strength : 0.0);
        p_planted = std::min(p_planted, 1.0);
        const double u = regime_rng.uniform();
        int regime;
        if (G == 1 || u < p_planted) {
            regime = spec.enso_coupled_regime;
        } else {
            const double rest = (1.0 - p_planted) / (G - 1);
            int slot = static_cast<int>((u - p_planted) / rest);
            slot = std::min(slot, G - 2);
            regime = slot < spec.enso_coupled_regime ? slot : slot + 1;
        }

        const double seasonal =
            spec.seasonal_amplitude *
            std::cos(2.0 * 3.141592653589793 * (day_of_year(d) - 15.0) / 365.25);

        Rng noise_rng = noise_root.fork(static_cast<std::uint64_t>(day_ordinal));
        DailyField f;
        f.date = d;
        f.values.resize(cells * V);
        f.missing.assign(cells, 0);
        for (int c = 0; c < V; ++c) {
            const std::vector<double>& p = patterns[static_cast<std::size_t>(regime) * V + c];
            for (std::size_t cell = 0; cell < cells; ++cell) {
                double value = p[cell] + seasonal;
                if (spec.noise_sigma > 0.0) {
                    value += spec.noise_sigma * noise_rng.normal();
                }
                // Quantize so written artifacts round-trip bitwise.
                f.values[static_cast<std::size_t>(c) * cells + cell] =
                    static_cast<double>(static_cast<float>(value));
            }
        }
        out.series.fields.push_back(std::move(f));
        out.true_labels.emplace_back(d, regime);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Label CSV
// ---------------------------------------------------------------------------

void write_labels(const std::vector<std::pair<Date, int>>& labels,
                  const std::filesystem::path& path) {
    std::ostringstream out;
    out << "date,regime\n";
    for (const auto& [date, regime] : labels) {
        out << format_date(date) << ',' << regime << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<std::pair<Date, int>> load_labels(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "date,regime") {
        throw DataError("malformed label file header");
    }
    std::vector<std::pair<Date, int>> labels;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto fields = split_csv(lines[i]);
        if (fields.size() != 2) {
            throw DataError("malformed label row " + std::to_string(i + 1));
        }
        labels.emplace_back(parse_date(fields[0]), static_cast<int>(parse_long(fields[1])));
    }
    return labels;
}

} // namespace climreg
