#pragma once

#include "climreg/calendar.hpp"
#include "climreg/oni.hpp"
#include "climreg/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace climreg {

/// Regular lat/lon grid. Cell centers are lat_min + i*resolution
/// (i = 0..height-1, south to north) and lon_min + j*resolution.
struct GridGeometry {
    double lat_min = 0.0;
    double lon_min = 0.0;
    double resolution = 1.0; // degrees per cell
    int height = 1;          // latitude cell count
    int width = 1;           // longitude cell count

    double lat_max() const { return lat_min + (height - 1) * resolution; }
    double lon_max() const { return lon_min + (width - 1) * resolution; }
    double lat_at(int i) const { return lat_min + i * resolution; }
    double lon_at(int j) const { return lon_min + j * resolution; }

    bool operator==(const GridGeometry&) const = default;

    void validate() const; // throws DataError on bad dimensions
};

/// Closed lat/lon bounding box used for spatial subsetting.
struct BBox {
    double lat_min = 0.0;
    double lat_max = 0.0;
    double lon_min = 0.0;
    double lon_max = 0.0;
};

/// One day of gridded values, [channel][lat][lon] row-major. Values are
/// held in doubles; both file formats quantize to binary32, and the
/// generators emit binary32-representable values so disk round-trips are
/// bitwise. Missing cells are flagged in the mask and hold 0 in `values`.
struct DailyField {
    Date date;
    std::vector<double> values;        // V*H*W
    std::vector<std::uint8_t> missing; // H*W, 1 = missing (shared by channels)

    double at(int channel, int i, int j, int height, int width) const {
        return values[(static_cast<std::size_t>(channel) * height + i) * width + j];
    }
};

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

struct DailyFieldSeries {
    GridGeometry geometry;
    std::vector<std::string> channel_names;
    std::vector<DailyField> fields; // strictly increasing dates
    std::optional<ChannelStats> channel_stats;

    int n_channels() const { return static_cast<int>(channel_names.size()); }
    std::size_t n_days() const { return fields.size(); }
    std::size_t cells_per_channel() const {
        return static_cast<std::size_t>(geometry.height) * geometry.width;
    }

    void validate() const;
};

enum class SeriesFormat { csv_long, packed_binary };

/// Configuration of the synthetic gridded-climate generator that serves as
/// the verification oracle for the whole pipeline.
struct SyntheticSpec {
    GridGeometry geometry{-12.0, -50.0, 1.0, 12, 12};
    std::vector<std::string> channel_names{"tmin", "tmax"};
    int n_regimes = 6;
    int first_year = 2000;
    int last_year = 2005;
    int enso_coupled_regime = 0;
    double coupling_strength = 0.0;  // probability offset in [0,1]
    int coupling_delay_months = 0;   // regime responds to ENSO this many months back
    double seasonal_amplitude = 0.0; // degrees C
    double noise_sigma = 0.0;        // degrees C
    int enso_period_months = 48;     // square-wave ENSO cycle
    int enso_phase_months = 12;      // El Nino months per cycle
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError
};

struct SyntheticData {
    DailyFieldSeries series;
    std::vector<std::pair<Date, int>> true_labels; // date -> regime
    OniSeries oni;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

DailyFieldSeries load_series(const std::filesystem::path& path, SeriesFormat format);
void write_series(const DailyFieldSeries& series, const std::filesystem::path& path,
                  SeriesFormat format);

/// Keeps exactly the grid centers inside the closed bbox.
/// Throws DataError if the intersection is empty.
DailyFieldSeries spatial_subset(const DailyFieldSeries& series, const BBox& bbox);

/// Fields whose year is in test_years go to .second, the rest to .first.
std::pair<DailyFieldSeries, DailyFieldSeries>
split_by_years(const DailyFieldSeries& series, const std::vector<int>& test_years);

/// Per-channel mean and standard deviation over non-missing cells.
ChannelStats compute_channel_stats(const DailyFieldSeries& series);

/// Per-channel z-score; missing cells become 0 after normalization.
/// Throws DataError when a stddev is zero.
DailyFieldSeries normalize(const DailyFieldSeries& series, const ChannelStats& stats);

/// Deterministic synthetic generator: each day is one of G fixed spatial
/// patterns plus seasonal cycle plus Gaussian noise; the coupled regime's
/// draw probability is raised by coupling_strength during (possibly delayed)
/// synthetic El Nino months.
SyntheticData synthesize(const SyntheticSpec& spec);

/// True-label CSV with header `date,regime`.
void write_labels(const std::vector<std::pair<Date, int>>& labels,
                  const std::filesystem::path& path);
std::vector<std::pair<Date, int>> load_labels(const std::filesystem::path& path);

} // namespace climreg
