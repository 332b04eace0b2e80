#pragma once

#include "climreg/encoder.hpp"
#include "climreg/grid_data.hpp"
#include "climreg/msn.hpp"
#include "climreg/teleconnection.hpp"
#include "climreg/views.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <vector>

namespace climreg {

struct DataSource {
    std::optional<SyntheticSpec> synthetic;
    std::filesystem::path path;
    SeriesFormat format = SeriesFormat::packed_binary;
};

struct AnalysisConfig {
    LagRange lags{-12, 12};
    std::vector<YearRange> periods;    // empty = full data range, resolved at run time
    std::vector<double> quantile_grid; // default set in load
    long n_min = 30;
    int window = 13;
    int n_groups = 8;
    double enso_threshold = 0.5;
    int enso_persistence = 5;
    int report_top_n = 2;
};

/// Resolved configuration of the whole pipeline, parsed from one JSON
/// document. The JSON echo (with every default filled in) is written to
/// manifest.json next to each command's outputs.
struct PipelineConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    DataSource data;
    std::optional<BBox> bbox;
    std::vector<int> test_years;
    ViewConfig views;
    int embed_dim = 64;
    int hidden_dim = 128;
    int latent_dim = 128;
    TrainConfig train;
    std::optional<std::filesystem::path> oni_path;
    AnalysisConfig analysis;

    /// Encoder dimensions for a dataset with the given channel count.
    EncoderDims encoder_dims(int n_channels) const {
        EncoderDims d;
        d.patch_size = views.patch_size;
        d.n_channels = n_channels;
        d.embed_dim = embed_dim;
        d.hidden_dim = hidden_dim;
        d.latent_dim = latent_dim;
        return d;
    }
};

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& cfg);

/// Parses the JSON file at `path`; throws ConfigError on any problem.
PipelineConfig load_config(const std::filesystem::path& path);

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, std::uint64_t default_seed);
nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec);

} // namespace climreg
