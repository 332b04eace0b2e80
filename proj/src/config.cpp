#include "climreg/config.hpp"
#include "climreg/errors.hpp"

#include <fstream>

namespace climreg {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (j.contains(key)) {
        return j.at(key).get<T>();
    }
    return fallback;
}

GridGeometry geometry_from_json(const json& j) {
    GridGeometry g;
    g.lat_min = j.at("lat_min").get<double>();
    g.lon_min = j.at("lon_min").get<double>();
    g.resolution = j.at("resolution").get<double>();
    g.height = j.at("height").get<int>();
    g.width = j.at("width").get<int>();
    return g;
}

json geometry_to_json(const GridGeometry& g) {
    return json{{"lat_min", g.lat_min},
                {"lon_min", g.lon_min},
                {"resolution", g.resolution},
                {"height", g.height},
                {"width", g.width}};
}

std::vector<double> default_quantile_grid() {
    return {0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
}

} // namespace

SyntheticSpec synthetic_spec_from_json(const json& j, std::uint64_t default_seed) {
    SyntheticSpec s;
    if (j.contains("geometry")) {
        s.geometry = geometry_from_json(j.at("geometry"));
    }
    s.channel_names = get_or(j, "channels", s.channel_names);
    s.n_regimes = get_or(j, "n_regimes", s.n_regimes);
    s.first_year = get_or(j, "first_year", s.first_year);
    s.last_year = get_or(j, "last_year", s.last_year);
    s.enso_coupled_regime = get_or(j, "enso_coupled_regime", s.enso_coupled_regime);
    s.coupling_strength = get_or(j, "coupling_strength", s.coupling_strength);
    s.coupling_delay_months = get_or(j, "coupling_delay_months", s.coupling_delay_months);
    s.seasonal_amplitude = get_or(j, "seasonal_amplitude", s.seasonal_amplitude);
    s.noise_sigma = get_or(j, "noise_sigma", s.noise_sigma);
    s.enso_period_months = get_or(j, "enso_period_months", s.enso_period_months);
    s.enso_phase_months = get_or(j, "enso_phase_months", s.enso_phase_months);
    s.seed = get_or(j, "seed", default_seed);
    return s;
}

json synthetic_spec_to_json(const SyntheticSpec& s) {
    return json{{"geometry", geometry_to_json(s.geometry)},
                {"channels", s.channel_names},
                {"n_regimes", s.n_regimes},
                {"first_year", s.first_year},
                {"last_year", s.last_year},
                {"enso_coupled_regime", s.enso_coupled_regime},
                {"coupling_strength", s.coupling_strength},
                {"coupling_delay_months", s.coupling_delay_months},
                {"seasonal_amplitude", s.seasonal_amplitude},
                {"noise_sigma", s.noise_sigma},
                {"enso_period_months", s.enso_period_months},
                {"enso_phase_months", s.enso_phase_months},
                {"seed", s.seed}};
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
    cfg.out_dir = get_or<std::string>(j, "out_dir", "out");

    if (!j.contains("data")) {
        throw ConfigError("config needs a 'data' section");
    }
    const json& jd = j.at("data");
    if (jd.contains("synthetic")) {
        cfg.data.synthetic = synthetic_spec_from_json(jd.at("synthetic"), cfg.seed);
    } else if (jd.contains("path")) {
        cfg.data.path = jd.at("path").get<std::string>();
        const std::string fmt = get_or<std::string>(jd, "format", "packed_binary");
        if (fmt == "csv_long") {
            cfg.data.format = SeriesFormat::csv_long;
        } else if (fmt == "packed_binary") {
            cfg.data.format = SeriesFormat::packed_binary;
        } else {
            throw ConfigError("unknown data format '" + fmt + "'");
        }
    } else {
        throw ConfigError("data section needs either 'synthetic' or 'path'");
    }

    if (j.contains("bbox")) {
        const json& jb = j.at("bbox");
        BBox b;
        b.lat_min = jb.at("lat_min").get<double>();
        b.lat_max = jb.at("lat_max").get<double>();
        b.lon_min = jb.at("lon_min").get<double>();
        b.lon_max = jb.at("lon_max").get<double>();
        cfg.bbox = b;
    }
    cfg.test_years = get_or(j, "test_years", std::vector<int>{});

    if (j.contains("views")) {
        const json& jv = j.at("views");
        cfg.views.out_size = get_or(jv, "out_size", cfg.views.out_size);
        cfg.views.patch_size = get_or(jv, "patch_size", cfg.views.patch_size);
        cfg.views.n_anchors = get_or(jv, "n_anchors", cfg.views.n_anchors);
        if (jv.contains("target_scale")) {
            cfg.views.target_scale = {jv.at("target_scale").at(0).get<double>(),
                                      jv.at("target_scale").at(1).get<double>()};
        }
        if (jv.contains("anchor_scale")) {
            cfg.views.anchor_scale = {jv.at("anchor_scale").at(0).get<double>(),
                                      jv.at("anchor_scale").at(1).get<double>()};
        }
        cfg.views.mask_ratio = get_or(jv, "mask_ratio", cfg.views.mask_ratio);
    }

    if (j.contains("encoder")) {
        const json& je = j.at("encoder");
        cfg.embed_dim = get_or(je, "embed_dim", cfg.embed_dim);
        cfg.hidden_dim = get_or(je, "hidden_dim", cfg.hidden_dim);
        cfg.latent_dim = get_or(je, "latent_dim", cfg.latent_dim);
    }

    if (j.contains("train")) {
        const json& jt = j.at("train");
        cfg.train.k_prototypes = get_or(jt, "k_prototypes", cfg.train.k_prototypes);
        cfg.train.tau_anchor = get_or(jt, "tau_anchor", cfg.train.tau_anchor);
        cfg.train.tau_target = get_or(jt, "tau_target", cfg.train.tau_target);
        cfg.train.memax_weight = get_or(jt, "memax_weight", cfg.train.memax_weight);
        cfg.train.memax_on_target = get_or(jt, "memax_on_target", cfg.train.memax_on_target);
        cfg.train.epochs = get_or(jt, "epochs", cfg.train.epochs);
        cfg.train.batch_size = get_or(jt, "batch_size", cfg.train.batch_size);
        cfg.train.base_lr = get_or(jt, "base_lr", cfg.train.base_lr);
        cfg.train.final_lr = get_or(jt, "final_lr", cfg.train.final_lr);
        cfg.train.weight_decay = get_or(jt, "weight_decay", cfg.train.weight_decay);
        cfg.train.ema_momentum = get_or(jt, "ema_momentum", cfg.train.ema_momentum);
    }
    cfg.train.seed = cfg.seed;

    if (j.contains("oni_path")) {
        cfg.oni_path = std::filesystem::path(j.at("oni_path").get<std::string>());
    }

    cfg.analysis.quantile_grid = default_quantile_grid();
    if (j.contains("analysis")) {
        const json& ja = j.at("analysis");
        cfg.analysis.lags.tau_min = get_or(ja, "lag_min", cfg.analysis.lags.tau_min);
        cfg.analysis.lags.tau_max = get_or(ja, "lag_max", cfg.analysis.lags.tau_max);
        if (ja.contains("periods")) {
            for (const auto& jp : ja.at("periods")) {
                cfg.analysis.periods.push_back(
                    {jp.at(0).get<int>(), jp.at(1).get<int>()});
            }
        }
        cfg.analysis.quantile_grid =
            get_or(ja, "quantile_grid", cfg.analysis.quantile_grid);
        cfg.analysis.n_min = get_or(ja, "n_min", cfg.analysis.n_min);
        cfg.analysis.window = get_or(ja, "window", cfg.analysis.window);
        cfg.analysis.n_groups = get_or(ja, "n_groups", cfg.analysis.n_groups);
        cfg.analysis.enso_threshold =
            get_or(ja, "enso_threshold", cfg.analysis.enso_threshold);
        cfg.analysis.enso_persistence =
            get_or(ja, "enso_persistence", cfg.analysis.enso_persistence);
        cfg.analysis.report_top_n = get_or(ja, "report_top_n", cfg.analysis.report_top_n);
    }

    // Fail fast on structurally invalid sections.
    cfg.views.validate();
    cfg.train.validate();
    if (cfg.data.synthetic) {
        cfg.data.synthetic->validate();
    }
    return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir.string();
    if (cfg.data.synthetic) {
        j["data"] = {{"synthetic", synthetic_spec_to_json(*cfg.data.synthetic)}};
    } else {
        j["data"] = {{"path", cfg.data.path.string()},
                     {"format", cfg.data.format == SeriesFormat::csv_long ? "csv_long"
                                                                          : "packed_binary"}};
    }
    if (cfg.bbox) {
        j["bbox"] = {{"lat_min", cfg.bbox->lat_min},
                     {"lat_max", cfg.bbox->lat_max},
                     {"lon_min", cfg.bbox->lon_min},
                     {"lon_max", cfg.bbox->lon_max}};
    }
    j["test_years"] = cfg.test_years;
    j["views"] = {{"out_size", cfg.views.out_size},
                  {"patch_size", cfg.views.patch_size},
                  {"n_anchors", cfg.views.n_anchors},
                  {"target_scale", {cfg.views.target_scale.lo, cfg.views.target_scale.hi}},
                  {"anchor_scale", {cfg.views.anchor_scale.lo, cfg.views.anchor_scale.hi}},
                  {"mask_ratio", cfg.views.mask_ratio}};
    j["encoder"] = {{"embed_dim", cfg.embed_dim},
                    {"hidden_dim", cfg.hidden_dim},
                    {"latent_dim", cfg.latent_dim}};
    j["train"] = {{"k_prototypes", cfg.train.k_prototypes},
                  {"tau_anchor", cfg.train.tau_anchor},
                  {"tau_target", cfg.train.tau_target},
                  {"memax_weight", cfg.train.memax_weight},
                  {"memax_on_target", cfg.train.memax_on_target},
                  {"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"base_lr", cfg.train.base_lr},
                  {"final_lr", cfg.train.final_lr},
                  {"weight_decay", cfg.train.weight_decay},
                  {"ema_momentum", cfg.train.ema_momentum}};
    if (cfg.oni_path) {
        j["oni_path"] = cfg.oni_path->string();
    }
    json periods = json::array();
    for (const YearRange& p : cfg.analysis.periods) {
        periods.push_back({p.first, p.last});
    }
    j["analysis"] = {{"lag_min", cfg.analysis.lags.tau_min},
                     {"lag_max", cfg.analysis.lags.tau_max},
                     {"periods", periods},
                     {"quantile_grid", cfg.analysis.quantile_grid},
                     {"n_min", cfg.analysis.n_min},
                     {"window", cfg.analysis.window},
                     {"n_groups", cfg.analysis.n_groups},
                     {"enso_threshold", cfg.analysis.enso_threshold},
                     {"enso_persistence", cfg.analysis.enso_persistence},
                     {"report_top_n", cfg.analysis.report_top_n}};
    return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

} // namespace climreg
