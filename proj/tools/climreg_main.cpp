// Command-line driver for the climate-regime pipeline:
//   synth | train | discretize | analyze | report
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical failure.

#include "climreg/errors.hpp"
#include "climreg/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config JSON")->required();
    cmd->add_option("--seed", opts.seed, "override config seed");
    cmd->add_option("--epochs", opts.epochs, "override training epochs");
    cmd->add_option("--out", opts.out_dir, "override output directory");
}

climreg::PipelineConfig resolve(const CommonOpts& opts) {
    climreg::PipelineConfig cfg = climreg::load_config(opts.config_path);
    if (opts.seed) {
        cfg.seed = *opts.seed;
        cfg.train.seed = *opts.seed;
        if (cfg.data.synthetic) {
            cfg.data.synthetic->seed = *opts.seed;
        }
    }
    if (opts.epochs) {
        cfg.train.epochs = *opts.epochs;
    }
    if (opts.out_dir) {
        cfg.out_dir = *opts.out_dir;
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-supervised climate regimes and ENSO teleconnection statistics"};
    app.require_subcommand(1);

    CommonOpts synth_opts, train_opts, discretize_opts, analyze_opts, report_opts;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(synth, synth_opts);

    CLI::App* train = app.add_subcommand("train", "train encoder and prototypes");
    add_common(train, train_opts);

    CLI::App* discretize = app.add_subcommand("discretize", "label every day with a regime");
    add_common(discretize, discretize_opts);
    std::string checkpoint_path;
    discretize->add_option("--checkpoint", checkpoint_path,
                           "checkpoint file (default <out>/checkpoint.bin)");

    CLI::App* analyze = app.add_subcommand("analyze", "compute teleconnection statistics");
    add_common(analyze, analyze_opts);
    std::string regimes_path, oni_path;
    bool oracle = false;
    analyze->add_option("--regimes", regimes_path, "regime CSV (default <out>/regimes.csv)");
    analyze->add_option("--oni", oni_path, "ONI CSV (default <out>/oni.csv)");
    analyze->add_flag("--oracle", oracle, "verify anomalies against a day-level counting oracle");

    CLI::App* report = app.add_subcommand("report", "summarize an analysis directory");
    add_common(report, report_opts);
    std::string analysis_dir;
    report->add_option("--analysis-dir", analysis_dir,
                       "directory with analyze outputs (default <out>)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            climreg::cmd_synth(resolve(synth_opts));
        } else if (train->parsed()) {
            climreg::cmd_train(resolve(train_opts));
        } else if (discretize->parsed()) {
            const auto cfg = resolve(discretize_opts);
            const std::filesystem::path ckpt = checkpoint_path.empty()
                                                   ? cfg.out_dir / climreg::artifact::checkpoint
                                                   : std::filesystem::path(checkpoint_path);
            climreg::cmd_discretize(cfg, ckpt);
        } else if (analyze->parsed()) {
            const auto cfg = resolve(analyze_opts);
            const std::filesystem::path regimes =
                regimes_path.empty() ? cfg.out_dir / climreg::artifact::regimes
                                     : std::filesystem::path(regimes_path);
            const std::filesystem::path oni = oni_path.empty()
                                                  ? cfg.out_dir / climreg::artifact::oni
                                                  : std::filesystem::path(oni_path);
            climreg::cmd_analyze(cfg, regimes, oni, oracle);
        } else if (report->parsed()) {
            const auto cfg = resolve(report_opts);
            const std::filesystem::path dir =
                analysis_dir.empty() ? cfg.out_dir : std::filesystem::path(analysis_dir);
            climreg::cmd_report(cfg, dir);
        }
    } catch (const climreg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const climreg::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const climreg::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
