#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vcgan/channels.hpp"
#include "vcgan/eval.hpp"
#include "vcgan/modulation.hpp"
#include "vcgan/vgan.hpp"

namespace vcgan {

/// Everything one run needs. Serialized as an INI file with sections
/// [experiment], [modulation], [channel], [train] and [eval].
struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 1;  // master seed
    std::filesystem::path output_dir = "runs/experiment";
    Modulation modulation = Modulation::Bpsk;
    ChannelModel channel;
    TrainConfig train;
    EvalConfig eval;

    /// Applies the master seed to the training and evaluation sub-seeds.
    void apply_seed(std::uint64_t master);
    void validate() const;
};

/// Parses the INI text; errors name the offending `section.key`.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void write_experiment_config(std::ostream& out, const ExperimentConfig& config);

struct PresetInfo {
    std::string name;
    std::optional<int> figure;  // reproduced result figure, if any
    std::string description;
};

std::vector<PresetInfo> list_presets();
/// Throws ConfigError for unknown names.
ExperimentConfig preset(std::string_view name);

struct ExperimentOutcome {
    TrainResult training;
    ModelReport report;
    std::string report_json;
    double train_seconds = 0.0;
    double eval_seconds = 0.0;
};

using LogFn = std::function<void(const std::string&)>;

/// Trains, evaluates and writes config_echo, history.csv, model.bin,
/// report.json and density CSVs into config.output_dir (created if needed).
/// An empty output_dir skips writing.
/// `on_discriminator_step`, if set, observes the discriminator after each update.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const LogFn& log = {},
                                 const std::function<void(const LayerStack&)>& on_discriminator_step = {});

struct RunSummary {
    std::string experiment;
    std::string objective;
    double marginal_js = 0.0;
    double mean_condition_js = 0.0;
    double marginal_kl = 0.0;
    double mean_abs_mean_error = 0.0;   // averaged over conditions and dims
    double mean_std_ratio = 0.0;        // model std / true std, averaged
};

struct RunComparison {
    RunSummary a;
    RunSummary b;
    RunSummary delta;  // b - a for every numeric field
};

/// Side-by-side summary of two report.json documents; they must describe the
/// same modulation and channel.
RunComparison compare_runs(const std::string& report_a_json, const std::string& report_b_json);
RunComparison compare_run_files(const std::filesystem::path& a, const std::filesystem::path& b);
void print_comparison(std::ostream& out, const RunComparison& cmp);

} // namespace vcgan
