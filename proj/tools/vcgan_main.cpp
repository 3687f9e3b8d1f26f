// vcgan: learn stochastic channel models p(y|x) with a variational conditional GAN.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vcgan/errors.hpp"
#include "vcgan/experiment.hpp"
#include "vcgan/kernels.hpp"
#include "vcgan/param_io.hpp"

namespace {

void log_line(const std::string& line) { std::cerr << line << std::endl; }

int cmd_run(const std::string& config_path, const std::string& preset_name, std::optional<std::uint64_t> seed,
            const std::string& out_dir) {
    vcgan::ExperimentConfig cfg = preset_name.empty() ? vcgan::load_experiment_config(config_path)
                                                      : vcgan::preset(preset_name);
    if (seed) cfg.apply_seed(*seed);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    log_line("kernels: " + std::string(vcgan::kernels::active().name));
    const auto outcome = vcgan::run_experiment(cfg, log_line);
    std::cout << "experiment " << cfg.name << ": train " << outcome.train_seconds << " s, eval "
              << outcome.eval_seconds << " s\n"
              << "  marginal JS " << outcome.report.marginal_js << ", mean per-condition JS "
              << outcome.report.mean_condition_js << "\n";
    for (const auto& c : outcome.report.conditions) {
        std::cout << "  x = [";
        for (std::size_t d = 0; d < c.x.size(); ++d) std::cout << (d ? ", " : "") << c.x[d];
        std::cout << "]  true mean/std";
        for (std::size_t d = 0; d < c.truth.mean.size(); ++d)
            std::cout << ' ' << c.truth.mean[d] << '/' << c.truth.std_dev(d);
        std::cout << "  model mean/std";
        for (std::size_t d = 0; d < c.model.mean.size(); ++d)
            std::cout << ' ' << c.model.mean[d] << '/' << c.model.std_dev(d);
        std::cout << "  JS " << c.js << '\n';
    }
    return 0;
}

int cmd_presets() {
    for (const auto& p : vcgan::list_presets()) {
        std::cout << p.name << "\t" << (p.figure ? "fig " + std::to_string(*p.figure) : std::string("-")) << "\t"
                  << p.description << '\n';
    }
    return 0;
}

int cmd_compare(const std::string& a, const std::string& b) {
    vcgan::print_comparison(std::cout, vcgan::compare_run_files(a, b));
    return 0;
}

int cmd_sample(const std::string& preset_name, std::size_t n, std::uint64_t seed, const std::string& out) {
    const auto cfg = vcgan::preset(preset_name);
    const auto batch = vcgan::sample_dataset(vcgan::make_source(cfg.modulation), cfg.channel, n, seed);
    std::ofstream file(out);
    if (!file) throw vcgan::ConfigError("cannot open " + out);
    vcgan::write_batch_csv(file, batch);
    return 0;
}

int cmd_fit(const std::string& data_path, const std::string& objective, std::size_t iterations,
            std::uint64_t seed, const std::string& out) {
    std::ifstream in(data_path);
    if (!in) throw vcgan::ConfigError("cannot open " + data_path);
    const auto data = vcgan::read_batch_csv(in);
    vcgan::TrainConfig cfg;
    const auto obj = vcgan::parse_objective(objective);
    if (!obj) throw vcgan::ConfigError("--objective: unknown objective '" + objective + "'");
    cfg.objective = *obj;
    cfg.iterations = iterations;
    cfg.seed = seed;
    vcgan::TrainHooks hooks;
    hooks.progress = [&](const vcgan::IterationRecord& r) {
        if ((r.iteration + 1) % 1000 == 0)
            log_line("fit iter " + std::to_string(r.iteration + 1) + " g_loss " + std::to_string(r.g_loss));
    };
    auto result = vcgan::train_on_dataset(data, cfg, hooks);
    vcgan::save_stack_file(out, result.generator, seed);
    std::cout << "trained on " << data.size() << " samples, model written to " << out << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn stochastic channel models p(y|x) with a variational conditional GAN"};
    app.require_subcommand(1);

    std::string config_path, preset_name, out_dir;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Train and evaluate one experiment");
    run->add_option("config", config_path, "Experiment config (INI)")->check(CLI::ExistingFile);
    run->add_option("--preset", preset_name, "Built-in preset name (see `presets`)");
    run->add_option("--seed", seed, "Master seed override");
    run->add_option("--out", out_dir, "Output directory override");

    auto* presets = app.add_subcommand("presets", "List built-in experiment presets");

    std::string report_a, report_b;
    auto* compare = app.add_subcommand("compare", "Compare two report.json files side by side");
    compare->add_option("a", report_a, "First report")->required();
    compare->add_option("b", report_b, "Second report")->required();

    std::string sample_preset = "bpsk-awgn-gan", sample_out = "samples.csv";
    std::size_t sample_n = 10000;
    std::uint64_t sample_seed = 1;
    auto* sample = app.add_subcommand("sample", "Export (x, y) pairs from a preset's ground-truth channel as CSV");
    sample->add_option("--preset", sample_preset, "Preset whose modulation/channel to use");
    sample->add_option("-n,--count", sample_n, "Number of samples");
    sample->add_option("--seed", sample_seed, "Sampling seed");
    sample->add_option("-o,--out", sample_out, "Output CSV path");

    std::string fit_data, fit_objective = "gan", fit_out = "model.bin";
    std::size_t fit_iterations = 10000;
    std::uint64_t fit_seed = 1;
    auto* fit = app.add_subcommand("fit", "Train a generator on measured (x, y) pairs from CSV");
    fit->add_option("data", fit_data, "CSV with columns x_0..,y_0..")->required()->check(CLI::ExistingFile);
    fit->add_option("--objective", fit_objective, "mse, gan or wgan");
    fit->add_option("--iterations", fit_iterations, "Training iterations");
    fit->add_option("--seed", fit_seed, "Training seed");
    fit->add_option("-o,--out", fit_out, "Model output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (config_path.empty() == preset_name.empty()) {
                std::cerr << "run: give exactly one of <config> or --preset\n";
                return 2;
            }
            return cmd_run(config_path, preset_name, seed, out_dir);
        }
        if (*presets) return cmd_presets();
        if (*compare) return cmd_compare(report_a, report_b);
        if (*sample) return cmd_sample(sample_preset, sample_n, sample_seed, sample_out);
        if (*fit) return cmd_fit(fit_data, fit_objective, fit_iterations, fit_seed, fit_out);
    } catch (const vcgan::TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
