#include "vcgan/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vcgan/errors.hpp"
#include "vcgan/param_io.hpp"

namespace vcgan {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"experiment", {"name", "seed", "output_dir"}},
        {"modulation", {"kind"}},
        {"channel",
         {"kind", "noise_std", "dof", "phase_offset", "phase_noise_std", "amam_alpha", "amam_beta", "ampm_alpha",
          "ampm_beta"}},
        {"train",
         {"objective", "learning_rate", "disc_learning_rate", "batch_size", "iterations", "wgan_clip", "non_saturating", "n_critic",
          "latent_dim", "snapshot_every", "ema_decay"}},
        {"eval", {"samples", "bins", "range_lo", "range_hi"}},
    };
    return keys;
}

std::string trimmed(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

class Fields {
public:
    explicit Fields(const pt::ptree& tree) : tree_(tree) {
        for (const auto& [section, body] : tree_) {
            auto known = known_keys().find(section);
            if (known == known_keys().end()) throw ConfigError("unknown config section [" + section + "]");
            for (const auto& [key, value] : body) {
                if (!known->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
            }
        }
    }

    std::optional<std::string> text(const std::string& section, const std::string& key) const {
        auto v = tree_.get_optional<std::string>(pt::ptree::path_type(section + "." + key, '.'));
        if (!v) return std::nullopt;
        return trimmed(*v);
    }

    template <typename T>
    void number(const std::string& section, const std::string& key, T& out) const {
        auto v = text(section, key);
        if (!v) return;
        T parsed{};
        auto res = std::from_chars(v->data(), v->data() + v->size(), parsed);
        if (res.ec != std::errc() || res.ptr != v->data() + v->size())
            throw ConfigError(section + "." + key + ": expected a number, got '" + *v + "'");
        out = parsed;
    }

    void flag(const std::string& section, const std::string& key, bool& out) const {
        auto v = text(section, key);
        if (!v) return;
        if (*v == "true" || *v == "1") {
            out = true;
        } else if (*v == "false" || *v == "0") {
            out = false;
        } else {
            throw ConfigError(section + "." + key + ": expected true or false, got '" + *v + "'");
        }
    }

private:
    const pt::ptree& tree_;
};

std::string num(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open " + path.string());
    out << text;
}

// W1 between channel and generator on fresh symbols, averaged over dims.
double snapshot_divergence(LayerStack& gen, const ChannelModel& channel, const SymbolSource& source,
                           std::uint64_t seed) {
    constexpr std::size_t kSnapshotSamples = 2000;
    Rng rng(seed);
    const Matrix x = draw_symbols(source, kSnapshotSamples, rng);
    const Matrix truth = channel.sample(x, rng);
    const Matrix model = generate(gen, x, rng);
    double total = 0.0;
    for (std::size_t d = 0; d < truth.cols(); ++d) {
        const Matrix a = column_slice(truth, d, 1), b = column_slice(model, d, 1);
        total += wasserstein1_1d(a.flat(), b.flat());
    }
    return total / static_cast<double>(truth.cols());
}

RunSummary summarize(const nlohmann::json& j) {
    RunSummary s;
    s.experiment = j.at("experiment").get<std::string>();
    s.objective = j.at("objective").get<std::string>();
    s.marginal_js = j.at("marginal").at("js").get<double>();
    s.marginal_kl = j.at("marginal").at("kl").get<double>();
    s.mean_condition_js = j.at("mean_condition_js").get<double>();
    double err = 0.0, ratio = 0.0;
    std::size_t n = 0;
    for (const auto& c : j.at("conditions")) {
        const auto tm = c.at("truth").at("mean").get<std::vector<double>>();
        const auto mm = c.at("model").at("mean").get<std::vector<double>>();
        const auto ts = c.at("truth").at("std").get<std::vector<double>>();
        const auto ms = c.at("model").at("std").get<std::vector<double>>();
        for (std::size_t d = 0; d < tm.size(); ++d) {
            err += std::abs(mm[d] - tm[d]);
            ratio += ts[d] > 0.0 ? ms[d] / ts[d] : 0.0;
            ++n;
        }
    }
    if (n > 0) {
        s.mean_abs_mean_error = err / static_cast<double>(n);
        s.mean_std_ratio = ratio / static_cast<double>(n);
    }
    return s;
}

} // namespace

void ExperimentConfig::apply_seed(std::uint64_t master) {
    seed = master;
    train.seed = master;
    eval.seed = derive_seed(master, 20);
}

void ExperimentConfig::validate() const {
    if (name.empty()) throw ConfigError("experiment.name must not be empty");
    const auto source = make_source(modulation);
    if (source.dim() != channel.dim())
        throw ConfigError("modulation.kind " + std::string(to_string(modulation)) + " is incompatible with channel.kind " +
                          std::string(to_string(channel.kind)));
    channel.validate();
    train.validate();
    if (eval.samples == 0) throw ConfigError("eval.samples must be positive");
    if (eval.bins == 0) throw ConfigError("eval.bins must be positive");
    if (!(eval.range.hi > eval.range.lo)) throw ConfigError("eval.range_hi must exceed eval.range_lo");
}

ExperimentConfig parse_experiment_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    const Fields f(tree);
    ExperimentConfig cfg;

    if (auto v = f.text("experiment", "name")) cfg.name = *v;
    std::uint64_t seed = cfg.seed;
    f.number("experiment", "seed", seed);
    if (auto v = f.text("experiment", "output_dir")) {
        cfg.output_dir = *v;
    } else {
        cfg.output_dir = std::filesystem::path("runs") / cfg.name;
    }

    if (auto v = f.text("modulation", "kind")) {
        auto m = parse_modulation(*v);
        if (!m) throw ConfigError("modulation.kind: unknown modulation '" + *v + "' (bpsk, qpsk, qam16)");
        cfg.modulation = *m;
    }

    if (auto v = f.text("channel", "kind")) {
        auto k = parse_channel_kind(*v);
        if (!k) throw ConfigError("channel.kind: unknown channel '" + *v + "' (awgn, chi2, complex_awgn, nonlinear_qam)");
        cfg.channel.kind = *k;
    }
    if (cfg.channel.kind == ChannelKind::ComplexAwgn) cfg.channel.noise_std = 0.1;
    if (cfg.channel.kind == ChannelKind::NonlinearQam) cfg.channel.noise_std = cfg.channel.qam.noise_std;
    f.number("channel", "noise_std", cfg.channel.noise_std);
    cfg.channel.qam.noise_std = cfg.channel.noise_std;
    f.number("channel", "dof", cfg.channel.dof);
    f.number("channel", "phase_offset", cfg.channel.qam.phase_offset);
    f.number("channel", "phase_noise_std", cfg.channel.qam.phase_noise_std);
    f.number("channel", "amam_alpha", cfg.channel.qam.amam_alpha);
    f.number("channel", "amam_beta", cfg.channel.qam.amam_beta);
    f.number("channel", "ampm_alpha", cfg.channel.qam.ampm_alpha);
    f.number("channel", "ampm_beta", cfg.channel.qam.ampm_beta);

    if (auto v = f.text("train", "objective")) {
        auto o = parse_objective(*v);
        if (!o) throw ConfigError("train.objective: unknown objective '" + *v + "' (mse, gan, wgan)");
        cfg.train.objective = *o;
    }
    f.number("train", "learning_rate", cfg.train.learning_rate);
    f.number("train", "disc_learning_rate", cfg.train.disc_learning_rate);
    f.number("train", "batch_size", cfg.train.batch_size);
    f.number("train", "iterations", cfg.train.iterations);
    f.number("train", "wgan_clip", cfg.train.wgan_clip);
    f.flag("train", "non_saturating", cfg.train.non_saturating);
    f.number("train", "n_critic", cfg.train.n_critic);
    f.number("train", "latent_dim", cfg.train.latent_dim);
    f.number("train", "snapshot_every", cfg.train.snapshot_every);
    f.number("train", "ema_decay", cfg.train.ema_decay);

    if (cfg.channel.dim() == 2) cfg.eval.range = {-2.0, 2.0};
    f.number("eval", "samples", cfg.eval.samples);
    f.number("eval", "bins", cfg.eval.bins);
    f.number("eval", "range_lo", cfg.eval.range.lo);
    f.number("eval", "range_hi", cfg.eval.range.hi);

    cfg.apply_seed(seed);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_experiment_config(in);
}

void write_experiment_config(std::ostream& out, const ExperimentConfig& c) {
    out << "[experiment]\n"
        << "name = " << c.name << "\n"
        << "seed = " << c.seed << "\n"
        << "output_dir = " << c.output_dir.string() << "\n\n"
        << "[modulation]\n"
        << "kind = " << to_string(c.modulation) << "\n\n"
        << "[channel]\n"
        << "kind = " << to_string(c.channel.kind) << "\n";
    switch (c.channel.kind) {
    case ChannelKind::Awgn:
    case ChannelKind::ComplexAwgn: out << "noise_std = " << num(c.channel.noise_std) << "\n"; break;
    case ChannelKind::AdditiveChi2: out << "dof = " << c.channel.dof << "\n"; break;
    case ChannelKind::NonlinearQam:
        out << "noise_std = " << num(c.channel.qam.noise_std) << "\n"
            << "phase_offset = " << num(c.channel.qam.phase_offset) << "\n"
            << "phase_noise_std = " << num(c.channel.qam.phase_noise_std) << "\n"
            << "amam_alpha = " << num(c.channel.qam.amam_alpha) << "\n"
            << "amam_beta = " << num(c.channel.qam.amam_beta) << "\n"
            << "ampm_alpha = " << num(c.channel.qam.ampm_alpha) << "\n"
            << "ampm_beta = " << num(c.channel.qam.ampm_beta) << "\n";
        break;
    }
    out << "\n[train]\n"
        << "objective = " << to_string(c.train.objective) << "\n"
        << "learning_rate = " << num(c.train.learning_rate) << "\n"
        << "disc_learning_rate = " << num(c.train.disc_learning_rate) << "\n"
        << "batch_size = " << c.train.batch_size << "\n"
        << "iterations = " << c.train.iterations << "\n"
        << "wgan_clip = " << num(c.train.wgan_clip) << "\n"
        << "non_saturating = " << (c.train.non_saturating ? "true" : "false") << "\n"
        << "n_critic = " << c.train.n_critic << "\n"
        << "latent_dim = " << c.train.latent_dim << "\n"
        << "snapshot_every = " << c.train.snapshot_every << "\n"
        << "ema_decay = " << num(c.train.ema_decay) << "\n\n"
        << "[eval]\n"
        << "samples = " << c.eval.samples << "\n"
        << "bins = " << c.eval.bins << "\n"
        << "range_lo = " << num(c.eval.range.lo) << "\n"
        << "range_hi = " << num(c.eval.range.hi) << "\n";
}

std::vector<PresetInfo> list_presets() {
    return {
        {"bpsk-awgn-mse", 3, "BPSK over AWGN(1.0), deterministic regression: collapses to conditional means"},
        {"bpsk-awgn-gan", 5, "BPSK over AWGN(1.0), variational GAN: recovers mean and variance"},
        {"bpsk-chi2-gan", 6, "BPSK plus additive chi-squared(2) noise, variational GAN"},
        {"qpsk-awgn-gan", 7, "QPSK over complex AWGN (0.1 per dim), variational GAN, 2-D marginal"},
        {"qam16-nonlinear-gan", 8, "16-QAM through Saleh amplifier, phase offset/noise and AWGN, variational GAN"},
        {"qam16-nonlinear-wgan", std::nullopt, "16-QAM nonlinear channel trained with the weight-clipped WGAN critic"},
    };
}

ExperimentConfig preset(std::string_view name) {
    ExperimentConfig c;
    c.name = std::string(name);
    c.output_dir = std::filesystem::path("runs") / c.name;
    c.train.snapshot_every = 500;
    if (name == "bpsk-awgn-mse" || name == "bpsk-awgn-gan") {
        c.modulation = Modulation::Bpsk;
        c.channel = ChannelModel::awgn(1.0);
        c.train.objective = name == "bpsk-awgn-mse" ? Objective::Mse : Objective::Gan;
        c.train.iterations = name == "bpsk-awgn-mse" ? 10000 : 20000;
        c.eval.range = {-6.0, 6.0};
    } else if (name == "bpsk-chi2-gan") {
        c.modulation = Modulation::Bpsk;
        c.channel = ChannelModel::chi2(2);
        c.train.iterations = 20000;
        c.eval.range = {-4.0, 16.0};
    } else if (name == "qpsk-awgn-gan") {
        c.modulation = Modulation::Qpsk;
        c.channel = ChannelModel::complex_awgn(0.1);
        c.train.iterations = 10000;
        c.train.n_critic = 5;
        c.eval.range = {-2.0, 2.0};
    } else if (name == "qam16-nonlinear-gan" || name == "qam16-nonlinear-wgan") {
        c.modulation = Modulation::Qam16;
        c.channel = ChannelModel::nonlinear_qam(NonlinearQamParams{});
        c.channel.noise_std = c.channel.qam.noise_std;
        c.train.objective = name == "qam16-nonlinear-gan" ? Objective::Gan : Objective::Wgan;
        c.train.iterations = 20000;
        c.train.n_critic = 5;
        if (c.train.objective == Objective::Wgan) c.train.learning_rate = 1e-4;
        c.eval.range = {-2.0, 2.0};
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
    if (c.train.objective != Objective::Mse) c.train.ema_decay = 0.999;
    c.apply_seed(1);
    c.validate();
    return c;
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, const LogFn& log,
                                 const std::function<void(const LayerStack&)>& on_discriminator_step) {
    config.validate();
    const SymbolSource source = make_source(config.modulation);
    ExperimentOutcome outcome;

    TrainHooks hooks;
    hooks.divergence = [&](LayerStack& gen) {
        return snapshot_divergence(gen, config.channel, source, derive_seed(config.seed, 30));
    };
    hooks.discriminator_step = on_discriminator_step;
    if (log) {
        hooks.progress = [&](const IterationRecord& r) {
            if ((r.iteration + 1) % 1000 != 0) return;
            std::ostringstream line;
            line << config.name << " iter " << (r.iteration + 1) << "/" << config.train.iterations;
            if (r.d_loss) line << " d_loss " << std::setprecision(4) << *r.d_loss;
            line << " g_loss " << std::setprecision(4) << r.g_loss;
            if (r.divergence) line << " w1 " << std::setprecision(4) << *r.divergence;
            log(line.str());
        };
    }

    const auto t0 = std::chrono::steady_clock::now();
    outcome.training = train(config.channel, source, config.train, hooks);
    const auto t1 = std::chrono::steady_clock::now();
    outcome.report = compare_model(outcome.training.generator, config.channel, source, config.eval);
    const auto t2 = std::chrono::steady_clock::now();
    outcome.train_seconds = std::chrono::duration<double>(t1 - t0).count();
    outcome.eval_seconds = std::chrono::duration<double>(t2 - t1).count();
    outcome.report_json = report_to_json(outcome.report, config.name, std::string(to_string(config.train.objective)));

    if (config.output_dir.empty()) return outcome;
    const auto& dir = config.output_dir;
    std::filesystem::create_directories(dir);
    {
        std::ostringstream echo;
        write_experiment_config(echo, config);
        write_text_file(dir / "config_echo", echo.str());
    }
    {
        std::ostringstream hist;
        write_history_csv(hist, outcome.training.history);
        write_text_file(dir / "history.csv", hist.str());
    }
    save_stack_file(dir / "model.bin", outcome.training.generator, config.seed);
    write_text_file(dir / "report.json", outcome.report_json);
    auto write_density = [&](const std::string& file, const DensityEstimate& d) {
        std::ostringstream s;
        write_density_csv(s, d);
        write_text_file(dir / file, s.str());
    };
    write_density("density_true_marginal.csv", outcome.report.marginal_truth);
    write_density("density_model_marginal.csv", outcome.report.marginal_model);
    for (std::size_t c = 0; c < outcome.report.conditions.size(); ++c) {
        write_density("density_true_c" + std::to_string(c) + ".csv", outcome.report.conditions[c].truth_density);
        write_density("density_model_c" + std::to_string(c) + ".csv", outcome.report.conditions[c].model_density);
    }
    if (log) log(config.name + ": wrote results to " + dir.string());
    return outcome;
}

RunComparison compare_runs(const std::string& report_a_json, const std::string& report_b_json) {
    nlohmann::json a, b;
    try {
        a = nlohmann::json::parse(report_a_json);
        b = nlohmann::json::parse(report_b_json);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
    RunComparison cmp;
    try {
        if (a.at("modulation") != b.at("modulation") || a.at("channel") != b.at("channel"))
            throw ConfigError("reports describe different modulation/channel settings");
        cmp.a = summarize(a);
        cmp.b = summarize(b);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("report is missing fields: ") + e.what());
    }
    cmp.delta.experiment = "delta";
    cmp.delta.objective = "";
    cmp.delta.marginal_js = cmp.b.marginal_js - cmp.a.marginal_js;
    cmp.delta.mean_condition_js = cmp.b.mean_condition_js - cmp.a.mean_condition_js;
    cmp.delta.marginal_kl = cmp.b.marginal_kl - cmp.a.marginal_kl;
    cmp.delta.mean_abs_mean_error = cmp.b.mean_abs_mean_error - cmp.a.mean_abs_mean_error;
    cmp.delta.mean_std_ratio = cmp.b.mean_std_ratio - cmp.a.mean_std_ratio;
    return cmp;
}

RunComparison compare_run_files(const std::filesystem::path& a, const std::filesystem::path& b) {
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) throw ConfigError("cannot open report " + p.string());
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    };
    return compare_runs(slurp(a), slurp(b));
}

void print_comparison(std::ostream& out, const RunComparison& cmp) {
    auto row = [&out](const RunSummary& s) {
        out << std::left << std::setw(24) << s.experiment << std::setw(8) << s.objective << std::right
            << std::fixed << std::setprecision(5) << std::setw(12) << s.marginal_js << std::setw(12)
            << s.mean_condition_js << std::setw(12) << s.marginal_kl << std::setw(12) << s.mean_abs_mean_error
            << std::setw(12) << s.mean_std_ratio << '\n';
    };
    out << std::left << std::setw(24) << "run" << std::setw(8) << "obj" << std::right << std::setw(12) << "js_marg"
        << std::setw(12) << "js_cond" << std::setw(12) << "kl_marg" << std::setw(12) << "|mean_err|" << std::setw(12)
        << "std_ratio" << '\n';
    row(cmp.a);
    row(cmp.b);
    row(cmp.delta);
    out.unsetf(std::ios::fixed);
}

} // namespace vcgan
