#include "qkdd/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "qkdd/exp.hpp"
#include "qkdd/rmt.hpp"

namespace qkdd {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Config file plus per-key overrides, registered as --<dotted.key> options.
struct ConfigOptions {
    std::string path;
    std::map<std::string, std::string> overrides;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--config", path, "JSON config file");
        for (const auto& key : config_keys()) cmd->add_option("--" + key, overrides[key], "override " + key);
    }

    [[nodiscard]] SweepConfig resolve(const CLI::App* cmd) const
    {
        json doc = json::object();
        if (!path.empty()) {
            std::ifstream in(path);
            if (!in) throw ConfigError("cannot read config '" + path + "'");
            doc = json::parse(in, nullptr, false);
            if (doc.is_discarded()) throw ConfigError("config '" + path + "' is not valid JSON");
        }
        for (const auto& [key, value] : overrides) {
            if (cmd->count("--" + key)) apply_override(doc, key, value);
        }
        return sweep_config_from_json(doc);
    }
};

fs::path prepare_out(const std::string& dir)
{
    const fs::path out(dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    return out;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    return f;
}

void write_sweep_outputs(const fs::path& dir, const std::string& stem, const SweepResult& result)
{
    {
        auto f = open_out(dir / (stem + ".csv"));
        write_curve_csv(f, result);
    }
    for (const auto& s : result.spectra) {
        auto f = open_out(dir / ("spectrum_N" + std::to_string(s.n_samples) + ".csv"));
        write_spectrum_csv(f, s, result.p_effective);
    }
}

int run_sweep_command(const ConfigOptions& opts, const CLI::App* cmd, const std::string& out_dir, std::ostream& out)
{
    const SweepConfig cfg = opts.resolve(cmd);
    const SweepResult result = run_sweep(cfg);
    const json summary = summary_json(cfg, result);
    if (!out_dir.empty()) {
        const fs::path dir = prepare_out(out_dir);
        write_sweep_outputs(dir, "curve", result);
        auto f = open_out(dir / "summary.json");
        f << summary.dump(2) << '\n';
    }
    out << summary.dump(2) << '\n';
    return 0;
}

int run_ablate_command(const ConfigOptions& opts, const CLI::App* cmd, const std::string& mode_text,
                       const std::vector<std::string>& values, const std::string& out_dir, std::ostream& out)
{
    SweepConfig base = opts.resolve(cmd);
    const AblationMode mode = ablation_mode_from_string(mode_text);
    std::vector<std::string> settings = values;
    if (mode == AblationMode::residual_elimination) {
        settings = {""};
    } else if (settings.empty()) {
        throw ConfigError("ablate: --values is required for mode " + mode_text);
    }

    const fs::path dir = out_dir.empty() ? fs::path{} : prepare_out(out_dir);
    json runs = json::array();
    for (const auto& v : settings) {
        SweepConfig cfg = base;
        AblationConfig ab;
        ab.mode = mode;
        try {
            if (mode == AblationMode::sv_cutoff) ab.cutoff = std::stod(v);
            if (mode == AblationMode::test_projection) ab.n_modes_kept = std::stoi(v);
        } catch (const std::exception&) {
            throw ConfigError("ablate: cannot parse value '" + v + "'");
        }
        cfg.ablation = ab;
        validate(cfg);
        const SweepResult result = run_sweep(cfg);
        json entry{{"peak_n", result.peak_n}, {"peak_height", result.peak_height},
                   {"runtime_seconds", result.runtime_seconds}};
        if (!v.empty()) entry["value"] = v;
        runs.push_back(entry);
        if (!out_dir.empty()) {
            const std::string stem = "curve_" + mode_text + (v.empty() ? "" : "_" + v);
            auto f = open_out(dir / (stem + ".csv"));
            write_curve_csv(f, result);
        }
    }
    json summary{{"mode", mode_text}, {"config", to_json(base)}, {"runs", runs}};
    if (!out_dir.empty()) {
        auto f = open_out(dir / "summary.json");
        f << summary.dump(2) << '\n';
    }
    out << summary.dump(2) << '\n';
    return 0;
}

int run_spectrum_command(const ConfigOptions& opts, const CLI::App* cmd, int n_samples, const std::string& out_dir,
                         std::ostream& out)
{
    const SweepConfig cfg = opts.resolve(cmd);
    const DataMatrix dm = draw_training(cfg, n_samples, 0);
    const SpectrumRecord record{n_samples, empirical_spectrum(dm, true).eigenvalues};
    const SvdFactors f = compute_svd(dm.rows, cfg.rank_cutoff);
    const MpLaw law(static_cast<double>(dm.p) / static_cast<double>(n_samples));
    json summary{{"N", n_samples},
                 {"p_effective", dm.p},
                 {"rank", f.rank()},
                 {"min_sigma", f.rank() ? f.sigma(f.rank() - 1) : 0.0},
                 {"lambda_max", record.eigenvalues.maxCoeff()},
                 {"mp_lambda_minus", law.lambda_minus},
                 {"mp_lambda_plus", law.lambda_plus}};
    if (!out_dir.empty()) {
        const fs::path dir = prepare_out(out_dir);
        auto file = open_out(dir / ("spectrum_N" + std::to_string(n_samples) + ".csv"));
        write_spectrum_csv(file, record, dm.p);
    }
    out << summary.dump(2) << '\n';
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Double-descent experiments with quantum kernels", "qkdd"};
    app.require_subcommand(1);

    std::string out_dir;

    auto* sweep = app.add_subcommand("sweep", "Run a test-error sweep over training-set sizes");
    ConfigOptions sweep_opts;
    sweep_opts.attach(sweep);
    sweep->add_option("--out", out_dir, "Output directory for curve.csv and summary.json");

    auto* ablate = app.add_subcommand("ablate", "Run a sweep per ablation setting");
    ConfigOptions ablate_opts;
    ablate_opts.attach(ablate);
    std::string mode;
    std::vector<std::string> values;
    ablate->add_option("--mode", mode, "sv_cutoff | test_projection | residual_elimination")->required();
    ablate->add_option("--values", values, "Comma-separated cutoffs or mode counts")->delimiter(',');
    ablate->add_option("--out", out_dir, "Output directory");

    auto* mp = app.add_subcommand("mp-check", "Compare a Gaussian sample spectrum with the Marchenko-Pastur law");
    long p = 200;
    long n = 200;
    std::uint64_t mp_seed = 1;
    int trials = 20;
    mp->add_option("--p", p, "Feature dimension")->check(CLI::PositiveNumber);
    mp->add_option("--n", n, "Number of samples")->check(CLI::PositiveNumber);
    mp->add_option("--seed", mp_seed, "Seed");
    mp->add_option("--trials", trials, "Independent trials")->check(CLI::PositiveNumber);

    auto* lip = app.add_subcommand("lipschitz-check", "Check the operator-norm Lipschitz bound on random pairs");
    std::string map_path;
    int pairs = 1000;
    std::uint64_t lip_seed = 1;
    lip->add_option("--spec", map_path, "Feature-map JSON")->required();
    lip->add_option("--pairs", pairs, "Number of random pairs")->check(CLI::PositiveNumber);
    lip->add_option("--seed", lip_seed, "Seed");

    auto* spectrum = app.add_subcommand("spectrum", "Export the spectrum of one training data matrix");
    ConfigOptions spectrum_opts;
    spectrum_opts.attach(spectrum);
    int spectrum_n = 0;
    spectrum->add_option("--N", spectrum_n, "Number of training samples")->required()->check(CLI::PositiveNumber);
    spectrum->add_option("--out", out_dir, "Output directory");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*sweep) return run_sweep_command(sweep_opts, sweep, out_dir, out);
        if (*ablate) return run_ablate_command(ablate_opts, ablate, mode, values, out_dir, out);
        if (*spectrum) return run_spectrum_command(spectrum_opts, spectrum, spectrum_n, out_dir, out);
        if (*mp) {
            const MpCheckReport r = mp_check(p, n, trials, mp_seed);
            out << json{{"p", p}, {"n", n}, {"trials", r.trials}, {"l1_distance", r.l1_distance},
                        {"mean_trial_l1", r.mean_trial_l1},
                        {"edge_fraction", r.edge_fraction}}
                       .dump(2)
                << '\n';
            return 0;
        }
        if (*lip) {
            std::ifstream in(map_path);
            if (!in) throw ConfigError("cannot read feature-map spec '" + map_path + "'");
            const json doc = json::parse(in, nullptr, false);
            if (doc.is_discarded()) throw ConfigError("feature-map spec '" + map_path + "' is not valid JSON");
            const FeatureMapSpec spec = feature_map_from_json(doc);
            const LipschitzReport r = verify_lipschitz(spec, pairs, lip_seed);
            json j = r;
            out << j.dump(2) << '\n';
            return 0;
        }
    } catch (const NumericalGuardError& e) {
        err << "numerical guard: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const DimensionError& e) {
        err << "invalid input: " << e.what() << '\n';
        return 1;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace qkdd
