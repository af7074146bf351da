#include <algorithm>
#include <cmath>
#include <set>

#include "qkdd/exp.hpp"

namespace qkdd {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys{
        "dataset.kind",           "dataset.weights",       "dataset.path",          "dataset.label_col",
        "dataset.task",           "dataset.pca",           "feature_map.n_qubits",  "feature_map.n_features",
        "feature_map.n_layers",   "feature_map.generator", "feature_map.entangler", "kernel",
        "n_grid",                 "n_test",                "repetitions",           "ridge",
        "n_shots",                "ablation.mode",         "ablation.cutoff",       "ablation.n_modes_kept",
        "seed",                   "share_test_set",        "rank_cutoff",           "m_star_factor",
        "mse_reference",          "write_spectra",
    };
    return keys;
}

void reject_unknown(const json& j, const std::string& prefix)
{
    for (const auto& [key, value] : j.items()) {
        const std::string dotted = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) {
            reject_unknown(value, dotted);
        } else if (!known_keys().contains(dotted)) {
            throw ConfigError("config: unknown key '" + dotted + "'");
        }
    }
}

}  // namespace

std::string_view to_string(AblationMode m)
{
    switch (m) {
    case AblationMode::sv_cutoff: return "sv_cutoff";
    case AblationMode::test_projection: return "test_projection";
    case AblationMode::residual_elimination: return "residual_elimination";
    }
    return "?";
}

AblationMode ablation_mode_from_string(std::string_view s)
{
    if (s == "sv_cutoff") return AblationMode::sv_cutoff;
    if (s == "test_projection") return AblationMode::test_projection;
    if (s == "residual_elimination") return AblationMode::residual_elimination;
    throw ConfigError("unknown ablation mode '" + std::string(s) + "'");
}

int resolved_features(const SweepConfig& cfg)
{
    if (cfg.n_features > 0) return cfg.n_features;
    return cfg.dataset.kind == DatasetSource::Kind::synthetic ? cfg.n_qubits : 2 * cfg.n_qubits;
}

FeatureMapSpec feature_map(const SweepConfig& cfg)
{
    return FeatureMapSpec::make(cfg.n_qubits, resolved_features(cfg), cfg.n_layers, cfg.generator, cfg.entangler);
}

int effective_dimension(const SweepConfig& cfg)
{
    return feature_dimension(cfg.kernel, cfg.n_qubits);
}

std::vector<int> default_n_grid(int p)
{
    std::set<int> grid;
    const int lo = std::max(1, p / 8);
    const int hi = 4 * p;
    for (double n = lo; n < hi; n *= 1.5) grid.insert(static_cast<int>(std::lround(n)));
    grid.insert(hi);
    const int step = std::max(1, p / 16);
    const int band_lo = std::max(1, static_cast<int>(std::floor(0.75 * p)));
    const int band_hi = static_cast<int>(std::ceil(1.25 * p));
    for (int n = band_lo; n <= band_hi; n += step) grid.insert(n);
    grid.insert(p);
    return {grid.begin(), grid.end()};
}

void validate(const SweepConfig& cfg)
{
    if (cfg.n_qubits < 1 || cfg.n_qubits > 6) throw ConfigError("config: n_qubits must be in [1, 6]");
    if (cfg.n_layers < 1) throw ConfigError("config: n_layers must be positive");
    if (cfg.repetitions < 1) throw ConfigError("config: repetitions must be >= 1");
    if (cfg.n_test < 1) throw ConfigError("config: n_test must be >= 1");
    if (cfg.ridge < 0.0) throw ConfigError("config: ridge must be non-negative");
    if (cfg.rank_cutoff < 0.0) throw ConfigError("config: rank_cutoff must be non-negative");
    if (cfg.m_star_factor < 1) throw ConfigError("config: m_star_factor must be positive");
    if (cfg.n_shots && *cfg.n_shots < 1) throw ConfigError("config: n_shots must be >= 1");
    for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) {
        if (cfg.n_grid[k] < 1) throw ConfigError("config: grid sizes must be positive");
        if (k && cfg.n_grid[k] <= cfg.n_grid[k - 1]) throw ConfigError("config: n_grid must be strictly increasing");
    }
    if (cfg.dataset.kind == DatasetSource::Kind::synthetic && !cfg.dataset.weights.empty() &&
        static_cast<int>(cfg.dataset.weights.size()) != resolved_features(cfg)) {
        throw ConfigError("config: synthetic weights must have one entry per feature");
    }
    if (cfg.dataset.kind == DatasetSource::Kind::csv && (cfg.dataset.path.empty() || cfg.dataset.label_column.empty())) {
        throw ConfigError("config: csv datasets need dataset.path and dataset.label_col");
    }
    if (cfg.ablation) {
        if (cfg.ablation->mode == AblationMode::sv_cutoff && cfg.ablation->cutoff < 0.0) {
            throw ConfigError("config: ablation.cutoff must be non-negative");
        }
        if (cfg.ablation->mode == AblationMode::test_projection && cfg.ablation->n_modes_kept < 1) {
            throw ConfigError("config: ablation.n_modes_kept must be >= 1");
        }
    }
    (void)feature_map(cfg);
}

nlohmann::json to_json(const SweepConfig& cfg)
{
    json ds{{"kind", cfg.dataset.kind == DatasetSource::Kind::synthetic ? "synthetic" : "csv"}};
    if (cfg.dataset.kind == DatasetSource::Kind::synthetic) {
        ds["weights"] = cfg.dataset.weights;
    } else {
        ds["path"] = cfg.dataset.path;
        ds["label_col"] = cfg.dataset.label_column;
        ds["task"] = std::string(to_string(cfg.dataset.task));
        ds["pca"] = cfg.dataset.pca;
    }
    json j{{"dataset", ds},
           {"feature_map",
            {{"n_qubits", cfg.n_qubits},
             {"n_features", resolved_features(cfg)},
             {"n_layers", cfg.n_layers},
             {"generator", cfg.generator},
             {"entangler", cfg.entangler}}},
           {"kernel", std::string(to_string(cfg.kernel))},
           {"n_grid", cfg.n_grid},
           {"n_test", cfg.n_test},
           {"repetitions", cfg.repetitions},
           {"ridge", cfg.ridge},
           {"n_shots", cfg.n_shots ? json(*cfg.n_shots) : json(nullptr)},
           {"seed", cfg.seed},
           {"share_test_set", cfg.share_test_set},
           {"rank_cutoff", cfg.rank_cutoff},
           {"m_star_factor", cfg.m_star_factor},
           {"mse_reference", cfg.mse_reference == MseReference::labels ? "labels" : "m_star"},
           {"write_spectra", cfg.write_spectra}};
    if (cfg.ablation) {
        j["ablation"] = {{"mode", std::string(to_string(cfg.ablation->mode))},
                         {"cutoff", cfg.ablation->cutoff},
                         {"n_modes_kept", cfg.ablation->n_modes_kept}};
    } else {
        j["ablation"] = nullptr;
    }
    return j;
}

SweepConfig sweep_config_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    reject_unknown(j, "");
    SweepConfig cfg;
    try {
        if (j.contains("dataset")) {
            const json& ds = j.at("dataset");
            const auto kind = ds.value("kind", std::string("synthetic"));
            if (kind == "synthetic") {
                cfg.dataset.kind = DatasetSource::Kind::synthetic;
            } else if (kind == "csv") {
                cfg.dataset.kind = DatasetSource::Kind::csv;
            } else {
                throw ConfigError("config: dataset.kind must be synthetic or csv");
            }
            cfg.dataset.weights = ds.value("weights", std::vector<double>{});
            cfg.dataset.path = ds.value("path", std::string{});
            cfg.dataset.label_column = ds.value("label_col", std::string{});
            cfg.dataset.task = task_from_string(ds.value("task", std::string("regression")));
            cfg.dataset.pca = ds.value("pca", true);
        }
        if (j.contains("feature_map")) {
            const json& fm = j.at("feature_map");
            cfg.n_qubits = fm.value("n_qubits", cfg.n_qubits);
            cfg.n_features = fm.value("n_features", 0);
            cfg.n_layers = fm.value("n_layers", cfg.n_layers);
            cfg.generator = fm.value("generator", cfg.generator);
            cfg.entangler = fm.value("entangler", cfg.entangler);
        }
        if (j.contains("kernel")) cfg.kernel = kernel_kind_from_string(j.at("kernel").get<std::string>());
        cfg.n_grid = j.value("n_grid", std::vector<int>{});
        cfg.n_test = j.value("n_test", cfg.n_test);
        cfg.repetitions = j.value("repetitions", cfg.repetitions);
        cfg.ridge = j.value("ridge", cfg.ridge);
        if (j.contains("n_shots") && !j.at("n_shots").is_null()) cfg.n_shots = j.at("n_shots").get<std::int64_t>();
        if (j.contains("ablation") && !j.at("ablation").is_null()) {
            const json& ab = j.at("ablation");
            AblationConfig a;
            a.mode = ablation_mode_from_string(ab.at("mode").get<std::string>());
            a.cutoff = ab.value("cutoff", 0.0);
            a.n_modes_kept = ab.value("n_modes_kept", 1);
            cfg.ablation = a;
        }
        cfg.seed = j.value("seed", cfg.seed);
        cfg.share_test_set = j.value("share_test_set", cfg.share_test_set);
        cfg.rank_cutoff = j.value("rank_cutoff", cfg.rank_cutoff);
        cfg.m_star_factor = j.value("m_star_factor", cfg.m_star_factor);
        const auto ref = j.value("mse_reference", std::string("labels"));
        if (ref == "labels") {
            cfg.mse_reference = MseReference::labels;
        } else if (ref == "m_star") {
            cfg.mse_reference = MseReference::m_star;
        } else {
            throw ConfigError("config: mse_reference must be labels or m_star");
        }
        cfg.write_spectra = j.value("write_spectra", cfg.write_spectra);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

std::vector<std::string> config_keys()
{
    return {known_keys().begin(), known_keys().end()};
}

void apply_override(nlohmann::json& doc, const std::string& dotted_key, const std::string& value)
{
    if (!known_keys().contains(dotted_key)) throw ConfigError("unknown option --" + dotted_key);
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted_key.find('.', start);
        const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (dot == std::string::npos) {
            (*node)[part] = parsed;
            return;
        }
        json& child = (*node)[part];
        if (!child.is_object()) child = json::object();
        node = &child;
        start = dot + 1;
    }
}

}  // namespace qkdd
