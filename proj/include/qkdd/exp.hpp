#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "qkdd/data.hpp"
#include "qkdd/kernels.hpp"
#include "qkdd/qstate.hpp"
#include "qkdd/regress.hpp"

namespace qkdd {

// ---------------------------------------------------------------------------
// Configuration

struct DatasetSource {
    enum class Kind { synthetic, csv };
    Kind kind = Kind::synthetic;
    std::vector<double> weights;  ///< synthetic; empty means all ones
    std::string path;             ///< csv
    std::string label_column;     ///< csv
    Task task = Task::regression;
    bool pca = true;              ///< csv: project to n_features dims and rescale to angles
};

enum class AblationMode { sv_cutoff, test_projection, residual_elimination };

std::string_view to_string(AblationMode m);
AblationMode ablation_mode_from_string(std::string_view s);

struct AblationConfig {
    AblationMode mode = AblationMode::sv_cutoff;
    double cutoff = 0.0;    ///< sv_cutoff: absolute singular value threshold
    int n_modes_kept = 1;   ///< test_projection
};

enum class MseReference { labels, m_star };

struct SweepConfig {
    DatasetSource dataset;
    int n_qubits = 2;
    int n_features = 0;  ///< 0: n_qubits for synthetic data, 2 n_qubits for CSV data
    int n_layers = 4;
    std::string generator = "pauli-y-z";
    std::string entangler = "cnot-ring";
    KernelKind kernel = KernelKind::eqk;
    std::vector<int> n_grid;  ///< empty: default_n_grid(p)
    int n_test = 100;
    int repetitions = 5;
    double ridge = 0.0;
    std::optional<std::int64_t> n_shots;
    std::optional<AblationConfig> ablation;
    std::uint64_t seed = 1;
    bool share_test_set = false;
    double rank_cutoff = kDefaultRankCutoff;
    int m_star_factor = 10;  ///< M* and projection reference samples hold m_star_factor * p states
    MseReference mse_reference = MseReference::labels;
    bool write_spectra = false;
};

/// Resolved feature-map spec for a config.
FeatureMapSpec feature_map(const SweepConfig& cfg);
int resolved_features(const SweepConfig& cfg);
int effective_dimension(const SweepConfig& cfg);

/// Geometric grid over [p/8, 4p] merged with a dense band within 25% of p.
std::vector<int> default_n_grid(int p);

/// Throws ConfigError on any invariant violation (e.g. a non-increasing grid).
void validate(const SweepConfig& cfg);

nlohmann::json to_json(const SweepConfig& cfg);
SweepConfig sweep_config_from_json(const nlohmann::json& j);

/// Sets a dotted key such as "feature_map.n_layers" in a config document.
/// The value text is parsed as JSON when possible, else kept as a string.
/// Unknown keys throw ConfigError.
void apply_override(nlohmann::json& doc, const std::string& dotted_key, const std::string& value);

/// Every dotted key accepted in a config document.
std::vector<std::string> config_keys();

// ---------------------------------------------------------------------------
// Sweeps

struct CurvePoint {
    int n_samples = 0;
    double ratio = 0.0;
    double mse_test_mean = 0.0;
    double mse_test_std = 0.0;
    double mse_train_mean = 0.0;
    double min_sigma_mean = 0.0;
    std::optional<double> accuracy_mean;
};

struct SpectrumRecord {
    int n_samples = 0;
    RVector eigenvalues;  ///< D^dagger D / N, repetition 0
};

struct SweepResult {
    std::vector<CurvePoint> points;
    int p_effective = 0;
    int peak_n = 0;
    double peak_height = 0.0;
    double runtime_seconds = 0.0;
    std::vector<SpectrumRecord> spectra;  ///< filled when write_spectra is set
};

/// Runs every (N, repetition) cell and aggregates in grid order. Output is
/// identical for any worker count.
SweepResult run_sweep(const SweepConfig& cfg);

/// The training data matrix a sweep would use for (N, repetition), with true
/// labels and without ablations.
DataMatrix draw_training(const SweepConfig& cfg, int n_samples, int repetition);

/// max(mse_test_mean) - median(mse_test_mean).
double peak_height(const std::vector<CurvePoint>& points);

void write_curve_csv(std::ostream& out, const SweepResult& result);
nlohmann::json summary_json(const SweepConfig& cfg, const SweepResult& result);
/// Two columns (x, f): each eigenvalue of D^dagger D / N next to the
/// Marchenko-Pastur density at ratio p / N (0 at x <= 0).
void write_spectrum_csv(std::ostream& out, const SpectrumRecord& spectrum, int p);

// ---------------------------------------------------------------------------
// Ablations

/// Rebuilds D from its SVD with singular values below `cutoff` zeroed.
/// Throws NumericalGuardError when nothing survives.
DataMatrix ablate_sv_cutoff(const DataMatrix& dm, double cutoff);

/// Top `n_modes_kept` right singular vectors of a reference data matrix.
CMatrix projection_basis(const DataMatrix& reference, int n_modes_kept, double rank_cutoff = kDefaultRankCutoff);

/// Projects each test co-vector onto the span of the reference's leading right
/// singular vectors.
CMatrix ablate_test_projection(const CMatrix& test_rows, const DataMatrix& reference, int n_modes_kept,
                               double rank_cutoff = kDefaultRankCutoff);

/// Sweep with labels regenerated from an in-class observable so the residual
/// vector vanishes.
SweepResult ablate_residual(SweepConfig cfg);

}  // namespace qkdd
