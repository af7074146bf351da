#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "qkdd/exp.hpp"
#include "qkdd/parallel.hpp"
#include "qkdd/rmt.hpp"
#include "qkdd/seeding.hpp"

namespace qkdd {

namespace {

DataMatrix encode_dataset(const FeatureMapSpec& spec, KernelKind kind, const Dataset& ds)
{
    std::vector<double> x(static_cast<std::size_t>(ds.dim()));
    auto row = [&](Eigen::Index i) {
        for (Eigen::Index k = 0; k < ds.dim(); ++k) x[static_cast<std::size_t>(k)] = ds.inputs(i, k);
        return encode_pure(spec, x);
    };
    if (kind == KernelKind::eqk) {
        std::vector<DensityMatrix> states;
        states.reserve(static_cast<std::size_t>(ds.size()));
        for (Eigen::Index i = 0; i < ds.size(); ++i) states.push_back(DensityMatrix::from_pure(row(i)));
        return build_data_matrix(states, ds.labels);
    }
    std::vector<RdmVector> states;
    states.reserve(static_cast<std::size_t>(ds.size()));
    for (Eigen::Index i = 0; i < ds.size(); ++i) states.push_back(reduce(row(i)));
    return build_data_matrix(states, ds.labels);
}

/// Inputs for one repetition: where training rows come from and the held-out
/// test set.
struct RepetitionData {
    Dataset pool;  ///< CSV only: the training pool after preprocessing
    Dataset test;
};

class SampleSource {
public:
    explicit SampleSource(const SweepConfig& cfg) : cfg_(cfg), spec_(feature_map(cfg))
    {
        if (cfg.dataset.kind == DatasetSource::Kind::csv) {
            raw_ = load_csv(cfg.dataset.path, cfg.dataset.label_column, cfg.dataset.task);
            if (!cfg.dataset.pca && raw_.dim() != spec_.n_features()) {
                throw ConfigError("config: dataset has " + std::to_string(raw_.dim()) +
                                  " feature columns but the feature map expects " +
                                  std::to_string(spec_.n_features()) + " (enable dataset.pca or set n_features)");
            }
            if (raw_.size() <= cfg.n_test) {
                throw ConfigError("config: dataset has " + std::to_string(raw_.size()) +
                                  " rows, not enough for n_test = " + std::to_string(cfg.n_test));
            }
        }
    }

    [[nodiscard]] const FeatureMapSpec& spec() const { return spec_; }
    [[nodiscard]] Task task() const
    {
        return cfg_.dataset.kind == DatasetSource::Kind::csv ? cfg_.dataset.task : Task::regression;
    }

    [[nodiscard]] RepetitionData prepare(int rep) const
    {
        const auto test_rep = static_cast<std::uint64_t>(cfg_.share_test_set ? 0 : rep);
        RepetitionData out;
        if (cfg_.dataset.kind == DatasetSource::Kind::synthetic) {
            out.test = synthetic(synthetic_spec(derive_seed(cfg_.seed, 0, test_rep, "test")), cfg_.n_test);
            return out;
        }
        const Eigen::Index n_pool = raw_.size() - cfg_.n_test;
        Split s = split(raw_, n_pool, cfg_.n_test, derive_seed(cfg_.seed, 0, test_rep, "split"));
        if (cfg_.dataset.pca) {
            const PcaTransform t = fit_pca(s.train, spec_.n_features());
            s.train = apply_pca(t, s.train);
            s.test = apply_pca(t, s.test);
        }
        out.pool = std::move(s.train);
        out.test = std::move(s.test);
        return out;
    }

    /// `count` fresh training inputs. CSV pools are drawn without replacement.
    [[nodiscard]] Dataset draw(const RepetitionData& rd, std::size_t count, std::uint64_t seed) const
    {
        if (cfg_.dataset.kind == DatasetSource::Kind::synthetic) {
            return synthetic(synthetic_spec(seed), static_cast<Eigen::Index>(count));
        }
        const auto n = static_cast<Eigen::Index>(count);
        if (n > rd.pool.size()) {
            throw ConfigError("sweep: N = " + std::to_string(count) + " exceeds the training pool of " +
                              std::to_string(rd.pool.size()) + " rows");
        }
        return split(rd.pool, n, 0, seed).train;
    }

    [[nodiscard]] DataMatrix encode(const Dataset& ds) const { return encode_dataset(spec_, cfg_.kernel, ds); }

private:
    [[nodiscard]] SyntheticSpec synthetic_spec(std::uint64_t seed) const
    {
        SyntheticSpec s = default_synthetic(spec_.n_features(), seed);
        if (!cfg_.dataset.weights.empty()) s.weights = cfg_.dataset.weights;
        return s;
    }

    const SweepConfig& cfg_;
    FeatureMapSpec spec_;
    Dataset raw_;
};

/// Per-repetition state shared by every grid cell of that repetition.
struct RepetitionContext {
    RepetitionData data;
    DataMatrix test;
    std::optional<RegressionSolution> m_star;
    std::optional<CMatrix> projector;  ///< V_k V_k^dagger for test projection
};

struct CellResult {
    double mse_test = 0.0;
    double mse_train = 0.0;
    double min_sigma = 0.0;
    std::optional<double> accuracy;
    std::optional<RVector> spectrum;
};

double mean_of(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

double accuracy(const RVector& predictions, const RVector& labels)
{
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        const double predicted = predictions(i) >= 0.0 ? 1.0 : -1.0;
        if (predicted == labels(i)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

bool needs_m_star(const SweepConfig& cfg)
{
    return cfg.mse_reference == MseReference::m_star ||
           (cfg.ablation && cfg.ablation->mode == AblationMode::residual_elimination);
}

RepetitionContext make_context(const SweepConfig& cfg, const SampleSource& source, int rep, int p)
{
    RepetitionContext ctx;
    ctx.data = source.prepare(rep);
    ctx.test = source.encode(ctx.data.test);
    const auto r = static_cast<std::uint64_t>(rep);
    auto reference_size = static_cast<std::size_t>(cfg.m_star_factor) * static_cast<std::size_t>(p);
    if (cfg.dataset.kind == DatasetSource::Kind::csv) {
        reference_size = std::min(reference_size, static_cast<std::size_t>(ctx.data.pool.size()));
    }

    if (needs_m_star(cfg)) {
        const Sampler sampler = [&](std::size_t count, std::uint64_t seed) {
            return source.encode(source.draw(ctx.data, count, seed));
        };
        ctx.m_star = estimate_expected_minimizer(sampler, reference_size, derive_seed(cfg.seed, 0, r, "m-star"),
                                                 cfg.rank_cutoff);
        if (cfg.ablation && cfg.ablation->mode == AblationMode::residual_elimination) {
            ctx.test.labels = predict_rows(*ctx.m_star, ctx.test.rows);
        }
    }
    if (cfg.ablation && cfg.ablation->mode == AblationMode::test_projection) {
        const DataMatrix reference =
            source.encode(source.draw(ctx.data, reference_size, derive_seed(cfg.seed, 0, r, "projection-ref")));
        const CMatrix basis = projection_basis(reference, cfg.ablation->n_modes_kept, cfg.rank_cutoff);
        ctx.projector = basis * basis.adjoint();
    }
    return ctx;
}

CellResult run_cell(const SweepConfig& cfg, const SampleSource& source, const RepetitionContext& ctx, int n_samples,
                    int rep)
{
    const auto r = static_cast<std::uint64_t>(rep);
    const auto n = static_cast<std::uint64_t>(n_samples);
    DataMatrix dm = source.encode(source.draw(ctx.data, static_cast<std::size_t>(n_samples),
                                              derive_seed(cfg.seed, n, r, "train")));
    if (ctx.m_star && cfg.ablation && cfg.ablation->mode == AblationMode::residual_elimination) {
        dm.labels = predict_rows(*ctx.m_star, dm.rows);
    }

    CellResult out;
    const SvdFactors primal = compute_svd(dm.rows, cfg.rank_cutoff);
    if (cfg.kernel == KernelKind::eqk && n_samples == dm.p) {
        if (primal.rank() != std::min<Eigen::Index>(n_samples, dm.p)) {
            throw NumericalGuardError("full-rank guard: data matrix at N = p = " + std::to_string(dm.p) +
                                      " has rank " + std::to_string(primal.rank()) +
                                      "; the feature map does not span the operator space, try a larger n_layers");
        }
    }
    out.min_sigma = primal.rank() ? primal.sigma(primal.rank() - 1) : 0.0;
    if (cfg.write_spectra && rep == 0) out.spectrum = empirical_spectrum(dm, true).eigenvalues;

    if (cfg.ablation && cfg.ablation->mode == AblationMode::sv_cutoff) dm = ablate_sv_cutoff(dm, cfg.ablation->cutoff);

    CMatrix test_rows = ctx.test.rows;
    if (ctx.projector) test_rows = test_rows * (*ctx.projector);

    RVector train_pred;
    RVector test_pred;
    if (cfg.n_shots) {
        const GramMatrix k{(dm.rows * dm.rows.adjoint()).real(), cfg.kernel, dm.n_qubits};
        const RMatrix k_test = (test_rows * dm.rows.adjoint()).real();
        const NoisyKernels noisy =
            apply_shot_noise(k, k_test, {cfg.n_shots, derive_seed(cfg.seed, n, r, "shots")});
        const KernelModel model = fit_kernel_model(noisy.gram.entries, dm.labels, cfg.ridge);
        train_pred = predict_kernel(model, noisy.gram.entries);
        test_pred = predict_kernel(model, *noisy.test_rows);
    } else {
        const RegressionSolution sol = solve(dm, cfg.ridge, cfg.rank_cutoff);
        train_pred = predict_rows(sol, dm.rows);
        test_pred = predict_rows(sol, test_rows);
    }

    out.mse_train = mse(train_pred, dm.labels);
    if (cfg.mse_reference == MseReference::m_star) {
        out.mse_test = mse(test_pred, predict_rows(*ctx.m_star, test_rows));
    } else {
        out.mse_test = mse(test_pred, ctx.test.labels);
    }
    if (source.task() == Task::binary) out.accuracy = accuracy(test_pred, ctx.test.labels);
    return out;
}

}  // namespace

DataMatrix draw_training(const SweepConfig& cfg, int n_samples, int repetition)
{
    validate(cfg);
    if (n_samples < 1) throw ConfigError("draw_training: N must be positive");
    const SampleSource source(cfg);
    const RepetitionData rd = source.prepare(repetition);
    return source.encode(source.draw(rd, static_cast<std::size_t>(n_samples),
                                     derive_seed(cfg.seed, static_cast<std::uint64_t>(n_samples),
                                                 static_cast<std::uint64_t>(repetition), "train")));
}

double peak_height(const std::vector<CurvePoint>& points)
{
    if (points.empty()) return 0.0;
    std::vector<double> v;
    v.reserve(points.size());
    for (const auto& pt : points) v.push_back(pt.mse_test_mean);
    const double top = *std::max_element(v.begin(), v.end());
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    const double median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    return top - median;
}

SweepResult run_sweep(const SweepConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    validate(cfg);
    const SampleSource source(cfg);
    const int p = effective_dimension(cfg);
    const std::vector<int> grid = cfg.n_grid.empty() ? default_n_grid(p) : cfg.n_grid;
    const auto reps = static_cast<std::size_t>(cfg.repetitions);

    std::vector<RepetitionContext> contexts(reps);
    parallel_for_index(reps, [&](std::size_t r) { contexts[r] = make_context(cfg, source, static_cast<int>(r), p); });

    std::vector<CellResult> cells(grid.size() * reps);
    parallel_for_index(cells.size(), [&](std::size_t idx) {
        const std::size_t g = idx / reps;
        const std::size_t r = idx % reps;
        cells[idx] = run_cell(cfg, source, contexts[r], grid[g], static_cast<int>(r));
    });

    SweepResult result;
    result.p_effective = p;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<double> test;
        std::vector<double> train;
        std::vector<double> sigma;
        std::vector<double> acc;
        for (std::size_t r = 0; r < reps; ++r) {
            const CellResult& c = cells[g * reps + r];
            test.push_back(c.mse_test);
            train.push_back(c.mse_train);
            sigma.push_back(c.min_sigma);
            if (c.accuracy) acc.push_back(*c.accuracy);
            if (c.spectrum) result.spectra.push_back({grid[g], *c.spectrum});
        }
        CurvePoint pt;
        pt.n_samples = grid[g];
        pt.ratio = static_cast<double>(grid[g]) / static_cast<double>(p);
        pt.mse_test_mean = mean_of(test);
        pt.mse_test_std = population_std(test);
        pt.mse_train_mean = mean_of(train);
        pt.min_sigma_mean = mean_of(sigma);
        if (!acc.empty()) pt.accuracy_mean = mean_of(acc);
        result.points.push_back(pt);
    }

    const auto peak = std::max_element(result.points.begin(), result.points.end(),
                                       [](const CurvePoint& a, const CurvePoint& b) {
                                           return a.mse_test_mean < b.mse_test_mean;
                                       });
    result.peak_n = peak->n_samples;
    result.peak_height = peak_height(result.points);
    result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

void write_curve_csv(std::ostream& out, const SweepResult& result)
{
    const bool with_accuracy =
        !result.points.empty() && std::all_of(result.points.begin(), result.points.end(),
                                              [](const CurvePoint& pt) { return pt.accuracy_mean.has_value(); });
    out << "N,ratio,mse_test_mean,mse_test_std,mse_train_mean,min_sigma_mean";
    if (with_accuracy) out << ",accuracy_mean";
    out << '\n';
    out.precision(17);
    for (const auto& pt : result.points) {
        out << pt.n_samples << ',' << pt.ratio << ',' << pt.mse_test_mean << ',' << pt.mse_test_std << ','
            << pt.mse_train_mean << ',' << pt.min_sigma_mean;
        if (with_accuracy) out << ',' << *pt.accuracy_mean;
        out << '\n';
    }
}

void write_spectrum_csv(std::ostream& out, const SpectrumRecord& spectrum, int p)
{
    const MpLaw law(static_cast<double>(p) / static_cast<double>(spectrum.n_samples));
    std::vector<double> x(spectrum.eigenvalues.data(), spectrum.eigenvalues.data() + spectrum.eigenvalues.size());
    std::vector<double> f;
    f.reserve(x.size());
    for (double v : x) f.push_back(v > 0.0 ? mp_density(law, v) : 0.0);
    write_xy_csv(out, x, f);
}

nlohmann::json summary_json(const SweepConfig& cfg, const SweepResult& result)
{
    return {{"config", to_json(cfg)},
            {"p_effective", result.p_effective},
            {"peak_n", result.peak_n},
            {"peak_height", result.peak_height},
            {"runtime_seconds", result.runtime_seconds}};
}

}  // namespace qkdd
