#include "qkdd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "qkdd/seeding.hpp"

namespace qkdd {

std::string_view to_string(KernelKind kind)
{
    return kind == KernelKind::eqk ? "EQK" : "RDM";
}

KernelKind kernel_kind_from_string(std::string_view s)
{
    if (s == "EQK" || s == "eqk") return KernelKind::eqk;
    if (s == "RDM" || s == "rdm") return KernelKind::rdm;
    throw ConfigError("unknown kernel kind '" + std::string(s) + "' (expected EQK or RDM)");
}

namespace {

// Re Tr{a b^dagger} accumulated in a fixed order; equals Tr{a b} for Hermitian
// b and is exactly symmetric because each term is.
double hs_overlap(const CMatrix& a, const CMatrix& b)
{
    double acc = 0.0;
    const cplx* pa = a.data();
    const cplx* pb = b.data();
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        acc += pa[k].real() * pb[k].real() + pa[k].imag() * pb[k].imag();
    }
    return acc;
}

template <typename State>
GramMatrix gram_parallel(std::span<const State> states, KernelKind kind, double (*kernel)(const State&, const State&))
{
    if (states.empty()) throw DimensionError("gram: empty state list");
    const auto n = static_cast<Eigen::Index>(states.size());
    GramMatrix g{RMatrix(n, n), kind, states.front().n_qubits()};
    for (const auto& s : states) {
        if (s.n_qubits() != g.n_qubits) throw DimensionError("gram: heterogeneous qubit counts");
    }
#pragma omp parallel for schedule(dynamic, 4) num_threads(worker_count())
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double k = kernel(states[static_cast<std::size_t>(i)], states[static_cast<std::size_t>(j)]);
            g.entries(i, j) = k;
            g.entries(j, i) = k;
        }
    }
    return g;
}

template <typename State>
RMatrix cross_parallel(std::span<const State> test, std::span<const State> train,
                       double (*kernel)(const State&, const State&))
{
    const auto nt = static_cast<Eigen::Index>(test.size());
    const auto nr = static_cast<Eigen::Index>(train.size());
    RMatrix rows(nt, nr);
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (Eigen::Index t = 0; t < nt; ++t) {
        for (Eigen::Index i = 0; i < nr; ++i) {
            rows(t, i) = kernel(test[static_cast<std::size_t>(t)], train[static_cast<std::size_t>(i)]);
        }
    }
    return rows;
}

}  // namespace

double eqk(const DensityMatrix& a, const DensityMatrix& b)
{
    if (a.n_qubits() != b.n_qubits()) throw DimensionError("eqk: qubit counts differ");
    return hs_overlap(a.entries(), b.entries());
}

double rdm_kernel(const RdmVector& a, const RdmVector& b)
{
    if (a.n_qubits() != b.n_qubits()) throw DimensionError("rdm_kernel: lengths differ");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.rdms().size(); ++k) acc += hs_overlap(a[k].entries(), b[k].entries());
    return acc / a.n_qubits();
}

GramMatrix gram(std::span<const DensityMatrix> states)
{
    return gram_parallel<DensityMatrix>(states, KernelKind::eqk, &eqk);
}

GramMatrix gram(std::span<const RdmVector> states)
{
    return gram_parallel<RdmVector>(states, KernelKind::rdm, &rdm_kernel);
}

GramMatrix gram(std::span<const FeatureState> states)
{
    if (states.empty()) throw DimensionError("gram: empty state list");
    const auto index = states.front().index();
    for (const auto& s : states) {
        if (s.index() != index) throw DimensionError("gram: mixed kernel kinds in one list");
    }
    if (index == 0) {
        std::vector<DensityMatrix> rhos;
        rhos.reserve(states.size());
        for (const auto& s : states) rhos.push_back(std::get<DensityMatrix>(s));
        return gram(std::span<const DensityMatrix>(rhos));
    }
    std::vector<RdmVector> rdms;
    rdms.reserve(states.size());
    for (const auto& s : states) rdms.push_back(std::get<RdmVector>(s));
    return gram(std::span<const RdmVector>(rdms));
}

RMatrix cross_kernel(std::span<const DensityMatrix> test, std::span<const DensityMatrix> train)
{
    return cross_parallel<DensityMatrix>(test, train, &eqk);
}

RMatrix cross_kernel(std::span<const RdmVector> test, std::span<const RdmVector> train)
{
    return cross_parallel<RdmVector>(test, train, &rdm_kernel);
}

// ---------------------------------------------------------------------------
// Shot noise

int eigenvalue_decimals(std::int64_t n_shots)
{
    if (n_shots < 1) throw ConfigError("shot noise: n_shots must be >= 1");
    const int d = static_cast<int>(std::floor(std::log10(static_cast<double>(n_shots) / 2.0)));
    return d < 0 ? 0 : d;
}

RMatrix psd_repair(const RMatrix& m, std::optional<int> decimals)
{
    Eigen::SelfAdjointEigenSolver<RMatrix> es(m);
    RVector lambda = es.eigenvalues().cwiseMax(0.0);
    if (decimals) {
        const double scale = std::pow(10.0, *decimals);
        for (Eigen::Index k = 0; k < lambda.size(); ++k) lambda(k) = std::round(lambda(k) * scale) / scale;
    }
    const RMatrix& v = es.eigenvectors();
    RMatrix out = v * lambda.asDiagonal() * v.transpose();
    return 0.5 * (out + out.transpose());
}

NoisyKernels apply_shot_noise(const GramMatrix& g, const std::optional<RMatrix>& test_rows,
                              const ShotNoiseConfig& cfg)
{
    if (!cfg.n_shots) return {g, test_rows};
    const std::int64_t shots = *cfg.n_shots;
    if (shots < 1) throw ConfigError("shot noise: n_shots must be >= 1");
    const double inv_shots = 1.0 / static_cast<double>(shots);

    auto perturb = [&](double k, std::uint64_t seed) {
        const double kc = std::clamp(k, 0.0, 1.0);
        const double variance = kc * (1.0 - kc) * inv_shots;
        if (variance <= 0.0) return k;
        Rng rng(seed);
        std::normal_distribution<double> normal(0.0, std::sqrt(variance));
        return k + normal(rng);
    };

    const Eigen::Index n = g.size();
    RMatrix noisy = g.entries;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = perturb(g.entries(i, j), entry_seed(cfg.seed, static_cast<std::uint64_t>(i),
                                                                 static_cast<std::uint64_t>(j)));
            noisy(i, j) = v;
            noisy(j, i) = v;
        }
    }

    NoisyKernels out{{psd_repair(noisy, eigenvalue_decimals(shots)), g.kind, g.n_qubits}, std::nullopt};
    if (test_rows) {
        RMatrix rows = *test_rows;
        const std::uint64_t row_seed = mix64(cfg.seed ^ hash_tag("test-rows"));
        for (Eigen::Index t = 0; t < rows.rows(); ++t) {
            for (Eigen::Index j = 0; j < rows.cols(); ++j) {
                rows(t, j) = perturb(rows(t, j), entry_seed(row_seed, static_cast<std::uint64_t>(t),
                                                            static_cast<std::uint64_t>(j)));
            }
        }
        out.test_rows = std::move(rows);
    }
    return out;
}

void write_gram_csv(std::ostream& out, const GramMatrix& g)
{
    out << "# " << to_string(g.kind) << ',' << g.n_qubits << ',' << g.size() << '\n';
    out.precision(17);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        for (Eigen::Index j = 0; j < g.size(); ++j) {
            if (j) out << ',';
            out << g.entries(i, j);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Dual regression

KernelModel fit_kernel_model(const RMatrix& gram, const RVector& labels, double ridge, double rank_cutoff)
{
    if (gram.rows() != gram.cols() || gram.rows() != labels.size()) {
        throw DimensionError("fit_kernel_model: Gram matrix and labels disagree in size");
    }
    if (ridge < 0.0) throw ConfigError("fit_kernel_model: ridge must be non-negative");
    Eigen::SelfAdjointEigenSolver<RMatrix> es(gram);
    const RVector& lambda = es.eigenvalues();
    const double top = lambda.cwiseAbs().maxCoeff();
    if (top == 0.0 && ridge == 0.0) throw NumericalGuardError("fit_kernel_model: Gram matrix is zero");

    const RMatrix& v = es.eigenvectors();
    const RVector proj = v.transpose() * labels;
    RVector coef = RVector::Zero(lambda.size());
    int rank = 0;
    for (Eigen::Index k = 0; k < lambda.size(); ++k) {
        if (lambda(k) <= rank_cutoff * top) continue;
        coef(k) = proj(k) / (lambda(k) + ridge);
        ++rank;
    }
    return {v * coef, rank};
}

RVector predict_kernel(const KernelModel& model, const RMatrix& rows)
{
    if (rows.cols() != model.alpha.size()) throw DimensionError("predict_kernel: row length mismatch");
    return rows * model.alpha;
}

}  // namespace qkdd
