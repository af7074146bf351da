#include "qkdd/regress.hpp"

#include <cmath>
#include <string>

namespace qkdd {

namespace {

void check_imaginary(double imag, double scale, const char* where)
{
    if (std::abs(imag) > 1e-10 * (1.0 + scale)) {
        throw NumericalGuardError(std::string(where) + ": prediction has imaginary part " + std::to_string(imag));
    }
}

template <typename State>
DataMatrix assemble(std::span<const State> states, const RVector& labels, KernelKind kind)
{
    if (states.empty()) throw DimensionError("build_data_matrix: no states");
    if (static_cast<Eigen::Index>(states.size()) != labels.size()) {
        throw DimensionError("build_data_matrix: " + std::to_string(states.size()) + " states but " +
                             std::to_string(labels.size()) + " labels");
    }
    const int n = states.front().n_qubits();
    const CVector first = feature_vector(states.front());
    DataMatrix dm{CMatrix(static_cast<Eigen::Index>(states.size()), first.size()), labels, kind, n,
                  feature_dimension(kind, n)};
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i].n_qubits() != n) throw DimensionError("build_data_matrix: heterogeneous state sizes");
        dm.rows.row(static_cast<Eigen::Index>(i)) = feature_vector(states[i]).adjoint();
    }
    return dm;
}

}  // namespace

std::string_view to_string(Regime r)
{
    switch (r) {
    case Regime::under: return "under";
    case Regime::over: return "over";
    case Regime::interpolation: return "interpolation";
    }
    return "?";
}

Regime classify_regime(Eigen::Index n_samples, Eigen::Index p)
{
    if (n_samples > p) return Regime::under;
    if (n_samples < p) return Regime::over;
    return Regime::interpolation;
}

int feature_dimension(KernelKind kind, int n_qubits)
{
    if (kind == KernelKind::eqk) return 1 << (2 * n_qubits);
    return 3 * n_qubits + 2;
}

CVector feature_vector(const DensityMatrix& rho)
{
    return vectorize(rho).components;
}

CVector feature_vector(const RdmVector& rdms)
{
    const int n = rdms.n_qubits();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    CVector v(4 * n);
    for (int k = 0; k < n; ++k) v.segment(4 * k, 4) = vectorize(rdms[static_cast<std::size_t>(k)]).components * scale;
    return v;
}

DataMatrix build_data_matrix(std::span<const DensityMatrix> states, const RVector& labels)
{
    return assemble(states, labels, KernelKind::eqk);
}

DataMatrix build_data_matrix(std::span<const RdmVector> states, const RVector& labels)
{
    return assemble(states, labels, KernelKind::rdm);
}

SvdFactors compute_svd(const CMatrix& d, double rank_cutoff)
{
    Eigen::JacobiSVD<CMatrix> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector& s = svd.singularValues();
    const double top = s.size() ? s(0) : 0.0;
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > rank_cutoff * top && s(rank) > 0.0) ++rank;

    SvdFactors f{svd.matrixU().leftCols(rank), s.head(rank), svd.matrixV().leftCols(rank)};
    for (Eigen::Index r = 0; r < rank; ++r) {
        Eigen::Index k = 0;
        f.u.col(r).cwiseAbs().maxCoeff(&k);
        const cplx phase = f.u(k, r) / std::abs(f.u(k, r));
        f.u.col(r) *= std::conj(phase);
        f.v.col(r) *= std::conj(phase);
    }
    return f;
}

RegressionSolution solve(const DataMatrix& dm, double ridge, double rank_cutoff)
{
    if (ridge < 0.0) throw ConfigError("solve: ridge must be non-negative");
    if (dm.labels.size() != dm.size()) throw DimensionError("solve: labels and rows disagree");
    if (dm.size() == 0 || dm.rows.cwiseAbs().maxCoeff() == 0.0) {
        throw NumericalGuardError("solve: data matrix is all zeros");
    }

    RegressionSolution sol;
    sol.svd = compute_svd(dm.rows, rank_cutoff);
    sol.ridge = ridge;
    sol.regime = classify_regime(dm.size(), dm.p);

    const CVector uy = sol.svd.u.adjoint() * dm.labels.cast<cplx>();
    RVector gain(sol.svd.rank());
    for (Eigen::Index r = 0; r < gain.size(); ++r) {
        const double s = sol.svd.sigma(r);
        gain(r) = ridge == 0.0 ? 1.0 / s : s / (s * s + ridge);
    }
    sol.observable = sol.svd.v * (gain.cast<cplx>().asDiagonal() * uy);
    return sol;
}

double predict(const RegressionSolution& sol, const CVector& features)
{
    if (features.size() != sol.observable.size()) throw DimensionError("predict: feature length mismatch");
    const cplx y = features.dot(sol.observable);
    check_imaginary(y.imag(), features.norm() * sol.observable.norm(), "predict");
    return y.real();
}

double predict(const RegressionSolution& sol, const DensityMatrix& rho)
{
    return predict(sol, feature_vector(rho));
}

double predict(const RegressionSolution& sol, const RdmVector& rdms)
{
    return predict(sol, feature_vector(rdms));
}

RVector predict_rows(const CVector& observable, const CMatrix& rows)
{
    if (rows.cols() != observable.size()) throw DimensionError("predict_rows: row length mismatch");
    const CVector y = rows * observable;
    if (y.size()) {
        const double scale = rows.rowwise().norm().maxCoeff() * observable.norm();
        check_imaginary(y.imag().cwiseAbs().maxCoeff(), scale, "predict_rows");
    }
    return y.real();
}

RVector predict_rows(const RegressionSolution& sol, const CMatrix& rows)
{
    return predict_rows(sol.observable, rows);
}

RegressionSolution estimate_expected_minimizer(const Sampler& sampler, std::size_t m_large, std::uint64_t seed,
                                               double rank_cutoff)
{
    if (m_large == 0) throw ConfigError("estimate_expected_minimizer: m_large must be positive");
    const DataMatrix dm = sampler(m_large, seed);
    if (static_cast<std::size_t>(dm.size()) < m_large) {
        throw ConfigError("estimate_expected_minimizer: sampler exhausted after " + std::to_string(dm.size()) +
                          " of " + std::to_string(m_large) + " samples");
    }
    return solve(dm, 0.0, rank_cutoff);
}

RVector residuals(const DataMatrix& dm, const RegressionSolution& m_star)
{
    return dm.labels - predict_rows(m_star, dm.rows);
}

ErrorDecomposition decompose_error(const RegressionSolution& sol, const RegressionSolution& m_star,
                                   const DataMatrix& dm, const CVector& test_features)
{
    if (sol.ridge != 0.0) throw ConfigError("decompose_error: requires an unregularized solution");
    if (sol.svd.rank() == 0 || sol.svd.u.rows() != dm.size()) {
        throw DimensionError("decompose_error: solution carries no SVD factors for this data matrix");
    }
    if (test_features.size() != sol.observable.size() || m_star.observable.size() != sol.observable.size()) {
        throw DimensionError("decompose_error: feature length mismatch");
    }

    ErrorDecomposition out;
    out.regime = sol.regime;
    const CVector e = residuals(dm, m_star).cast<cplx>();
    cplx variance{0.0, 0.0};
    out.modes.reserve(static_cast<std::size_t>(sol.svd.rank()));
    for (Eigen::Index r = 0; r < sol.svd.rank(); ++r) {
        const double inv = 1.0 / sol.svd.sigma(r);
        const cplx overlap = test_features.dot(sol.svd.v.col(r));
        const cplx proj = sol.svd.u.col(r).dot(e);
        variance += inv * overlap * proj;
        out.modes.push_back({inv, overlap.real(), proj.real()});
    }
    out.variance_like = variance.real();

    if (sol.regime != Regime::under) {
        const CVector& m = m_star.observable;
        const CVector projected = sol.svd.v * (sol.svd.v.adjoint() * m);
        out.bias_like = test_features.dot(projected - m).real();
    }
    out.total_diff = predict(sol, test_features) - predict(m_star, test_features);
    return out;
}

double mse(std::span<const double> predictions, std::span<const double> reference)
{
    if (predictions.size() != reference.size()) throw DimensionError("mse: length mismatch");
    if (predictions.empty()) throw DimensionError("mse: empty test set");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - reference[i];
        acc += d * d;
    }
    return acc / static_cast<double>(predictions.size());
}

double mse(const RVector& predictions, const RVector& reference)
{
    return mse(std::span<const double>(predictions.data(), static_cast<std::size_t>(predictions.size())),
               std::span<const double>(reference.data(), static_cast<std::size_t>(reference.size())));
}

double mse(const RegressionSolution& sol, const CMatrix& test_rows, const RVector& labels)
{
    return mse(predict_rows(sol, test_rows), labels);
}

double mse(const RegressionSolution& sol, const CMatrix& test_rows, const RegressionSolution& m_star)
{
    return mse(predict_rows(sol, test_rows), predict_rows(m_star, test_rows));
}

nlohmann::json solution_json(const RegressionSolution& sol, const ErrorDecomposition* decomposition)
{
    nlohmann::json j{{"regime", std::string(to_string(sol.regime))},
                     {"lambda", sol.ridge},
                     {"sigma", std::vector<double>(sol.svd.sigma.data(), sol.svd.sigma.data() + sol.svd.sigma.size())}};
    if (decomposition) {
        j["variance_like"] = decomposition->variance_like;
        j["bias_like"] = decomposition->bias_like;
    }
    return j;
}

}  // namespace qkdd
