#pragma once

// Linear regression in quantum feature space.
//
// A DataMatrix row i is the co-vector [rho_i]^dagger, i.e. the conjugated
// vectorized feature state, so that (D m)_i = ⟨⟨rho_i|m⟩⟩ = Tr{rho_i M} for a
// vectorized observable m. D D^dagger is then the Gram matrix.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "qkdd/common.hpp"
#include "qkdd/kernels.hpp"
#include "qkdd/qstate.hpp"

namespace qkdd {

inline constexpr double kDefaultRankCutoff = 1e-10;

enum class Regime { under, over, interpolation };

std::string_view to_string(Regime r);

/// Classifies N samples against feature dimension p.
Regime classify_regime(Eigen::Index n_samples, Eigen::Index p);

/// 4^n for EQK; 3n + 2 for the RDM kernel (used to normalize N only).
int feature_dimension(KernelKind kind, int n_qubits);

/// |rho⟩⟩ for EQK; stacked vectorized single-qubit RDMs scaled by 1/sqrt(n)
/// for the RDM kernel, so that ⟨⟨a|b⟩⟩ reproduces rdm_kernel(a, b).
CVector feature_vector(const DensityMatrix& rho);
CVector feature_vector(const RdmVector& rdms);

struct DataMatrix {
    CMatrix rows;       ///< N x storage; row i is feature_vector(state_i)^dagger
    RVector labels;     ///< N
    KernelKind kind = KernelKind::eqk;
    int n_qubits = 0;
    int p = 0;          ///< feature dimension per feature_dimension()

    [[nodiscard]] Eigen::Index size() const noexcept { return rows.rows(); }
};

DataMatrix build_data_matrix(std::span<const DensityMatrix> states, const RVector& labels);
DataMatrix build_data_matrix(std::span<const RdmVector> states, const RVector& labels);

/// Thin SVD D = U diag(sigma) V^dagger restricted to singular values above
/// rank_cutoff * sigma_max. Each (u_r, v_r) pair is phase-fixed so that the
/// largest-magnitude component of u_r is real and positive; for real Gram
/// matrices this makes u_r real and v_r the vectorization of a Hermitian
/// matrix.
struct SvdFactors {
    CMatrix u;      ///< N x R
    RVector sigma;  ///< R, descending
    CMatrix v;      ///< storage x R

    [[nodiscard]] Eigen::Index rank() const noexcept { return sigma.size(); }
};

SvdFactors compute_svd(const CMatrix& d, double rank_cutoff = kDefaultRankCutoff);

struct RegressionSolution {
    CVector observable;  ///< vectorized M
    Regime regime = Regime::interpolation;
    double ridge = 0.0;
    SvdFactors svd;
};

/// ridge == 0: M = V Sigma^+ U^dagger Y (least squares for N > p, minimum
/// norm interpolant for N < p). ridge > 0: M = V diag(s / (s^2 + ridge)) U^dagger Y.
/// Throws NumericalGuardError for an all-zero data matrix.
RegressionSolution solve(const DataMatrix& dm, double ridge = 0.0, double rank_cutoff = kDefaultRankCutoff);

/// Tr{rho_t M}. Throws NumericalGuardError when the imaginary part is not
/// negligible (a sign of a vectorization mismatch).
double predict(const RegressionSolution& sol, const CVector& features);
double predict(const RegressionSolution& sol, const DensityMatrix& rho);
double predict(const RegressionSolution& sol, const RdmVector& rdms);
/// Predictions for every row of a data-matrix-shaped block (rows are co-vectors).
RVector predict_rows(const RegressionSolution& sol, const CMatrix& rows);
RVector predict_rows(const CVector& observable, const CMatrix& rows);

/// Draws `count` fresh labelled samples as a DataMatrix.
using Sampler = std::function<DataMatrix(std::size_t count, std::uint64_t seed)>;

/// Least-squares fit on m_large fresh samples, standing in for the expected
/// risk minimizer M*.
RegressionSolution estimate_expected_minimizer(const Sampler& sampler, std::size_t m_large, std::uint64_t seed,
                                               double rank_cutoff = kDefaultRankCutoff);

/// E = Y - D M*.
RVector residuals(const DataMatrix& dm, const RegressionSolution& m_star);

struct ModeTerm {
    double inv_sigma = 0.0;      ///< 1 / sigma_r
    double overlap = 0.0;        ///< Tr{rho_r^V rho_t}
    double residual_proj = 0.0;  ///< <u_r, E>
};

struct ErrorDecomposition {
    std::vector<ModeTerm> modes;
    double variance_like = 0.0;  ///< Tr{rho_t V Sigma^+ U^dagger E}
    double bias_like = 0.0;      ///< Tr{rho_t (D^+ D - I) M*}; 0 when underparameterized
    double total_diff = 0.0;     ///< predict(sol) - predict(m_star)
    Regime regime = Regime::interpolation;
};

/// Splits the prediction gap on one test point into its per-mode variance-like
/// sum and the bias-like projector term. Requires an unregularized solution.
ErrorDecomposition decompose_error(const RegressionSolution& sol, const RegressionSolution& m_star,
                                   const DataMatrix& dm, const CVector& test_features);

double mse(std::span<const double> predictions, std::span<const double> reference);
double mse(const RVector& predictions, const RVector& reference);
/// Against true labels.
double mse(const RegressionSolution& sol, const CMatrix& test_rows, const RVector& labels);
/// Against the predictions of a reference model.
double mse(const RegressionSolution& sol, const CMatrix& test_rows, const RegressionSolution& m_star);

/// {regime, lambda, sigma[], variance_like, bias_like}; the last two only when
/// a decomposition is given.
nlohmann::json solution_json(const RegressionSolution& sol, const ErrorDecomposition* decomposition = nullptr);

}  // namespace qkdd
