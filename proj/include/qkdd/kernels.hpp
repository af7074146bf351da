#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "qkdd/common.hpp"
#include "qkdd/qstate.hpp"

namespace qkdd {

enum class KernelKind { eqk, rdm };

std::string_view to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string_view s);

/// Embedding quantum kernel Tr{rho_a rho_b}. Evaluation is symmetric in its
/// arguments bit for bit.
double eqk(const DensityMatrix& a, const DensityMatrix& b);

/// (1/n) sum_k Tr{rho_(k) sigma_(k)} over single-qubit reduced states.
double rdm_kernel(const RdmVector& a, const RdmVector& b);

using FeatureState = std::variant<DensityMatrix, RdmVector>;

struct GramMatrix {
    RMatrix entries;
    KernelKind kind = KernelKind::eqk;
    int n_qubits = 0;

    [[nodiscard]] Eigen::Index size() const noexcept { return entries.rows(); }
};

// Gram assembly. These use OpenMP over the upper triangle; every entry is a
// pure function of its pair, so the result is identical for any thread count.
GramMatrix gram(std::span<const DensityMatrix> states);
GramMatrix gram(std::span<const RdmVector> states);
/// Throws DimensionError for an empty or mixed-kind list.
GramMatrix gram(std::span<const FeatureState> states);

/// rows(t, i) = kernel(test[t], train[i]).
RMatrix cross_kernel(std::span<const DensityMatrix> test, std::span<const DensityMatrix> train);
RMatrix cross_kernel(std::span<const RdmVector> test, std::span<const RdmVector> train);

namespace serial {
// Single-threaded reference implementations kept for testing and benchmarks.
GramMatrix gram(std::span<const DensityMatrix> states);
GramMatrix gram(std::span<const RdmVector> states);
RMatrix cross_kernel(std::span<const DensityMatrix> test, std::span<const DensityMatrix> train);
}  // namespace serial

struct ShotNoiseConfig {
    std::optional<std::int64_t> n_shots;  ///< empty means infinitely many shots
    std::uint64_t seed = 0;
};

struct NoisyKernels {
    GramMatrix gram;
    std::optional<RMatrix> test_rows;
};

/// Decimal places kept when rounding eigenvalues: floor(log10(n_shots / 2)),
/// clamped at 0.
int eigenvalue_decimals(std::int64_t n_shots);

/// Eigendecomposes a symmetric matrix, clips negative eigenvalues to zero,
/// optionally rounds eigenvalues to `decimals` places, and reconstructs.
RMatrix psd_repair(const RMatrix& m, std::optional<int> decimals = std::nullopt);

/// Finite-shot model: each off-diagonal Gram entry and each test-row entry K
/// gets independent Gaussian noise of variance K(1-K)/n_shots. The diagonal
/// stays exact. The Gram matrix is then mirrored and PSD-repaired with
/// eigenvalues rounded to eigenvalue_decimals(n_shots). Draws are keyed by
/// entry index, so the output depends only on the inputs and the seed.
NoisyKernels apply_shot_noise(const GramMatrix& gram, const std::optional<RMatrix>& test_rows,
                              const ShotNoiseConfig& cfg);

/// CSV export: first line "# <kind>,<n>,<N>", then N comma-separated rows.
void write_gram_csv(std::ostream& out, const GramMatrix& gram);

/// Ridgeless / ridge regression in dual form: alpha = (K + ridge I)^+ Y with
/// eigenvalues at or below rank_cutoff * lambda_max dropped.
struct KernelModel {
    RVector alpha;
    int rank = 0;
};

KernelModel fit_kernel_model(const RMatrix& gram, const RVector& labels, double ridge = 0.0,
                             double rank_cutoff = 1e-10);

/// predictions(t) = rows(t, :) . alpha
RVector predict_kernel(const KernelModel& model, const RMatrix& rows);

}  // namespace qkdd
