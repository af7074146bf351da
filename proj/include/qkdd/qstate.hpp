#pragma once

// Exact simulation of data-encoding circuits on a few qubits.
//
// Qubit 0 is the most significant bit of a basis index, so a product state
// |a> (x) |b> has amplitude index a * 2 + b. Density matrices are vectorized
// row-major: component (i * 2^n + j) holds rho(i, j).

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "qkdd/common.hpp"

namespace qkdd {

class StateVector {
public:
    /// Throws DimensionError unless the length is 2^n_qubits and the norm is 1
    /// within 1e-12.
    explicit StateVector(CVector amplitudes);

    static StateVector basis(int n_qubits, std::size_t index = 0);

    [[nodiscard]] int n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] const CVector& amplitudes() const noexcept { return amplitudes_; }

private:
    CVector amplitudes_;
    int n_qubits_ = 0;
};

class DensityMatrix {
public:
    /// Checks shape, Hermiticity (1e-12) and unit trace (1e-12). Positivity
    /// is checked separately by is_positive_semidefinite().
    explicit DensityMatrix(CMatrix entries);

    static DensityMatrix from_pure(const StateVector& psi);
    static DensityMatrix maximally_mixed(int n_qubits);

    [[nodiscard]] int n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] const CMatrix& entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }

    [[nodiscard]] double purity() const;
    [[nodiscard]] bool is_positive_semidefinite(double tol = 1e-10) const;

private:
    CMatrix entries_;
    int n_qubits_ = 0;
};

struct VectorizedState {
    CVector components;
    int n_qubits = 0;
};

/// ⟨⟨a|b⟩⟩ = sum conj(a_k) b_k.
cplx inner(const VectorizedState& a, const VectorizedState& b);

/// Single-qubit reduced density matrices of an n-qubit state.
class RdmVector {
public:
    explicit RdmVector(std::vector<DensityMatrix> rdms);

    [[nodiscard]] int n_qubits() const noexcept { return static_cast<int>(rdms_.size()); }
    [[nodiscard]] const std::vector<DensityMatrix>& rdms() const noexcept { return rdms_; }
    [[nodiscard]] const DensityMatrix& operator[](std::size_t k) const { return rdms_[k]; }

private:
    std::vector<DensityMatrix> rdms_;
};

enum class Generator { zero, pauli_x, pauli_y, pauli_z };

std::string_view to_string(Generator g);

/// One circuit element. Rotations are exp(-i/2 * x[feature] * H). Entanglers
/// are CNOTs (control = qubit, target = target) and carry feature = -1.
struct Gate {
    int layer = 0;
    int feature = -1;
    int qubit = 0;
    int target = -1;
    Generator generator = Generator::zero;
    bool is_entangler = false;
};

/// Description of a data-encoding circuit S(x).
///
/// Families are named the way they appear in JSON:
///   generator: "pauli-y-z" (R_Y then R_Z per qubit), "pauli-y" (R_Y only),
///              "none" (zero generators, constant map)
///   entangler: "cnot-ring" or "none"
///
/// Feature-to-qubit assignment is round-robin: qubit q reads x[q mod d] for
/// R_Y and x[(q + d/2) mod d] for R_Z. With d < 2n a feature can be encoded
/// more than once per layer; encoding_depth() counts that.
class FeatureMapSpec {
public:
    FeatureMapSpec(int n_qubits, int n_features, int n_layers, std::vector<Gate> gates,
                   std::string generator_family = "custom", std::string entangler_family = "custom");

    static FeatureMapSpec make(int n_qubits, int n_features, int n_layers = 4,
                               std::string_view generator = "pauli-y-z",
                               std::string_view entangler = "cnot-ring");

    [[nodiscard]] int n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] int n_features() const noexcept { return n_features_; }
    [[nodiscard]] int n_layers() const noexcept { return n_layers_; }
    [[nodiscard]] const std::vector<Gate>& gates() const noexcept { return gates_; }
    [[nodiscard]] const std::string& generator_family() const noexcept { return generator_family_; }
    [[nodiscard]] const std::string& entangler_family() const noexcept { return entangler_family_; }

    /// max ||H|| over data-dependent gates (1 for Pauli, 0 for zero generators).
    [[nodiscard]] double generator_norm() const;

    /// Largest number of rotations fed by a single feature over the circuit.
    [[nodiscard]] int encoding_depth() const;

private:
    int n_qubits_;
    int n_features_;
    int n_layers_;
    std::vector<Gate> gates_;
    std::string generator_family_;
    std::string entangler_family_;
};

void to_json(nlohmann::json& j, const FeatureMapSpec& spec);
FeatureMapSpec feature_map_from_json(const nlohmann::json& j);

/// S(x)|psi0>.
StateVector encode_pure(const FeatureMapSpec& spec, std::span<const double> x,
                        const StateVector& psi0);
StateVector encode_pure(const FeatureMapSpec& spec, std::span<const double> x);

/// S(x) rho0 S(x)^dagger. Default rho0 is |0...0><0...0|.
DensityMatrix encode(const FeatureMapSpec& spec, std::span<const double> x, const DensityMatrix& rho0);
DensityMatrix encode(const FeatureMapSpec& spec, std::span<const double> x, const StateVector& psi0);
DensityMatrix encode(const FeatureMapSpec& spec, std::span<const double> x);

VectorizedState vectorize(const DensityMatrix& rho);
/// Inverse of vectorize; no validation.
CMatrix devectorize(const CVector& components);

RdmVector reduce(const DensityMatrix& rho);
RdmVector reduce(const StateVector& psi);

/// Largest singular value.
double operator_norm(const CMatrix& m);

/// sqrt(d * r) * lambda, where r is the encoding depth (the number of layers
/// when each feature enters each layer once).
double lipschitz_bound(const FeatureMapSpec& spec);

struct LipschitzReport {
    double max_ratio = 0.0;
    double bound = 0.0;
    int violations = 0;
    int pairs_used = 0;
};

/// Samples pairs uniformly from [-box, box]^d and compares
/// ||rho(x) - rho(x')||_op / ||x - x'||_2 against lipschitz_bound().
LipschitzReport verify_lipschitz(const FeatureMapSpec& spec, int n_pairs, std::uint64_t seed,
                                 double box = kPi / 2);

void to_json(nlohmann::json& j, const LipschitzReport& r);

}  // namespace qkdd
