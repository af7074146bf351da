#include "qkdd/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qkdd/seeding.hpp"

namespace qkdd {

namespace {

constexpr double kStateTol = 1e-12;

int qubits_for_dim(Eigen::Index dim, const char* what)
{
    if (dim < 2) throw DimensionError(std::string(what) + ": dimension must be a power of two >= 2");
    int n = 0;
    Eigen::Index d = dim;
    while (d > 1) {
        if (d % 2 != 0) throw DimensionError(std::string(what) + ": dimension is not a power of two");
        d /= 2;
        ++n;
    }
    return n;
}

using Mat2 = Eigen::Matrix2cd;

// exp(-i/2 * angle * P) for a Pauli P: cos(a/2) I - i sin(a/2) P.
Mat2 rotation(Generator g, double angle)
{
    const double c = std::cos(angle / 2);
    const double s = std::sin(angle / 2);
    const cplx i{0.0, 1.0};
    Mat2 m;
    switch (g) {
    case Generator::zero:
        m << 1, 0, 0, 1;
        break;
    case Generator::pauli_x:
        m << c, -i * s, -i * s, c;
        break;
    case Generator::pauli_y:
        m << c, -s, s, c;
        break;
    case Generator::pauli_z:
        m << cplx{c, -s}, 0, 0, cplx{c, s};
        break;
    }
    return m;
}

// Applies a 2x2 gate on `qubit` to every column of `state` (a 2^n x k block).
void apply_single(Eigen::Ref<CMatrix> state, const Mat2& u, int qubit, int n_qubits)
{
    const Eigen::Index stride = Eigen::Index{1} << (n_qubits - 1 - qubit);
    const Eigen::Index dim = state.rows();
    for (Eigen::Index col = 0; col < state.cols(); ++col) {
        for (Eigen::Index base = 0; base < dim; base += 2 * stride) {
            for (Eigen::Index off = 0; off < stride; ++off) {
                const Eigen::Index i0 = base + off;
                const Eigen::Index i1 = i0 + stride;
                const cplx a0 = state(i0, col);
                const cplx a1 = state(i1, col);
                state(i0, col) = u(0, 0) * a0 + u(0, 1) * a1;
                state(i1, col) = u(1, 0) * a0 + u(1, 1) * a1;
            }
        }
    }
}

void apply_cnot(Eigen::Ref<CMatrix> state, int control, int target, int n_qubits)
{
    const Eigen::Index cmask = Eigen::Index{1} << (n_qubits - 1 - control);
    const Eigen::Index tmask = Eigen::Index{1} << (n_qubits - 1 - target);
    for (Eigen::Index col = 0; col < state.cols(); ++col) {
        for (Eigen::Index i = 0; i < state.rows(); ++i) {
            if ((i & cmask) && !(i & tmask)) std::swap(state(i, col), state(i | tmask, col));
        }
    }
}

void apply_circuit(Eigen::Ref<CMatrix> state, const FeatureMapSpec& spec, std::span<const double> x)
{
    const int n = spec.n_qubits();
    for (const Gate& g : spec.gates()) {
        if (g.is_entangler) {
            apply_cnot(state, g.qubit, g.target, n);
        } else if (g.generator != Generator::zero) {
            apply_single(state, rotation(g.generator, x[static_cast<std::size_t>(g.feature)]), g.qubit, n);
        }
    }
}

void check_input(const FeatureMapSpec& spec, std::span<const double> x, int n_qubits)
{
    if (static_cast<int>(x.size()) != spec.n_features()) {
        throw DimensionError("encode: expected " + std::to_string(spec.n_features()) + " features, got " +
                             std::to_string(x.size()));
    }
    if (n_qubits != spec.n_qubits()) {
        throw DimensionError("encode: initial state has " + std::to_string(n_qubits) +
                             " qubits, feature map expects " + std::to_string(spec.n_qubits()));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// States

StateVector::StateVector(CVector amplitudes) : amplitudes_(std::move(amplitudes))
{
    n_qubits_ = qubits_for_dim(amplitudes_.size(), "StateVector");
    if (std::abs(amplitudes_.norm() - 1.0) > kStateTol) {
        throw DimensionError("StateVector: amplitudes are not normalized");
    }
}

StateVector StateVector::basis(int n_qubits, std::size_t index)
{
    if (n_qubits < 1) throw DimensionError("StateVector::basis: n_qubits must be positive");
    const auto dim = Eigen::Index{1} << n_qubits;
    if (static_cast<Eigen::Index>(index) >= dim) throw DimensionError("StateVector::basis: index out of range");
    CVector v = CVector::Zero(dim);
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return StateVector(std::move(v));
}

DensityMatrix::DensityMatrix(CMatrix entries) : entries_(std::move(entries))
{
    if (entries_.rows() != entries_.cols()) throw DimensionError("DensityMatrix: matrix is not square");
    n_qubits_ = qubits_for_dim(entries_.rows(), "DensityMatrix");
    if ((entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() > kStateTol) {
        throw DimensionError("DensityMatrix: matrix is not Hermitian");
    }
    if (std::abs(entries_.trace() - cplx{1.0, 0.0}) > kStateTol) {
        throw DimensionError("DensityMatrix: trace is not 1");
    }
}

DensityMatrix DensityMatrix::from_pure(const StateVector& psi)
{
    const CVector& a = psi.amplitudes();
    return DensityMatrix(a * a.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits)
{
    if (n_qubits < 1) throw DimensionError("maximally_mixed: n_qubits must be positive");
    const auto dim = Eigen::Index{1} << n_qubits;
    return DensityMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

double DensityMatrix::purity() const
{
    // Tr{rho^2} = sum |rho_ij|^2 for Hermitian rho.
    return entries_.squaredNorm();
}

bool DensityMatrix::is_positive_semidefinite(double tol) const
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(entries_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

cplx inner(const VectorizedState& a, const VectorizedState& b)
{
    if (a.components.size() != b.components.size()) throw DimensionError("inner: length mismatch");
    return a.components.dot(b.components);  // Eigen's dot conjugates the left operand
}

RdmVector::RdmVector(std::vector<DensityMatrix> rdms) : rdms_(std::move(rdms))
{
    if (rdms_.empty()) throw DimensionError("RdmVector: empty");
    for (const auto& r : rdms_) {
        if (r.n_qubits() != 1) throw DimensionError("RdmVector: every element must be a single-qubit state");
    }
}

// ---------------------------------------------------------------------------
// Feature maps

std::string_view to_string(Generator g)
{
    switch (g) {
    case Generator::zero: return "zero";
    case Generator::pauli_x: return "X";
    case Generator::pauli_y: return "Y";
    case Generator::pauli_z: return "Z";
    }
    return "?";
}

FeatureMapSpec::FeatureMapSpec(int n_qubits, int n_features, int n_layers, std::vector<Gate> gates,
                               std::string generator_family, std::string entangler_family)
    : n_qubits_(n_qubits),
      n_features_(n_features),
      n_layers_(n_layers),
      gates_(std::move(gates)),
      generator_family_(std::move(generator_family)),
      entangler_family_(std::move(entangler_family))
{
    if (n_qubits_ < 1 || n_qubits_ > 10) throw ConfigError("feature map: n_qubits must be in [1, 10]");
    if (n_features_ < 1) throw ConfigError("feature map: n_features must be positive");
    if (n_layers_ < 1) throw ConfigError("feature map: n_layers must be positive");

    std::vector<std::vector<int>> seen(static_cast<std::size_t>(n_layers_),
                                       std::vector<int>(static_cast<std::size_t>(n_features_), 0));
    for (const Gate& g : gates_) {
        if (g.layer < 0 || g.layer >= n_layers_) throw ConfigError("feature map: gate layer out of range");
        if (g.qubit < 0 || g.qubit >= n_qubits_) throw ConfigError("feature map: gate qubit out of range");
        if (g.is_entangler) {
            if (g.feature != -1) throw ConfigError("feature map: entanglers carry no data dependence");
            if (g.target < 0 || g.target >= n_qubits_ || g.target == g.qubit) {
                throw ConfigError("feature map: bad entangler target");
            }
            continue;
        }
        if (g.feature < 0 || g.feature >= n_features_) throw ConfigError("feature map: feature index out of range");
        ++seen[static_cast<std::size_t>(g.layer)][static_cast<std::size_t>(g.feature)];
    }
    for (const auto& layer : seen) {
        if (std::any_of(layer.begin(), layer.end(), [](int c) { return c == 0; })) {
            throw ConfigError("feature map: every feature must be encoded in every layer");
        }
    }
}

FeatureMapSpec FeatureMapSpec::make(int n_qubits, int n_features, int n_layers, std::string_view generator,
                                    std::string_view entangler)
{
    if (generator != "pauli-y-z" && generator != "pauli-y" && generator != "none") {
        throw ConfigError("feature map: unknown generator family '" + std::string(generator) + "'");
    }
    if (entangler != "cnot-ring" && entangler != "none") {
        throw ConfigError("feature map: unknown entangler '" + std::string(entangler) + "'");
    }
    if (n_qubits < 1 || n_features < 1 || n_layers < 1) {
        throw ConfigError("feature map: n_qubits, n_features and n_layers must be positive");
    }

    const bool zero = generator == "none";
    const bool with_z = generator == "pauli-y-z";
    std::vector<Gate> gates;
    for (int l = 0; l < n_layers; ++l) {
        // Qubits cover features round-robin; features beyond n_qubits wrap onto
        // qubits again so every feature enters every layer.
        const int slots = std::max(n_qubits, with_z ? (n_features + 1) / 2 : n_features);
        for (int s = 0; s < slots; ++s) {
            const int q = s % n_qubits;
            gates.push_back({l, s % n_features, q, -1, zero ? Generator::zero : Generator::pauli_y, false});
            if (with_z) {
                gates.push_back({l, (s + n_features / 2) % n_features, q, -1, Generator::pauli_z, false});
            }
        }
        if (entangler == "cnot-ring" && n_qubits > 1) {
            if (n_qubits == 2) {
                gates.push_back({l, -1, 0, 1, Generator::zero, true});
            } else {
                for (int q = 0; q < n_qubits; ++q) gates.push_back({l, -1, q, (q + 1) % n_qubits, Generator::zero, true});
            }
        }
    }
    return FeatureMapSpec(n_qubits, n_features, n_layers, std::move(gates), std::string(generator),
                          std::string(entangler));
}

double FeatureMapSpec::generator_norm() const
{
    double lambda = 0.0;
    for (const Gate& g : gates_) {
        if (!g.is_entangler && g.generator != Generator::zero) lambda = 1.0;
    }
    return lambda;
}

int FeatureMapSpec::encoding_depth() const
{
    std::vector<int> count(static_cast<std::size_t>(n_features_), 0);
    for (const Gate& g : gates_) {
        if (!g.is_entangler) ++count[static_cast<std::size_t>(g.feature)];
    }
    return *std::max_element(count.begin(), count.end());
}

void to_json(nlohmann::json& j, const FeatureMapSpec& spec)
{
    j = nlohmann::json{{"n_qubits", spec.n_qubits()},
                       {"n_features", spec.n_features()},
                       {"n_layers", spec.n_layers()},
                       {"generator", spec.generator_family()},
                       {"entangler", spec.entangler_family()}};
}

FeatureMapSpec feature_map_from_json(const nlohmann::json& j)
{
    try {
        const int n_qubits = j.at("n_qubits").get<int>();
        const int n_features = j.value("n_features", n_qubits);
        const int n_layers = j.value("n_layers", 4);
        const auto generator = j.value("generator", std::string("pauli-y-z"));
        const auto entangler = j.value("entangler", std::string("cnot-ring"));
        return FeatureMapSpec::make(n_qubits, n_features, n_layers, generator, entangler);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("feature map JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Encoding

StateVector encode_pure(const FeatureMapSpec& spec, std::span<const double> x, const StateVector& psi0)
{
    check_input(spec, x, psi0.n_qubits());
    CMatrix state = psi0.amplitudes();
    apply_circuit(state, spec, x);
    return StateVector(CVector(state.col(0)));
}

StateVector encode_pure(const FeatureMapSpec& spec, std::span<const double> x)
{
    return encode_pure(spec, x, StateVector::basis(spec.n_qubits()));
}

DensityMatrix encode(const FeatureMapSpec& spec, std::span<const double> x, const DensityMatrix& rho0)
{
    check_input(spec, x, rho0.n_qubits());
    // U rho U^dagger = (U (U rho)^dagger)^dagger, using column-wise gate application.
    CMatrix left = rho0.entries();
    apply_circuit(left, spec, x);
    CMatrix both = left.adjoint();
    apply_circuit(both, spec, x);
    CMatrix result = both.adjoint();
    // Hermitize away rounding asymmetry.
    result = (0.5 * (result + result.adjoint())).eval();
    return DensityMatrix(std::move(result));
}

DensityMatrix encode(const FeatureMapSpec& spec, std::span<const double> x, const StateVector& psi0)
{
    return DensityMatrix::from_pure(encode_pure(spec, x, psi0));
}

DensityMatrix encode(const FeatureMapSpec& spec, std::span<const double> x)
{
    return DensityMatrix::from_pure(encode_pure(spec, x));
}

VectorizedState vectorize(const DensityMatrix& rho)
{
    const auto dim = static_cast<Eigen::Index>(rho.dim());
    CVector v(dim * dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) v(i * dim + j) = rho.entries()(i, j);
    }
    return {std::move(v), rho.n_qubits()};
}

CMatrix devectorize(const CVector& components)
{
    const auto dim = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(components.size()))));
    if (dim * dim != components.size()) throw DimensionError("devectorize: length is not a square");
    CMatrix m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = components(i * dim + j);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Partial traces

RdmVector reduce(const DensityMatrix& rho)
{
    const int n = rho.n_qubits();
    const auto dim = static_cast<Eigen::Index>(rho.dim());
    std::vector<DensityMatrix> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const Eigen::Index mask = Eigen::Index{1} << (n - 1 - k);
        Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (i & mask) continue;
            // i and i|mask share all other qubits; trace over them.
            const Eigen::Index hi = i | mask;
            r(0, 0) += rho.entries()(i, i);
            r(0, 1) += rho.entries()(i, hi);
            r(1, 0) += rho.entries()(hi, i);
            r(1, 1) += rho.entries()(hi, hi);
        }
        out.emplace_back(CMatrix(r));
    }
    return RdmVector(std::move(out));
}

RdmVector reduce(const StateVector& psi)
{
    const int n = psi.n_qubits();
    const CVector& a = psi.amplitudes();
    std::vector<DensityMatrix> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const Eigen::Index mask = Eigen::Index{1} << (n - 1 - k);
        double p0 = 0.0;
        double p1 = 0.0;
        cplx coh{0.0, 0.0};
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (i & mask) continue;
            const cplx a0 = a(i);
            const cplx a1 = a(i | mask);
            p0 += std::norm(a0);
            p1 += std::norm(a1);
            coh += a0 * std::conj(a1);
        }
        Eigen::Matrix2cd r;
        r << p0, coh, std::conj(coh), p1;
        out.emplace_back(CMatrix(r));
    }
    return RdmVector(std::move(out));
}

// ---------------------------------------------------------------------------
// Lipschitz continuity

double operator_norm(const CMatrix& m)
{
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(m);
    return svd.singularValues()(0);
}

double lipschitz_bound(const FeatureMapSpec& spec)
{
    return std::sqrt(static_cast<double>(spec.n_features()) * spec.encoding_depth()) * spec.generator_norm();
}

LipschitzReport verify_lipschitz(const FeatureMapSpec& spec, int n_pairs, std::uint64_t seed, double box)
{
    if (n_pairs < 1) throw ConfigError("verify_lipschitz: n_pairs must be >= 1");
    LipschitzReport report;
    report.bound = lipschitz_bound(spec);

    Rng rng(seed);
    std::uniform_real_distribution<double> uniform(-box, box);
    const auto d = static_cast<std::size_t>(spec.n_features());
    std::vector<double> x(d), y(d);
    for (int pair = 0; pair < n_pairs; ++pair) {
        double dist2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            x[k] = uniform(rng);
            y[k] = uniform(rng);
            dist2 += (x[k] - y[k]) * (x[k] - y[k]);
        }
        if (dist2 == 0.0) continue;
        const double ratio =
            operator_norm(encode(spec, x).entries() - encode(spec, y).entries()) / std::sqrt(dist2);
        report.max_ratio = std::max(report.max_ratio, ratio);
        if (ratio > report.bound + 1e-9) ++report.violations;
        ++report.pairs_used;
    }
    return report;
}

void to_json(nlohmann::json& j, const LipschitzReport& r)
{
    j = nlohmann::json{{"max_ratio", r.max_ratio},
                       {"bound", r.bound},
                       {"violations", r.violations},
                       {"pairs", r.pairs_used}};
}

}  // namespace qkdd
