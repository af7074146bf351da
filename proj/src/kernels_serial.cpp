#include "qkdd/kernels.hpp"

namespace qkdd::serial {

namespace {

template <typename State>
GramMatrix gram_loop(std::span<const State> states, KernelKind kind, double (*kernel)(const State&, const State&))
{
    if (states.empty()) throw DimensionError("gram: empty state list");
    const auto n = static_cast<Eigen::Index>(states.size());
    GramMatrix g{RMatrix(n, n), kind, states.front().n_qubits()};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double k = kernel(states[static_cast<std::size_t>(i)], states[static_cast<std::size_t>(j)]);
            g.entries(i, j) = k;
            g.entries(j, i) = k;
        }
    }
    return g;
}

}  // namespace

GramMatrix gram(std::span<const DensityMatrix> states)
{
    return gram_loop<DensityMatrix>(states, KernelKind::eqk, &eqk);
}

GramMatrix gram(std::span<const RdmVector> states)
{
    return gram_loop<RdmVector>(states, KernelKind::rdm, &rdm_kernel);
}

RMatrix cross_kernel(std::span<const DensityMatrix> test, std::span<const DensityMatrix> train)
{
    RMatrix rows(static_cast<Eigen::Index>(test.size()), static_cast<Eigen::Index>(train.size()));
    for (std::size_t t = 0; t < test.size(); ++t) {
        for (std::size_t i = 0; i < train.size(); ++i) {
            rows(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = eqk(test[t], train[i]);
        }
    }
    return rows;
}

}  // namespace qkdd::serial
