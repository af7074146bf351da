#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "qkdd/regress.hpp"

using namespace qkdd;

namespace {

struct Instance {
    std::vector<DensityMatrix> states;
    DataMatrix dm;
};

std::vector<DensityMatrix> encode_random(int n, int count, std::mt19937_64& rng)
{
    const auto spec = FeatureMapSpec::make(n, n);
    std::uniform_real_distribution<double> u(-kPi / 2, kPi / 2);
    std::vector<DensityMatrix> out;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < count; ++i) {
        for (auto& v : x) v = u(rng);
        out.push_back(encode(spec, x));
    }
    return out;
}

Instance make_instance(int n, int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto states = encode_random(n, count, rng);
    std::normal_distribution<double> normal;
    RVector y(count);
    for (auto& v : y) v = normal(rng);
    DataMatrix dm = build_data_matrix(states, y);
    return {std::move(states), std::move(dm)};
}

CMatrix test_rows(int n, int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const auto states = encode_random(n, count, rng);
    CMatrix rows(count, 1 << (2 * n));
    for (int t = 0; t < count; ++t) rows.row(t) = feature_vector(states[static_cast<std::size_t>(t)]).adjoint();
    return rows;
}

}  // namespace

TEST_CASE("regime classification and feature dimensions")
{
    CHECK(classify_regime(5, 16) == Regime::over);
    CHECK(classify_regime(16, 16) == Regime::interpolation);
    CHECK(classify_regime(17, 16) == Regime::under);
    CHECK(feature_dimension(KernelKind::eqk, 3) == 64);
    CHECK(feature_dimension(KernelKind::rdm, 4) == 14);
    CHECK(to_string(Regime::under) == "under");
}

TEST_CASE("D D^dagger reproduces both Gram matrices")
{
    const Instance inst = make_instance(2, 12, 1);
    const RMatrix eqk_gram = gram(inst.states).entries;
    CHECK(((inst.dm.rows * inst.dm.rows.adjoint()).real() - eqk_gram).norm() < 1e-12);
    CHECK((inst.dm.rows * inst.dm.rows.adjoint()).imag().norm() < 1e-12);

    std::vector<RdmVector> rdms;
    for (const auto& s : inst.states) rdms.push_back(reduce(s));
    const DataMatrix rdm_dm = build_data_matrix(rdms, inst.dm.labels);
    CHECK(rdm_dm.p == 8);
    CHECK(rdm_dm.rows.cols() == 8);
    CHECK(((rdm_dm.rows * rdm_dm.rows.adjoint()).real() - gram(rdms).entries).norm() < 1e-12);
}

TEST_CASE("data matrix construction validates its inputs")
{
    std::vector<DensityMatrix> none;
    CHECK_THROWS_AS(build_data_matrix(none, RVector()), DimensionError);
    const Instance inst = make_instance(1, 3, 2);
    CHECK_THROWS_AS(build_data_matrix(inst.states, RVector::Zero(2)), DimensionError);
}

TEST_CASE("SVD factors reconstruct D and are phase-fixed")
{
    const Instance inst = make_instance(2, 10, 3);
    const SvdFactors f = compute_svd(inst.dm.rows);
    CHECK(f.rank() == 10);
    const CMatrix rebuilt = f.u * f.sigma.cast<cplx>().asDiagonal() * f.v.adjoint();
    CHECK((rebuilt - inst.dm.rows).norm() < 1e-12);
    for (Eigen::Index r = 0; r < f.rank(); ++r) {
        Eigen::Index arg = 0;
        f.u.col(r).cwiseAbs().maxCoeff(&arg);
        CHECK(std::abs(f.u(arg, r).imag()) < 1e-14);
        CHECK(f.u(arg, r).real() > 0.0);
        if (r) CHECK(f.sigma(r) <= f.sigma(r - 1));
    }
}

TEST_CASE("underparameterized solve equals the normal equations")
{
    const Instance inst = make_instance(2, 40, 4);
    const RegressionSolution sol = solve(inst.dm);
    CHECK(sol.regime == Regime::under);
    const CVector expected = oracle::normal_equations(inst.dm.rows, inst.dm.labels);
    CHECK((sol.observable - expected).norm() < 1e-8 * (1.0 + expected.norm()));
}

TEST_CASE("overparameterized solve is the minimum-norm interpolant")
{
    const Instance inst = make_instance(2, 9, 5);
    const RegressionSolution sol = solve(inst.dm);
    CHECK(sol.regime == Regime::over);
    const CVector expected = oracle::min_norm_interpolant(inst.dm.rows, inst.dm.labels);
    CHECK((sol.observable - expected).norm() < 1e-9 * (1.0 + expected.norm()));
    CHECK((predict_rows(sol, inst.dm.rows) - inst.dm.labels).norm() < 1e-10);

    // Any null-space perturbation can only grow the norm.
    Eigen::FullPivLU<CMatrix> lu(inst.dm.rows);
    const CMatrix null = lu.kernel();
    std::mt19937_64 rng(6);
    std::normal_distribution<double> normal;
    for (int k = 0; k < 20; ++k) {
        CVector c(null.cols());
        for (auto& v : c) v = cplx(normal(rng), normal(rng));
        const CVector z = 1e-3 * null * c;
        CHECK((inst.dm.rows * z).norm() < 1e-12);
        CHECK((sol.observable + z).norm() >= sol.observable.norm() - 1e-10);
    }
}

TEST_CASE("the solution is a Hermitian observable")
{
    const Instance inst = make_instance(2, 7, 7);
    const RegressionSolution sol = solve(inst.dm);
    const CMatrix m = devectorize(sol.observable);
    CHECK((m - m.adjoint()).norm() < 1e-10);
    for (std::size_t i = 0; i < inst.states.size(); ++i) {
        CHECK(predict(sol, inst.states[i]) == doctest::Approx(oracle::trace_product(inst.states[i].entries(), m))
                                                   .epsilon(1e-9));
    }
}

TEST_CASE("ridge solve matches the regularized normal equations")
{
    const Instance inst = make_instance(2, 12, 8);
    for (double lambda : {1e-4, 1e-2, 1.0}) {
        const RegressionSolution sol = solve(inst.dm, lambda);
        const CVector expected = oracle::normal_equations(inst.dm.rows, inst.dm.labels, lambda);
        CHECK((sol.observable - expected).norm() < 1e-8 * (1.0 + expected.norm()));
    }
    CHECK_THROWS_AS(solve(inst.dm, -1.0), ConfigError);
}

TEST_CASE("primal and dual predictions agree")
{
    for (int n = 1; n <= 3; ++n) {
        for (int count : {3, 15, 40}) {
            const Instance inst = make_instance(n, count, static_cast<std::uint64_t>(10 * n + count));
            const CMatrix rows = test_rows(n, 7, static_cast<std::uint64_t>(n + count));
            const RVector primal = predict_rows(solve(inst.dm), rows);
            const RMatrix k = (inst.dm.rows * inst.dm.rows.adjoint()).real();
            const RMatrix kt = (rows * inst.dm.rows.adjoint()).real();
            const RVector dual = predict_kernel(fit_kernel_model(k, inst.dm.labels), kt);
            CHECK((primal - dual).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("all-zero data and imaginary predictions are guarded")
{
    DataMatrix dm{CMatrix::Zero(3, 4), RVector::Ones(3), KernelKind::eqk, 1, 4};
    CHECK_THROWS_AS(solve(dm), NumericalGuardError);

    CVector anti(4);
    anti << 0.0, cplx(0.0, 1.0), cplx(0.0, 1.0), 0.0;  // not the vectorization of a Hermitian matrix
    CMatrix row(1, 4);
    row << 0.5, cplx(0.5, 0.0), cplx(0.5, 0.0), 0.5;
    CHECK_THROWS_AS(predict_rows(anti, row), NumericalGuardError);
}

TEST_CASE("expected minimizer and residuals")
{
    const Sampler sampler = [](std::size_t count, std::uint64_t seed) {
        return make_instance(2, static_cast<int>(count), seed).dm;
    };
    const RegressionSolution m_star = estimate_expected_minimizer(sampler, 160, 42);
    CHECK(m_star.regime == Regime::under);

    const Sampler short_sampler = [&](std::size_t count, std::uint64_t seed) {
        return sampler(count / 2, seed);
    };
    CHECK_THROWS_AS(estimate_expected_minimizer(short_sampler, 40, 1), ConfigError);

    Instance inst = make_instance(2, 10, 77);
    inst.dm.labels = predict_rows(m_star, inst.dm.rows);
    CHECK(residuals(inst.dm, m_star).norm() < 1e-10);
}

TEST_CASE("error decomposition identity in each regime")
{
    const Sampler sampler = [](std::size_t count, std::uint64_t seed) {
        return make_instance(2, static_cast<int>(count), seed).dm;
    };
    const RegressionSolution m_star = estimate_expected_minimizer(sampler, 160, 1);
    const CMatrix rows = test_rows(2, 5, 99);
    for (int count : {6, 16, 30}) {
        const Instance inst = make_instance(2, count, static_cast<std::uint64_t>(count));
        const RegressionSolution sol = solve(inst.dm);
        for (Eigen::Index t = 0; t < rows.rows(); ++t) {
            const CVector f = rows.row(t).adjoint();
            const ErrorDecomposition d = decompose_error(sol, m_star, inst.dm, f);
            const double gap = predict(sol, f) - predict(m_star, f);
            CHECK(d.total_diff == doctest::Approx(gap).epsilon(1e-12));
            CHECK(std::abs(d.variance_like + d.bias_like - gap) < 1e-8 * (1.0 + std::abs(gap)));
            if (count > 16) CHECK(d.bias_like == 0.0);
            CHECK(d.modes.size() == static_cast<std::size_t>(sol.svd.rank()));
        }
    }
    const Instance inst = make_instance(2, 8, 3);
    CHECK_THROWS_AS(decompose_error(solve(inst.dm, 0.1), m_star, inst.dm, rows.row(0).adjoint()), ConfigError);
}

TEST_CASE("with in-class labels the test error is the squared bias term")
{
    const Sampler sampler = [](std::size_t count, std::uint64_t seed) {
        return make_instance(2, static_cast<int>(count), seed).dm;
    };
    const RegressionSolution m_star = estimate_expected_minimizer(sampler, 160, 5);
    Instance inst = make_instance(2, 9, 6);
    inst.dm.labels = predict_rows(m_star, inst.dm.rows);
    const RegressionSolution sol = solve(inst.dm);
    const CMatrix rows = test_rows(2, 10, 7);
    for (Eigen::Index t = 0; t < rows.rows(); ++t) {
        const CVector f = rows.row(t).adjoint();
        const ErrorDecomposition d = decompose_error(sol, m_star, inst.dm, f);
        CHECK(std::abs(d.variance_like) < 1e-8);
        const double err = predict(sol, f) - predict(m_star, f);
        CHECK(std::abs(err * err - d.bias_like * d.bias_like) < 1e-8);
    }
}

TEST_CASE("mse helpers")
{
    const std::vector<double> a{1.0, 2.0, 3.0};
    const std::vector<double> b{1.0, 0.0, 3.0};
    CHECK(mse(a, b) == doctest::Approx(4.0 / 3.0));
    CHECK_THROWS_AS(mse(std::vector<double>{1.0}, b), DimensionError);

    const Instance inst = make_instance(1, 3, 8);
    const RegressionSolution sol = solve(inst.dm);
    CHECK(mse(sol, inst.dm.rows, inst.dm.labels) < 1e-20);
    CHECK(mse(sol, inst.dm.rows, sol) == 0.0);
    const auto j = solution_json(sol);
    CHECK(j.at("regime") == "over");
    CHECK(j.at("sigma").size() == 3);
}
