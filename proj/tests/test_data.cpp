#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "qkdd/data.hpp"

using namespace qkdd;

namespace {

std::string write_temp(const std::string& name, const std::string& content)
{
    const auto path = std::filesystem::temp_directory_path() / ("qkdd_test_" + name);
    std::ofstream(path) << content;
    return path.string();
}

}  // namespace

TEST_CASE("synthetic data")
{
    SUBCASE("zero weights give zero labels")
    {
        const Dataset ds = synthetic({3, {0.0, 0.0, 0.0}, 1}, 50);
        CHECK(ds.labels.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("inputs are bounded and labels are dot products")
    {
        const std::vector<double> w{0.5, -1.0, 2.0};
        const Dataset ds = synthetic({3, w, 7}, 200);
        CHECK(ds.inputs.cwiseAbs().maxCoeff() <= kPi / 2);
        for (Eigen::Index i = 0; i < ds.size(); ++i) {
            double y = 0.0;
            for (int k = 0; k < 3; ++k) y += w[static_cast<std::size_t>(k)] * ds.inputs(i, k);
            CHECK(ds.labels(i) == y);
        }
        CHECK(ds.task == Task::regression);
    }
    SUBCASE("reproducible per seed")
    {
        const Dataset a = synthetic(default_synthetic(2, 4), 30);
        const Dataset b = synthetic(default_synthetic(2, 4), 30);
        const Dataset c = synthetic(default_synthetic(2, 5), 30);
        CHECK(a.inputs == b.inputs);
        CHECK(a.labels == b.labels);
        CHECK(a.inputs != c.inputs);
    }
    SUBCASE("invalid specs")
    {
        CHECK_THROWS_AS(synthetic({2, {1.0}, 0}, 5), ConfigError);
        CHECK_THROWS_AS(synthetic(default_synthetic(2), 0), ConfigError);
    }
}

TEST_CASE("CSV loading")
{
    SUBCASE("toy file round trip")
    {
        const auto path = write_temp("toy.csv", "a,b,y\n1.5,-2,3\n0.25,4,5\n");
        const Dataset ds = load_csv(path, "y", Task::regression);
        CHECK(ds.size() == 2);
        CHECK(ds.dim() == 2);
        CHECK(ds.inputs(0, 0) == 1.5);
        CHECK(ds.inputs(0, 1) == -2.0);
        CHECK(ds.inputs(1, 0) == 0.25);
        CHECK(ds.inputs(1, 1) == 4.0);
        // Standardized: (3 - 4) / 1 and (5 - 4) / 1.
        CHECK(ds.labels(0) == doctest::Approx(-1.0));
        CHECK(ds.labels(1) == doctest::Approx(1.0));
        CHECK(ds.meta.label_mean == doctest::Approx(4.0));
        CHECK(ds.meta.feature_names == std::vector<std::string>{"a", "b"});
    }
    SUBCASE("binary labels map to -1/+1 by ascending value")
    {
        const auto path = write_temp("bin.csv", "y,x\n7,1\n0,2\n7,3\n");
        const Dataset ds = load_csv(path, "y", Task::binary);
        CHECK(ds.labels(0) == 1.0);
        CHECK(ds.labels(1) == -1.0);
        CHECK(ds.labels(2) == 1.0);
        CHECK(ds.meta.class_values == std::vector<double>{0.0, 7.0});
    }
    SUBCASE("standardized labels have zero mean and unit variance")
    {
        std::string text = "x,y\n";
        std::mt19937_64 rng(3);
        std::normal_distribution<double> normal(5.0, 3.0);
        for (int i = 0; i < 100; ++i) text += std::to_string(i) + "," + std::to_string(normal(rng)) + "\n";
        const Dataset ds = load_csv(write_temp("reg.csv", text), "y", Task::regression);
        const double mean = ds.labels.mean();
        const double var = (ds.labels.array() - mean).square().mean();
        CHECK(std::abs(mean) <= 1e-10);
        CHECK(std::abs(var - 1.0) <= 1e-10);
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_WITH_AS(load_csv(write_temp("bad.csv", "x,y\n1,2\n3,oops\n"), "y", Task::regression),
                             "csv: cannot parse 'oops' at row 3, column 2", ConfigError);
        CHECK_THROWS_AS(load_csv(write_temp("three.csv", "x,y\n1,0\n2,1\n3,2\n"), "y", Task::binary), ConfigError);
        CHECK_THROWS_AS(load_csv(write_temp("const.csv", "x,y\n1,2\n3,2\n"), "y", Task::regression), ConfigError);
        CHECK_THROWS_AS(load_csv(write_temp("short.csv", "x,y\n1\n"), "y", Task::regression), ConfigError);
        CHECK_THROWS_AS(load_csv(write_temp("nolabel.csv", "x,y\n1,2\n"), "z", Task::regression), ConfigError);
        CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", "y", Task::regression), ConfigError);
    }
}

TEST_CASE("dataset validation")
{
    Dataset ds;
    ds.inputs = RMatrix::Zero(2, 1);
    ds.labels = RVector::Zero(2);
    ds.task = Task::binary;
    CHECK_THROWS_AS(validate(ds), ConfigError);
    ds.labels << 1.0, -1.0;
    CHECK_NOTHROW(validate(ds));
    ds.inputs(0, 0) = std::nan("");
    CHECK_THROWS_AS(validate(ds), ConfigError);
}

TEST_CASE("PCA")
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    // 200 points in a 2-dimensional subspace of R^5.
    RMatrix basis(5, 2);
    for (auto& v : basis.reshaped()) v = normal(rng);
    RMatrix coords(200, 2);
    for (auto& v : coords.reshaped()) v = normal(rng);
    coords.col(0) *= 3.0;
    Dataset ds;
    ds.inputs = (coords * basis.transpose()).rowwise() + RVector::LinSpaced(5, 1.0, 5.0).transpose();
    ds.labels = RVector::Zero(200);

    const PcaTransform t = fit_pca(ds, 2);

    SUBCASE("orthonormal components")
    {
        CHECK((t.components.transpose() * t.components - RMatrix::Identity(2, 2)).norm() < 1e-10);
    }
    SUBCASE("data in an m-subspace is reconstructed exactly")
    {
        const RMatrix z = project(t, ds.inputs);
        const RMatrix rebuilt = (z * t.components.transpose()).rowwise() + t.mean.transpose();
        CHECK((rebuilt - ds.inputs).norm() < 1e-9);
    }
    SUBCASE("explained variance matches the singular values of the centered data")
    {
        const RMatrix centered = ds.inputs.rowwise() - ds.inputs.colwise().mean();
        Eigen::JacobiSVD<RMatrix> svd(centered);
        const RVector s = svd.singularValues();
        for (int k = 0; k < 2; ++k) {
            CHECK(t.explained_variance(k) == doctest::Approx(s(k) * s(k) / 199.0).epsilon(1e-10));
        }
    }
    SUBCASE("rescaled coordinates lie in the angle box and keep their order")
    {
        const Dataset out = apply_pca(t, ds);
        CHECK(out.dim() == 2);
        CHECK(out.inputs.cwiseAbs().maxCoeff() <= kPi / 2 + 1e-15);
        const RMatrix z = project(t, ds.inputs);
        for (int k = 0; k < 2; ++k) {
            for (Eigen::Index i = 1; i < z.rows(); ++i) {
                if (z(i, k) > z(i - 1, k)) CHECK(out.inputs(i, k) >= out.inputs(i - 1, k));
                if (z(i, k) < z(i - 1, k)) CHECK(out.inputs(i, k) <= out.inputs(i - 1, k));
            }
        }
        // Values outside the fitted range are clamped.
        Dataset far = ds.subset({0});
        far.inputs *= 1000.0;
        CHECK(apply_pca(t, far).inputs.cwiseAbs().maxCoeff() <= kPi / 2);
    }
    SUBCASE("target dimension above the rank is rejected")
    {
        CHECK_THROWS_AS(fit_pca(ds, 3), ConfigError);
        CHECK_THROWS_AS(fit_pca(ds, 6), ConfigError);
    }
}

TEST_CASE("splits are disjoint")
{
    Dataset ds;
    ds.inputs = RVector::LinSpaced(50, 0.0, 49.0);
    ds.labels = RVector::LinSpaced(50, 0.0, 49.0);
    const Split s = split(ds, 30, 20, 4);
    std::set<double> seen;
    for (Eigen::Index i = 0; i < s.train.size(); ++i) seen.insert(s.train.inputs(i, 0));
    for (Eigen::Index i = 0; i < s.test.size(); ++i) CHECK(seen.insert(s.test.inputs(i, 0)).second);
    CHECK(seen.size() == 50);
    CHECK(s.train.labels == s.train.inputs.col(0));
    CHECK_THROWS_AS(split(ds, 40, 20, 4), ConfigError);
}
