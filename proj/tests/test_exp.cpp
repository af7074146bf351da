#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "qkdd/exp.hpp"

using namespace qkdd;
using nlohmann::json;

namespace {

SweepConfig small_config()
{
    SweepConfig cfg;
    cfg.n_qubits = 1;
    cfg.n_grid = {2, 3, 4, 6, 8, 12};
    cfg.n_test = 20;
    cfg.repetitions = 3;
    return cfg;
}

std::string curve_text(const SweepResult& r)
{
    std::ostringstream out;
    write_curve_csv(out, r);
    return out.str();
}

struct ThreadCap {
    explicit ThreadCap(const char* value) { setenv("QKD_THREADS", value, 1); }
    ~ThreadCap() { unsetenv("QKD_THREADS"); }
};

DataMatrix sample_data(int n, int count, std::uint64_t seed)
{
    SweepConfig cfg;
    cfg.n_qubits = n;
    cfg.seed = seed;
    return draw_training(cfg, count, 0);
}

}  // namespace

TEST_CASE("default grid brackets the interpolation threshold")
{
    for (int p : {4, 14, 16, 64, 256}) {
        const auto grid = default_n_grid(p);
        CHECK(std::is_sorted(grid.begin(), grid.end()));
        CHECK(std::adjacent_find(grid.begin(), grid.end()) == grid.end());
        CHECK(grid.front() == std::max(1, p / 8));
        CHECK(grid.back() >= 4 * p);
        CHECK(std::find(grid.begin(), grid.end(), p) != grid.end());
        const auto band = std::count_if(grid.begin(), grid.end(), [p](int n) { return 4 * n >= 3 * p && 4 * n <= 5 * p; });
        CHECK(band >= 3);
    }
}

TEST_CASE("config validation")
{
    SweepConfig cfg = small_config();
    CHECK_NOTHROW(validate(cfg));
    CHECK(effective_dimension(cfg) == 4);
    cfg.kernel = KernelKind::rdm;
    CHECK(effective_dimension(cfg) == 5);

    auto broken = [](auto mutate) {
        SweepConfig c = small_config();
        mutate(c);
        return c;
    };
    CHECK_THROWS_AS(validate(broken([](SweepConfig& c) { c.n_grid = {4, 3}; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](SweepConfig& c) { c.n_grid = {0, 3}; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](SweepConfig& c) { c.n_qubits = 7; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](SweepConfig& c) { c.ridge = -1.0; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](SweepConfig& c) { c.n_shots = 0; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](SweepConfig& c) { c.dataset.weights = {1.0, 2.0}; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](SweepConfig& c) { c.dataset.kind = DatasetSource::Kind::csv; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](SweepConfig& c) {
                        c.ablation = AblationConfig{AblationMode::test_projection, 0.0, 0};
                    })),
                    ConfigError);
}

TEST_CASE("config JSON round trip and strict keys")
{
    SweepConfig cfg = small_config();
    cfg.ridge = 0.25;
    cfg.n_shots = 1000;
    cfg.kernel = KernelKind::rdm;
    cfg.ablation = AblationConfig{AblationMode::sv_cutoff, 1e-3, 1};
    const json j = to_json(cfg);
    const SweepConfig back = sweep_config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.n_shots == 1000);
    CHECK(back.ablation->cutoff == 1e-3);

    json bad = j;
    bad["unknown_key"] = 1;
    CHECK_THROWS_AS(sweep_config_from_json(bad), ConfigError);
    bad = j;
    bad["feature_map"]["depth"] = 3;
    CHECK_THROWS_AS(sweep_config_from_json(bad), ConfigError);
    bad = j;
    bad["n_test"] = "many";
    CHECK_THROWS_AS(sweep_config_from_json(bad), ConfigError);
    CHECK_THROWS_AS(sweep_config_from_json(json::array()), ConfigError);
}

TEST_CASE("dotted overrides")
{
    json doc = json::object();
    apply_override(doc, "feature_map.n_layers", "2");
    apply_override(doc, "kernel", "RDM");
    apply_override(doc, "n_grid", "[2,4,8]");
    CHECK(doc["feature_map"]["n_layers"] == 2);
    CHECK(doc["kernel"] == "RDM");
    const SweepConfig cfg = sweep_config_from_json(doc);
    CHECK(cfg.n_layers == 2);
    CHECK(cfg.kernel == KernelKind::rdm);
    CHECK(cfg.n_grid == std::vector<int>{2, 4, 8});
    CHECK_THROWS_AS(apply_override(doc, "feature_map.depth", "2"), ConfigError);
    const auto keys = config_keys();
    CHECK(std::find(keys.begin(), keys.end(), "ablation.n_modes_kept") != keys.end());
}

TEST_CASE("single repetition has zero spread")
{
    SweepConfig cfg = small_config();
    cfg.repetitions = 1;
    const SweepResult r = run_sweep(cfg);
    REQUIRE(r.points.size() == cfg.n_grid.size());
    for (const auto& pt : r.points) CHECK(pt.mse_test_std == 0.0);
    CHECK(r.p_effective == 4);
}

TEST_CASE("sweeps are identical for any worker count")
{
    SweepConfig cfg = small_config();
    cfg.n_qubits = 2;
    cfg.n_grid = {4, 12, 16, 24};
    cfg.n_shots = 5000;
    std::string reference;
    {
        ThreadCap cap("1");
        reference = curve_text(run_sweep(cfg));
    }
    for (const char* threads : {"2", "3"}) {
        ThreadCap cap(threads);
        CHECK(curve_text(run_sweep(cfg)) == reference);
    }
    cfg.seed = 2;
    CHECK(curve_text(run_sweep(cfg)) != reference);
}

TEST_CASE("curve CSV layout")
{
    const SweepResult r = run_sweep(small_config());
    std::istringstream in(curve_text(r));
    std::string line;
    std::getline(in, line);
    CHECK(line == "N,ratio,mse_test_mean,mse_test_std,mse_train_mean,min_sigma_mean");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 6);
    CHECK(r.points[2].ratio == doctest::Approx(1.0));
    const json s = summary_json(small_config(), r);
    for (const char* key : {"config", "p_effective", "peak_n", "peak_height", "runtime_seconds"}) CHECK(s.contains(key));
}

TEST_CASE("peak height is maximum minus median")
{
    std::vector<CurvePoint> pts(5);
    const double values[] = {1.0, 3.0, 10.0, 2.0, 0.5};
    for (std::size_t i = 0; i < 5; ++i) pts[i].mse_test_mean = values[i];
    CHECK(peak_height(pts) == doctest::Approx(8.0));
}

TEST_CASE("residual elimination removes the error at and above p")
{
    SweepConfig cfg = small_config();
    cfg.n_qubits = 2;
    cfg.n_grid = {8, 16, 24, 32};
    const SweepResult r = ablate_residual(cfg);
    CHECK(r.points[1].mse_test_mean < 1e-18);
    CHECK(r.points[2].mse_test_mean < 1e-18);
    CHECK(r.points[3].mse_test_mean < 1e-18);
}

TEST_CASE("singular value cutoff")
{
    const DataMatrix dm = sample_data(2, 10, 3);
    CHECK((ablate_sv_cutoff(dm, 0.0).rows - dm.rows).norm() < 1e-12);
    const SvdFactors f = compute_svd(dm.rows);
    CHECK_THROWS_AS(ablate_sv_cutoff(dm, 2.0 * f.sigma(0)), NumericalGuardError);
    const DataMatrix cut = ablate_sv_cutoff(dm, 0.5 * (f.sigma(4) + f.sigma(5)));
    CHECK(compute_svd(cut.rows).rank() == 5);
}

TEST_CASE("test projection onto reference modes")
{
    const DataMatrix ref = sample_data(2, 40, 4);
    const DataMatrix test = sample_data(2, 6, 5);
    // With every mode kept the projection is the identity on the span.
    CHECK((ablate_test_projection(test.rows, ref, 16) - test.rows).norm() < 1e-10);
    // A single mode makes every projected row parallel to one vector.
    const CMatrix one = ablate_test_projection(test.rows, ref, 1);
    Eigen::JacobiSVD<CMatrix> svd(one);
    CHECK(svd.singularValues()(1) < 1e-12 * svd.singularValues()(0));
    CHECK_THROWS_AS(projection_basis(ref, 17), ConfigError);
    CHECK_THROWS_AS(projection_basis(ref, 0), ConfigError);
}

TEST_CASE("rank-deficient feature maps trip the full-rank guard")
{
    SweepConfig cfg = small_config();
    cfg.n_qubits = 2;
    cfg.n_layers = 1;
    cfg.generator = "pauli-y";
    cfg.n_grid = {16};
    CHECK_THROWS_AS(run_sweep(cfg), NumericalGuardError);
}

TEST_CASE("CSV datasets run end to end")
{
    const auto path = std::filesystem::temp_directory_path() / "qkdd_exp_regression.csv";
    {
        std::ofstream f(path);
        f << "a,b,c,y\n";
        std::mt19937_64 rng(1);
        std::normal_distribution<double> normal;
        for (int i = 0; i < 120; ++i) {
            const double a = normal(rng), b = normal(rng), c = normal(rng);
            f << a << ',' << b << ',' << c << ',' << a - 0.5 * b + 0.1 * normal(rng) << '\n';
        }
    }
    SweepConfig cfg;
    cfg.dataset.kind = DatasetSource::Kind::csv;
    cfg.dataset.path = path.string();
    cfg.dataset.label_column = "y";
    cfg.n_qubits = 1;
    cfg.n_test = 30;
    cfg.repetitions = 2;
    cfg.n_grid = {2, 4, 8, 16};
    CHECK(resolved_features(cfg) == 2);
    const SweepResult r = run_sweep(cfg);
    CHECK(r.points.size() == 4);
    for (const auto& pt : r.points) CHECK(std::isfinite(pt.mse_test_mean));

    cfg.n_grid = {100};
    CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
}
