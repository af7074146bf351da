#include "qkdd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "qkdd/seeding.hpp"

namespace qkdd {

std::string_view to_string(Task t)
{
    return t == Task::binary ? "binary" : "regression";
}

Task task_from_string(std::string_view s)
{
    if (s == "binary") return Task::binary;
    if (s == "regression") return Task::regression;
    throw ConfigError("unknown task '" + std::string(s) + "' (expected regression or binary)");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const
{
    Dataset out;
    out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
    out.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(rows[i]);
        out.labels(static_cast<Eigen::Index>(i)) = labels(rows[i]);
    }
    out.task = task;
    out.meta = meta;
    return out;
}

void validate(const Dataset& ds)
{
    if (ds.inputs.rows() != ds.labels.size()) throw ConfigError("dataset: inputs and labels disagree in length");
    if (!ds.inputs.allFinite() || !ds.labels.allFinite()) throw ConfigError("dataset: non-finite values");
    if (ds.task == Task::binary) {
        for (Eigen::Index i = 0; i < ds.labels.size(); ++i) {
            if (ds.labels(i) != 1.0 && ds.labels(i) != -1.0) throw ConfigError("dataset: binary labels must be +-1");
        }
    }
}

SyntheticSpec default_synthetic(int dim, std::uint64_t seed)
{
    return {dim, std::vector<double>(static_cast<std::size_t>(dim), 1.0), seed};
}

Dataset synthetic(const SyntheticSpec& spec, Eigen::Index n_samples)
{
    if (spec.dim < 1) throw ConfigError("synthetic: dim must be positive");
    if (static_cast<int>(spec.weights.size()) != spec.dim) throw ConfigError("synthetic: len(w) != dim");
    if (n_samples < 1) throw ConfigError("synthetic: N must be >= 1");

    Rng rng(spec.seed);
    std::uniform_real_distribution<double> uniform(-kPi / 2, kPi / 2);
    Dataset ds;
    ds.inputs.resize(n_samples, spec.dim);
    ds.labels.resize(n_samples);
    for (Eigen::Index i = 0; i < n_samples; ++i) {
        double y = 0.0;
        for (int k = 0; k < spec.dim; ++k) {
            const double x = uniform(rng);
            ds.inputs(i, k) = x;
            y += spec.weights[static_cast<std::size_t>(k)] * x;
        }
        ds.labels(i) = y;
    }
    ds.task = Task::regression;
    ds.meta.name = "synthetic";
    return ds;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s)
{
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

double parse_cell(const std::string& raw, std::size_t row, std::size_t col)
{
    const std::string s = trim(raw);
    double v = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (s.empty() || ec != std::errc() || ptr != end) {
        throw ConfigError("csv: cannot parse '" + s + "' at row " + std::to_string(row) + ", column " +
                          std::to_string(col));
    }
    return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column, Task task)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ConfigError("csv: '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_fields(line);
    for (auto& h : header) h = trim(h);
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) throw ConfigError("csv: no column named '" + label_column + "'");
    const auto label_idx = static_cast<std::size_t>(label_it - header.begin());

    std::vector<std::vector<double>> features;
    std::vector<double> labels;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw ConfigError("csv: row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                              " fields, header has " + std::to_string(header.size()));
        }
        std::vector<double> x;
        x.reserve(fields.size() - 1);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const double v = parse_cell(fields[c], row, c + 1);
            if (c == label_idx) {
                labels.push_back(v);
            } else {
                x.push_back(v);
            }
        }
        features.push_back(std::move(x));
    }
    if (labels.empty()) throw ConfigError("csv: no data rows");

    Dataset ds;
    ds.task = task;
    ds.meta.name = path;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != label_idx) ds.meta.feature_names.push_back(header[c]);
    }
    const auto n = static_cast<Eigen::Index>(labels.size());
    const auto d = static_cast<Eigen::Index>(header.size() - 1);
    ds.inputs.resize(n, d);
    ds.labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) ds.inputs(i, k) = features[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }

    if (task == Task::binary) {
        const std::set<double> values(labels.begin(), labels.end());
        if (values.size() != 2) {
            throw ConfigError("csv: binary task needs exactly two label values, found " + std::to_string(values.size()));
        }
        ds.meta.class_values.assign(values.begin(), values.end());
        for (Eigen::Index i = 0; i < n; ++i) {
            ds.labels(i) = labels[static_cast<std::size_t>(i)] == ds.meta.class_values.front() ? -1.0 : 1.0;
        }
        ds.meta.preprocessing.push_back("labels mapped to -1/+1");
    } else {
        const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / static_cast<double>(n);
        double var = 0.0;
        for (double y : labels) var += (y - mean) * (y - mean);
        var /= static_cast<double>(n);
        if (!(var > 0.0)) throw ConfigError("csv: regression labels are constant");
        const double sd = std::sqrt(var);
        for (Eigen::Index i = 0; i < n; ++i) ds.labels(i) = (labels[static_cast<std::size_t>(i)] - mean) / sd;
        ds.meta.label_mean = mean;
        ds.meta.label_std = sd;
        ds.meta.preprocessing.push_back("labels standardized");
    }
    validate(ds);
    return ds;
}

// ---------------------------------------------------------------------------
// PCA

PcaTransform fit_pca(const Dataset& ds, int target_dim)
{
    const Eigen::Index n = ds.size();
    const Eigen::Index d = ds.dim();
    if (target_dim < 1 || target_dim > d || target_dim > n) {
        throw ConfigError("fit_pca: target dimension " + std::to_string(target_dim) + " must be in [1, min(d, N)]");
    }
    PcaTransform t;
    t.target_dim = target_dim;
    t.mean = ds.inputs.colwise().mean().transpose();
    const RMatrix centered = ds.inputs.rowwise() - t.mean.transpose();
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    const RMatrix cov = centered.transpose() * centered / denom;
    Eigen::SelfAdjointEigenSolver<RMatrix> es(cov);
    const RVector evals = es.eigenvalues().reverse();
    const RMatrix evecs = es.eigenvectors().rowwise().reverse();

    const double top = std::max(evals(0), 0.0);
    if (!(evals(target_dim - 1) > 1e-10 * top) || top == 0.0) {
        throw ConfigError("fit_pca: target dimension exceeds the rank of the centered inputs");
    }
    t.components = evecs.leftCols(target_dim);
    t.explained_variance = evals.head(target_dim);
    for (int k = 0; k < target_dim; ++k) {
        Eigen::Index arg = 0;
        t.components.col(k).cwiseAbs().maxCoeff(&arg);
        if (t.components(arg, k) < 0) t.components.col(k) *= -1.0;
    }

    const RMatrix z = centered * t.components;
    t.proj_min = z.colwise().minCoeff().transpose();
    t.proj_max = z.colwise().maxCoeff().transpose();
    return t;
}

RMatrix project(const PcaTransform& t, const RMatrix& inputs)
{
    if (inputs.cols() != t.mean.size()) throw DimensionError("pca: input dimension mismatch");
    return (inputs.rowwise() - t.mean.transpose()) * t.components;
}

Dataset apply_pca(const PcaTransform& t, const Dataset& ds)
{
    const RMatrix z = project(t, ds.inputs);
    Dataset out = ds;
    out.inputs.resize(z.rows(), z.cols());
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
        const double lo = t.proj_min(k);
        const double span = t.proj_max(k) - lo;
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            const double u = span > 0.0 ? (z(i, k) - lo) / span : 0.5;
            out.inputs(i, k) = -kPi / 2 + kPi * std::clamp(u, 0.0, 1.0);
        }
    }
    out.meta.preprocessing.push_back("pca to " + std::to_string(t.target_dim) + " dims, rescaled to [-pi/2, pi/2]");
    return out;
}

Split split(const Dataset& ds, Eigen::Index n_train, Eigen::Index n_test, std::uint64_t seed)
{
    if (n_train < 0 || n_test < 0 || n_train + n_test > ds.size()) {
        throw ConfigError("split: requested " + std::to_string(n_train) + " + " + std::to_string(n_test) +
                          " rows from a dataset of " + std::to_string(ds.size()));
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(ds.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Eigen::Index> train(order.begin(), order.begin() + n_train);
    std::vector<Eigen::Index> test(order.begin() + n_train, order.begin() + n_train + n_test);
    return {ds.subset(train), ds.subset(test)};
}

}  // namespace qkdd
