#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qkdd/common.hpp"

namespace qkdd {

enum class Task { regression, binary };

std::string_view to_string(Task t);
Task task_from_string(std::string_view s);

struct DatasetMeta {
    std::string name;
    std::vector<std::string> preprocessing;  ///< human-readable steps, in order
    std::vector<std::string> feature_names;
    double label_mean = 0.0;                 ///< regression standardization
    double label_std = 1.0;
    std::vector<double> class_values;        ///< binary: original values mapped to -1, +1
};

struct Dataset {
    RMatrix inputs;  ///< N x d
    RVector labels;  ///< N
    Task task = Task::regression;
    DatasetMeta meta;

    [[nodiscard]] Eigen::Index size() const noexcept { return inputs.rows(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return inputs.cols(); }

    /// Rows in the given order.
    [[nodiscard]] Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

/// Throws ConfigError on non-finite inputs or non +-1 binary labels.
void validate(const Dataset& ds);

/// Linear teacher g(x) = <w, x> on inputs uniform in [-pi/2, pi/2]^dim.
struct SyntheticSpec {
    int dim = 2;
    std::vector<double> weights;
    std::uint64_t seed = 0;
};

/// Default weights used when none are given: w_k = 1 for every k.
SyntheticSpec default_synthetic(int dim, std::uint64_t seed = 0);

Dataset synthetic(const SyntheticSpec& spec, Eigen::Index n_samples);

/// Numeric CSV with a header row. `label_column` names the target; the other
/// columns are features. Binary labels map to -1/+1 by ascending value;
/// regression labels are standardized to zero mean and unit variance.
Dataset load_csv(const std::string& path, const std::string& label_column, Task task);

/// Principal axes of the training inputs followed by a per-axis min-max
/// rescale onto [-pi/2, pi/2] (statistics from the fitting data; values
/// outside the fitted range are clamped).
struct PcaTransform {
    RVector mean;                ///< d
    RMatrix components;          ///< d x m, orthonormal columns, by decreasing variance
    RVector explained_variance;  ///< m, eigenvalues of the sample covariance
    RVector proj_min;            ///< m
    RVector proj_max;            ///< m
    int target_dim = 0;
};

PcaTransform fit_pca(const Dataset& ds, int target_dim);
Dataset apply_pca(const PcaTransform& t, const Dataset& ds);
/// Projection onto the principal axes without the angle rescale.
RMatrix project(const PcaTransform& t, const RMatrix& inputs);

struct Split {
    Dataset train;
    Dataset test;
};

/// Disjoint random split; n_train + n_test must not exceed the dataset size.
Split split(const Dataset& ds, Eigen::Index n_train, Eigen::Index n_test, std::uint64_t seed);

}  // namespace qkdd
