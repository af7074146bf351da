#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "qkdd/common.hpp"
#include "qkdd/regress.hpp"

namespace qkdd {

/// Marchenko-Pastur law for aspect ratio c = p / N.
struct MpLaw {
    double c = 1.0;
    double lambda_minus = 0.0;
    double lambda_plus = 4.0;

    explicit MpLaw(double ratio);
};

/// Continuous part of the density; zero outside [lambda_minus, lambda_plus].
/// Throws DimensionError for x <= 0.
double mp_density(const MpLaw& law, double x);

/// Mass of the continuous part over [a, b] (quadrature in the arcsine
/// variable, which removes the edge singularities).
double mp_mass(const MpLaw& law, double a, double b);

struct EmpiricalSpectrum {
    RVector eigenvalues;  ///< descending, length p
    Eigen::Index p = 0;
    Eigen::Index n_samples = 0;
};

/// Eigenvalues of D^dagger D (or D^dagger D / N) via squared singular values,
/// zero-padded to the p = cols(D) eigenvalues of the covariance.
EmpiricalSpectrum empirical_spectrum(const CMatrix& d, bool normalize);
EmpiricalSpectrum empirical_spectrum(const DataMatrix& dm, bool normalize);

/// Spectrum of X^T X / N for an N x p matrix of i.i.d. standard normals.
EmpiricalSpectrum gaussian_spectrum(Eigen::Index p, Eigen::Index n_samples, std::uint64_t seed);

struct Histogram {
    std::vector<double> edges;  ///< bins + 1
    std::vector<double> mass;   ///< fraction of eigenvalues per bin
};

/// Uniform bins over [lo, hi]; eigenvalues outside the range are dropped
/// from the bins (but still count in the denominator).
Histogram histogram(const RVector& values, int bins, double lo, double hi);

/// sum over bins |empirical mass - MP mass|, 40 bins over [0, 1.1 lambda_plus]
/// unless given. For c > 1 the atom of mass 1 - 1/c at zero is added to the
/// first bin.
double histogram_l1(const EmpiricalSpectrum& spectrum, const MpLaw& law, int bins = 40, double range_factor = 1.1);

/// Fraction of eigenvalues above factor * lambda_plus.
double edge_fraction(const EmpiricalSpectrum& spectrum, const MpLaw& law, double factor = 1.05);

struct MpCheckReport {
    double l1_distance = 0.0;          ///< L1 distance of the trial-averaged histogram
    double mean_trial_l1 = 0.0;        ///< per-trial L1 distances, averaged
    double edge_fraction = 0.0;        ///< pooled over trials
    int trials = 0;
};

MpCheckReport mp_check(Eigen::Index p, Eigen::Index n_samples, int trials, std::uint64_t seed);

struct MinSigmaPoint {
    Eigen::Index n_samples = 0;
    double mean_min_sigma = 0.0;
};

/// For each N draws `repetitions` training sets from `sampler` and averages
/// the smallest retained singular value of D. Seeds derive from (seed, N, rep).
std::vector<MinSigmaPoint> min_singular_curve(const Sampler& sampler, std::span<const int> n_grid, int repetitions,
                                              std::uint64_t seed, double rank_cutoff = kDefaultRankCutoff);

/// Two-column CSV "x,f".
void write_xy_csv(std::ostream& out, std::span<const double> x, std::span<const double> f);

}  // namespace qkdd
