#include "qkdd/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "qkdd/parallel.hpp"
#include "qkdd/seeding.hpp"

namespace qkdd {

MpLaw::MpLaw(double ratio) : c(ratio)
{
    if (!(ratio > 0.0)) throw DimensionError("MpLaw: ratio must be positive");
    const double r = std::sqrt(ratio);
    lambda_minus = (1.0 - r) * (1.0 - r);
    lambda_plus = (1.0 + r) * (1.0 + r);
}

double mp_density(const MpLaw& law, double x)
{
    if (!(x > 0.0)) throw DimensionError("mp_density: x must be positive");
    if (x <= law.lambda_minus || x >= law.lambda_plus) return 0.0;
    return std::sqrt((x - law.lambda_minus) * (law.lambda_plus - x)) / (2.0 * kPi * x * law.c);
}

double mp_mass(const MpLaw& law, double a, double b)
{
    const double lo = std::max(a, law.lambda_minus);
    const double hi = std::min(b, law.lambda_plus);
    if (hi <= lo) return 0.0;

    // x = lm + w (1 - cos phi) / 2 turns f(x) dx into a bounded integrand in phi.
    const double lm = law.lambda_minus;
    const double w = law.lambda_plus - law.lambda_minus;
    auto phi_of = [&](double x) { return std::acos(std::clamp(1.0 - 2.0 * (x - lm) / w, -1.0, 1.0)); };
    auto integrand = [&](double phi) {
        const double s = std::sin(phi);
        const double x = lm + 0.5 * w * (1.0 - std::cos(phi));
        if (x <= 0.0) return w / (2.0 * kPi * law.c);  // limit phi -> 0 when lm = 0
        return 0.25 * w * w * s * s / (2.0 * kPi * law.c * x);
    };

    const double p0 = phi_of(lo);
    const double p1 = phi_of(hi);
    constexpr int intervals = 2048;  // Simpson, even
    const double h = (p1 - p0) / intervals;
    double acc = integrand(p0) + integrand(p1);
    for (int k = 1; k < intervals; ++k) acc += (k % 2 ? 4.0 : 2.0) * integrand(p0 + k * h);
    return acc * h / 3.0;
}

EmpiricalSpectrum empirical_spectrum(const CMatrix& d, bool normalize)
{
    if (d.rows() < 1 || d.cols() < 1) throw DimensionError("empirical_spectrum: empty matrix");
    Eigen::JacobiSVD<CMatrix> svd(d);
    EmpiricalSpectrum out;
    out.p = d.cols();
    out.n_samples = d.rows();
    out.eigenvalues = RVector::Zero(out.p);
    const RVector& s = svd.singularValues();
    const double scale = normalize ? 1.0 / static_cast<double>(d.rows()) : 1.0;
    for (Eigen::Index k = 0; k < s.size(); ++k) out.eigenvalues(k) = s(k) * s(k) * scale;
    return out;
}

EmpiricalSpectrum empirical_spectrum(const DataMatrix& dm, bool normalize)
{
    return empirical_spectrum(dm.rows, normalize);
}

EmpiricalSpectrum gaussian_spectrum(Eigen::Index p, Eigen::Index n_samples, std::uint64_t seed)
{
    if (p < 1 || n_samples < 1) throw DimensionError("gaussian_spectrum: sizes must be positive");
    Rng rng(seed);
    std::normal_distribution<double> normal;
    RMatrix x(n_samples, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < n_samples; ++i) x(i, j) = normal(rng);
    }
    const RMatrix cov = (x.transpose() * x) / static_cast<double>(n_samples);
    Eigen::SelfAdjointEigenSolver<RMatrix> es(cov, Eigen::EigenvaluesOnly);
    EmpiricalSpectrum out;
    out.p = p;
    out.n_samples = n_samples;
    out.eigenvalues = es.eigenvalues().reverse().cwiseMax(0.0);
    return out;
}

Histogram histogram(const RVector& values, int bins, double lo, double hi)
{
    if (bins < 1 || !(hi > lo)) throw DimensionError("histogram: bad binning");
    Histogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    h.mass.assign(static_cast<std::size_t>(bins), 0.0);
    const double width = (hi - lo) / bins;
    for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + b * width;
    if (values.size() == 0) return h;
    const double unit = 1.0 / static_cast<double>(values.size());
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        const double v = values(k);
        if (v < lo || v > hi) continue;
        const int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
        h.mass[static_cast<std::size_t>(b)] += unit;
    }
    return h;
}

double histogram_l1(const EmpiricalSpectrum& spectrum, const MpLaw& law, int bins, double range_factor)
{
    const Histogram h = histogram(spectrum.eigenvalues, bins, 0.0, range_factor * law.lambda_plus);
    double l1 = 0.0;
    for (std::size_t b = 0; b < h.mass.size(); ++b) {
        double expected = mp_mass(law, h.edges[b], h.edges[b + 1]);
        if (b == 0 && law.c > 1.0) expected += 1.0 - 1.0 / law.c;
        l1 += std::abs(h.mass[b] - expected);
    }
    return l1;
}

double edge_fraction(const EmpiricalSpectrum& spectrum, const MpLaw& law, double factor)
{
    if (spectrum.eigenvalues.size() == 0) return 0.0;
    const double threshold = factor * law.lambda_plus;
    const auto above = (spectrum.eigenvalues.array() > threshold).count();
    return static_cast<double>(above) / static_cast<double>(spectrum.eigenvalues.size());
}

MpCheckReport mp_check(Eigen::Index p, Eigen::Index n_samples, int trials, std::uint64_t seed)
{
    if (trials < 1) throw ConfigError("mp_check: trials must be >= 1");
    constexpr int bins = 40;
    constexpr double range_factor = 1.1;
    const MpLaw law(static_cast<double>(p) / static_cast<double>(n_samples));
    std::vector<Histogram> hists(static_cast<std::size_t>(trials));
    std::vector<double> l1(hists.size());
    std::vector<double> edge(hists.size());
    parallel_for_index(hists.size(), [&](std::size_t t) {
        const auto spectrum = gaussian_spectrum(p, n_samples, derive_seed(seed, 0, t, "mp-check"));
        hists[t] = histogram(spectrum.eigenvalues, bins, 0.0, range_factor * law.lambda_plus);
        l1[t] = histogram_l1(spectrum, law, bins, range_factor);
        edge[t] = edge_fraction(spectrum, law);
    });

    MpCheckReport r;
    r.trials = trials;
    std::vector<double> mean_mass(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t t = 0; t < hists.size(); ++t) {
        r.mean_trial_l1 += l1[t];
        r.edge_fraction += edge[t];
        for (std::size_t b = 0; b < mean_mass.size(); ++b) mean_mass[b] += hists[t].mass[b];
    }
    r.mean_trial_l1 /= trials;
    r.edge_fraction /= trials;
    const auto& edges = hists.front().edges;
    for (std::size_t b = 0; b < mean_mass.size(); ++b) {
        double expected = mp_mass(law, edges[b], edges[b + 1]);
        if (b == 0 && law.c > 1.0) expected += 1.0 - 1.0 / law.c;
        r.l1_distance += std::abs(mean_mass[b] / trials - expected);
    }
    return r;
}

std::vector<MinSigmaPoint> min_singular_curve(const Sampler& sampler, std::span<const int> n_grid, int repetitions,
                                              std::uint64_t seed, double rank_cutoff)
{
    if (n_grid.empty()) throw ConfigError("min_singular_curve: empty grid");
    if (repetitions < 1) throw ConfigError("min_singular_curve: repetitions must be >= 1");
    const auto reps = static_cast<std::size_t>(repetitions);
    std::vector<double> cell(n_grid.size() * reps);
    parallel_for_index(cell.size(), [&](std::size_t idx) {
        const std::size_t g = idx / reps;
        const std::size_t r = idx % reps;
        const auto n = static_cast<std::size_t>(n_grid[g]);
        const DataMatrix dm = sampler(n, derive_seed(seed, n, r, "min-sigma"));
        const SvdFactors f = compute_svd(dm.rows, rank_cutoff);
        cell[idx] = f.rank() ? f.sigma(f.rank() - 1) : 0.0;
    });

    std::vector<MinSigmaPoint> out;
    out.reserve(n_grid.size());
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
        double acc = 0.0;
        for (std::size_t r = 0; r < reps; ++r) acc += cell[g * reps + r];
        out.push_back({n_grid[g], acc / static_cast<double>(reps)});
    }
    return out;
}

void write_xy_csv(std::ostream& out, std::span<const double> x, std::span<const double> f)
{
    if (x.size() != f.size()) throw DimensionError("write_xy_csv: column lengths differ");
    out << "x,f\n";
    out.precision(17);
    for (std::size_t k = 0; k < x.size(); ++k) out << x[k] << ',' << f[k] << '\n';
}

}  // namespace qkdd
