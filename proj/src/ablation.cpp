#include "qkdd/exp.hpp"

namespace qkdd {

DataMatrix ablate_sv_cutoff(const DataMatrix& dm, double cutoff)
{
    if (cutoff < 0.0) throw ConfigError("ablate_sv_cutoff: cutoff must be non-negative");
    Eigen::BDCSVD<CMatrix> svd(dm.rows, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector& s = svd.singularValues();
    Eigen::Index kept = 0;
    while (kept < s.size() && s(kept) >= cutoff && s(kept) > 0.0) ++kept;
    if (kept == 0) {
        throw NumericalGuardError("ablate_sv_cutoff: cutoff " + std::to_string(cutoff) +
                                  " removes every singular value");
    }
    DataMatrix out = dm;
    if (kept == s.size()) return out;
    out.rows = svd.matrixU().leftCols(kept) * s.head(kept).cast<cplx>().asDiagonal() *
               svd.matrixV().leftCols(kept).adjoint();
    return out;
}

CMatrix projection_basis(const DataMatrix& reference, int n_modes_kept, double rank_cutoff)
{
    if (n_modes_kept < 1) throw ConfigError("projection_basis: n_modes_kept must be >= 1");
    const SvdFactors f = compute_svd(reference.rows, rank_cutoff);
    if (n_modes_kept > f.rank()) {
        throw ConfigError("projection_basis: n_modes_kept = " + std::to_string(n_modes_kept) +
                          " exceeds the reference rank " + std::to_string(f.rank()));
    }
    return f.v.leftCols(n_modes_kept);
}

CMatrix ablate_test_projection(const CMatrix& test_rows, const DataMatrix& reference, int n_modes_kept,
                               double rank_cutoff)
{
    const CMatrix basis = projection_basis(reference, n_modes_kept, rank_cutoff);
    if (test_rows.cols() != basis.rows()) throw DimensionError("ablate_test_projection: row length mismatch");
    // Rows are co-vectors f^dagger, so projecting f onto span(V_k) gives f^dagger V_k V_k^dagger.
    return (test_rows * basis) * basis.adjoint();
}

SweepResult ablate_residual(SweepConfig cfg)
{
    cfg.ablation = AblationConfig{AblationMode::residual_elimination, 0.0, 1};
    return run_sweep(cfg);
}

}  // namespace qkdd
