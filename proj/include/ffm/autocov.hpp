#pragma once

#include <vector>

#include "ffm/curves.hpp"

namespace ffm {

/// Sample lag-k autocovariance of a curve panel:
///
///     C_k(u, v) = (n−k)⁻¹ Σ_{t=1}^{n−k} {Y_{t+k}(u) − Ȳ(u)} {Y_t(v) − Ȳ(v)}ᵀ
///
/// held as a p × p matrix of kernels on the G × G grid.
struct LagAutocov {
    Index lag = 0;
    BivariateKernelMatrix kernels;
    Index n_used = 0;

    Index p() const { return kernels.rows(); }
    const Grid& grid() const { return kernels.grid(); }
};

/// Requires 0 ≤ k ≤ n−2. Lag-0 output is symmetrized under the joint
/// (i, j) / (u, v) swap.
LagAutocov lag_autocov(const CurvePanel& panel, Index k);

/// The G diagonal blocks C_0(v_g, v_g) (each p × p, symmetrized), bitwise equal
/// to the corresponding blocks of `lag_autocov(panel, 0)` without forming the
/// full lag-0 kernel matrix.
std::vector<MatrixXd> lag0_diagonal(const CurvePanel& panel);

/// The G diagonal blocks of an existing lag-0 autocovariance.
std::vector<MatrixXd> lag0_diagonal(const LagAutocov& acov0);

/// p × p matrix of Hilbert–Schmidt norms of the kernel entries.
MatrixXd hs_norm_matrix(const LagAutocov& acov);

/// Hard functional thresholding: entry (i, j) is kept iff its HS norm ≥ eta,
/// otherwise replaced by the zero kernel. Ties are kept.
LagAutocov functional_threshold(const LagAutocov& acov, double eta);

/// Same rule, reusing precomputed norms from `hs_norm_matrix`.
LagAutocov functional_threshold(const LagAutocov& acov, double eta, const MatrixXd& norms);

} // namespace ffm
