#pragma once

// Loading-space estimation by eigenanalysis of the integrated, weighted
// autocovariance matrix
//
//     M = Σ_{k=1}^{k0} ∬ C_k(u,v) W(v) C_k(u,v)ᵀ du dv.
//
// Three weightings are supported: the projected inverse-covariance weight
// W(v) = Q {Qᵀ C_0(v,v) Q}⁻¹ Qᵀ, the identity, and the identity restricted
// to the diagonal path u = v.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ffm/autocov.hpp"
#include "ffm/curves.hpp"

namespace ffm {

enum class WeightKind { Projected, Identity, DiagonalPath };

std::string_view to_string(WeightKind kind);
WeightKind weight_kind_from_string(std::string_view name);

struct WeightSpec {
    WeightKind kind = WeightKind::Projected;
    /// Projection dimension, used only by Projected.
    Index q = 12;
    /// Seed for the Gaussian projection matrix.
    std::uint64_t seed = 0;
    /// Ridge added to Qᵀ C_0(v,v) Q before inversion.
    double ridge = 0.0;

    /// Throws ConfigError if the spec is unusable for p series.
    void validate(Index p) const;
};

/// p × q matrix with i.i.d. N(0,1) entries, reproducible from its seed.
struct ProjectionMatrix {
    MatrixXd entries;
    std::uint64_t seed = 0;
};

ProjectionMatrix make_projection(Index p, Index q, std::uint64_t seed);

/// W(v_index) = Q (Qᵀ S Q + ridge·I)⁻¹ Qᵀ with S = C_0(v, v). An extra
/// 1e-8·trace/q ridge is applied automatically when the inner matrix has
/// condition number above 1e10. Throws NumericalError if it stays singular.
MatrixXd weight_at(Index v_index, const LagAutocov& acov0, const ProjectionMatrix& Q, double ridge);

/// Symmetric nonnegative-definite estimator matrix plus provenance.
struct MMatrix {
    MatrixXd matrix;
    Index k0 = 0;
    WeightSpec weight;
    bool thresholded = false;
};

/// Estimator matrix from a panel, lags 1..k0.
MMatrix build_M(const CurvePanel& panel, Index k0, const WeightSpec& weight);

/// Same assembly from precomputed (possibly thresholded) autocovariances with
/// lags 1..k0 in order. `acov0` supplies the weight and is ignored by the
/// Identity and DiagonalPath kinds. build_M(panel) equals this applied to the
/// panel's own autocovariances bit for bit.
MMatrix build_M_from_acov(std::span<const LagAutocov> acovs, const LagAutocov& acov0, const WeightSpec& weight);

/// Streaming form of `build_M_from_acov`: feed lags one at a time so that only
/// one kernel matrix has to be alive at once.
class MAccumulator {
public:
    /// `lag0_blocks` are the G diagonal blocks C_0(v,v); may be empty unless
    /// the weight is Projected.
    MAccumulator(const WeightSpec& weight, const Grid& grid, Index p, const std::vector<MatrixXd>& lag0_blocks);

    void add(const LagAutocov& acov);
    MMatrix finish(bool thresholded = false) const;

private:
    WeightSpec weight_;
    Grid grid_;
    Index p_;
    Index lags_ = 0;
    std::vector<MatrixXd> factors_; // W(v_h) = F_h F_hᵀ
    MatrixXd lower_;
};

struct SymmetricEigen {
    /// Descending.
    VectorXd values;
    /// Column j pairs with values(j); largest-magnitude entry is positive.
    MatrixXd vectors;
};

SymmetricEigen sym_eigen(const MatrixXd& m);
inline SymmetricEigen sym_eigen(const MMatrix& m) { return sym_eigen(m.matrix); }

/// ν_{j+1}/ν_j for j = 1..p−1 after clamping eigenvalues at 1e-14·ν_1.
VectorXd eigen_ratios(const VectorXd& eigenvalues);

/// Ratio estimator: smallest j ≤ floor(c_r·p) minimizing ν_{j+1}/ν_j.
Index estimate_rank(const VectorXd& eigenvalues, double c_r = 0.75);

struct FactorEstimate {
    VectorXd eigenvalues;
    MatrixXd loadings;
    Index r_hat = 0;
    VectorXd ratios;
    WeightSpec weight;
    Index k0 = 0;
    double c_r = 0.75;
};

struct EstimateOptions {
    double c_r = 0.75;
    /// When > 0, keep this many loading columns instead of r_hat.
    Index rank = 0;
};

FactorEstimate estimate_from_M(const MMatrix& m, const EstimateOptions& opts = {});
FactorEstimate estimate_factors(const CurvePanel& panel, Index k0, const WeightSpec& weight,
                                const EstimateOptions& opts = {});

/// sqrt(1 − tr(K1K1ᵀK2K2ᵀ)/max(r1, r2)); both arguments must have orthonormal
/// columns to 1e-8.
double subspace_distance(const MatrixXd& k1, const MatrixXd& k2);

/// Sum over columns of the variance of the squared loadings.
double varimax_criterion(const MatrixXd& loadings);

struct VarimaxResult {
    MatrixXd loadings;
    MatrixXd rotation;
    bool converged = false;
    int iterations = 0;
    /// Criterion value after each iteration, starting with the input.
    std::vector<double> criterion;
};

VarimaxResult varimax(const MatrixXd& loadings, int max_iter = 500, double tol = 1e-10);

} // namespace ffm
