#pragma once

// Sparse loading estimation: thresholded estimator matrix, cardinality-
// constrained PCA, and the blockwise cross-validation used to tune the
// thresholds and the per-column cardinality.

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ffm/estimator.hpp"

namespace ffm {

enum class Deflation { Schur, Projection };
enum class SupportSearch { GreedyForward, Exhaustive };
/// Column: each column has its own support of size ≤ C0.
/// Row: all columns share one support of ≤ C0 rows.
enum class SparsityMode { Column, Row };

std::string_view to_string(Deflation d);
std::string_view to_string(SupportSearch s);
std::string_view to_string(SparsityMode m);
Deflation deflation_from_string(std::string_view s);
SupportSearch support_search_from_string(std::string_view s);
SparsityMode sparsity_mode_from_string(std::string_view s);

struct SparsePcaConfig {
    Index r = 1;
    Index cardinality = 1;
    Deflation deflation = Deflation::Schur;
    SupportSearch search = SupportSearch::GreedyForward;
    SparsityMode mode = SparsityMode::Column;
    /// Greedy search is restarted from this many seeds (the indices with the
    /// largest diagonal entries) and keeps the best support.
    Index starts = 10;

    void validate(Index p) const;
};

struct SparsePcaResult {
    /// p × r, orthonormal columns, ≤ C0 nonzeros per column.
    MatrixXd loadings;
    /// Support (sorted) of each column.
    std::vector<std::vector<Index>> supports;
    /// ⟨M, KKᵀ⟩ on the input matrix.
    double objective = 0.0;
};

/// Largest eigenvalue of the principal submatrix m[S, S].
double principal_leading_eigenvalue(const MatrixXd& m, std::span<const Index> support);

/// Cardinality-constrained PCA of a symmetric PSD matrix.
///
/// Column mode extracts components one at a time: pick a support by greedy
/// forward selection (multi-start, see SparsePcaConfig::starts) or exhaustive search on the leading eigenvalue of the
/// principal submatrix of the current deflated matrix, take the leading
/// eigenvector of that submatrix restricted to the orthogonal complement of
/// the columns found so far, then deflate. Row mode picks one shared support
/// maximizing the sum of the top-r eigenvalues and returns the top-r
/// eigenvectors of that principal submatrix.
SparsePcaResult sparse_pca(const MatrixXd& m, const SparsePcaConfig& cfg);
inline SparsePcaResult sparse_pca(const MMatrix& m, const SparsePcaConfig& cfg) { return sparse_pca(m.matrix, cfg); }

/// Estimator matrix assembled from thresholded autocovariances, one threshold
/// per lag 1..k0. The weight still uses the unthresholded lag-0 covariance.
MMatrix build_M_thresholded(const CurvePanel& panel, Index k0, std::span<const double> etas,
                            const WeightSpec& weight);

/// One estimator matrix to assemble in `build_M_batch`.
struct MRequest {
    WeightSpec weight;
    /// One threshold per lag, or empty for no thresholding.
    std::vector<double> etas;
};

/// Assembles several estimator matrices from one pass over the lags, so each
/// autocovariance is computed once. Each result equals the corresponding
/// `build_M` / `build_M_thresholded` call bit for bit.
std::vector<MMatrix> build_M_batch(const CurvePanel& panel, Index k0, std::span<const MRequest> requests);

struct CvConfig {
    int folds = 5;
    /// Candidate thresholds; empty selects a default grid from the data.
    std::vector<double> eta_grid;
    /// Candidate cardinalities.
    std::vector<Index> c0_grid;

    void validate() const;
};

/// Consecutive blocks [begin, end) partitioning 0..n−1 into `folds` groups of
/// near-equal size; the first n % folds blocks get one extra point.
std::vector<std::pair<Index, Index>> make_folds(Index n, int folds);

/// 0 followed by 19 log-spaced values from 1e-3·max to max, where max is the
/// largest entrywise HS norm of the lag-k autocovariance.
std::vector<double> default_eta_grid(const LagAutocov& acov);

struct CvThresholdResult {
    Index lag = 0;
    double eta = 0.0;
    std::vector<double> grid;
    std::vector<double> scores;
    std::vector<std::pair<Index, Index>> folds;
};

/// Picks the threshold minimizing the mean over folds of
/// ‖T_η(C_k^{train}) − C_k^{valid}‖²_{S,F}; ties go to the smallest η.
CvThresholdResult cv_threshold(const CurvePanel& panel, Index k, const CvConfig& cfg);

struct CvCardinalityResult {
    Index c0 = 0;
    std::vector<Index> grid;
    std::vector<double> scores;
    std::vector<std::pair<Index, Index>> folds;
};

/// Picks C0 minimizing the mean subspace distance between sparse loadings of
/// the thresholded training matrix and ordinary loadings of the validation
/// block; ties go to the smallest C0. `base` supplies r, deflation, search
/// and mode; its cardinality is overridden by each grid value.
CvCardinalityResult cv_cardinality(const CurvePanel& panel, Index k0, std::span<const double> etas,
                                   const WeightSpec& weight, const SparsePcaConfig& base, const CvConfig& cfg);

struct TspcaOptions {
    Index k0 = 4;
    WeightSpec weight;
    SparsePcaConfig pca;
    CvConfig cv;
    /// When set, skip threshold CV and use these (one per lag).
    std::optional<std::vector<double>> etas;
    /// When set, skip cardinality CV and use pca.cardinality.
    bool fixed_cardinality = false;
};

struct TspcaResult {
    std::vector<double> etas;
    std::vector<CvThresholdResult> eta_reports;
    std::optional<CvCardinalityResult> c0_report;
    Index c0 = 0;
    MMatrix m;
    SparsePcaResult pca;
};

/// Thresholding + sparse PCA, with CV tuning of whatever is not fixed.
TspcaResult tspca(const CurvePanel& panel, const TspcaOptions& opts);

} // namespace ffm
