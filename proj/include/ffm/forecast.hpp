#pragma once

// Factor-model prediction: estimate loadings, extract factor curves, forecast
// each factor curve through a VAR on its leading Fourier scores, and map the
// forecasts back through the loadings. Plus expanding-window evaluation.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ffm/estimator.hpp"
#include "ffm/sparse.hpp"

namespace ffm {

struct ForecastConfig {
    Index h = 1;
    /// Largest VAR order tried by BIC.
    Index max_order = 3;
    /// Fourier scores kept per factor curve.
    Index n_scores = 5;
    /// Initial training length n1 of the expanding window; 0 means n/2.
    Index train_len = 0;
    /// Number of factors; 0 uses the ratio estimator.
    Index rank = 0;
    double c_r = 0.75;

    /// SFMP (thresholding + sparse PCA loadings) instead of FMP.
    bool sparse = false;
    /// SFMP: fixed cardinality; unset selects it by cross-validation over cv.c0_grid.
    std::optional<Index> cardinality;
    /// SFMP: fixed thresholds (one per lag); unset selects them by cross-validation.
    std::optional<std::vector<double>> etas;
    CvConfig cv;
    Deflation deflation = Deflation::Schur;
    SupportSearch search = SupportSearch::GreedyForward;
    Index starts = 10;
    SparsityMode mode = SparsityMode::Column;

    void validate() const;
};

/// X̂_t(u_g) = Kᵀ Y_t(u_g): an n-by-r panel of factor curves.
CurvePanel extract_factors(const CurvePanel& panel, const MatrixXd& loadings);

/// VAR model on the leading Fourier scores of a univariate functional series.
class ScoreModel {
public:
    /// `curves` is n × G, one curve per row, sampled on `grid`.
    ScoreModel(const MatrixXd& curves, const Grid& grid, const ForecastConfig& cfg);

    Index order() const { return static_cast<Index>(coefs_.size()); }
    /// Lag coefficient matrices A_1..A_o of the demeaned score VAR.
    const std::vector<MatrixXd>& coefficients() const { return coefs_; }
    /// BIC for orders 1..max_order on the common effective sample.
    const std::vector<double>& bic() const { return bic_; }
    bool ridge_used() const { return ridge_used_; }
    /// n × n_scores demeaned scores.
    const MatrixXd& scores() const { return scores_; }
    const VectorXd& score_mean() const { return score_mean_; }

    /// h-step-ahead forecast of the score vector (mean added back).
    VectorXd forecast_scores(Index h) const;
    /// h-step-ahead forecast of the curve on the grid.
    VectorXd forecast_curve(Index h) const;

private:
    MatrixXd basis_;      // n_scores × G
    VectorXd mean_curve_; // G
    VectorXd score_mean_;
    MatrixXd scores_;
    std::vector<MatrixXd> coefs_;
    std::vector<double> bic_;
    bool ridge_used_ = false;
};

ScoreModel fit_score_model(const MatrixXd& curves, const Grid& grid, const ForecastConfig& cfg);

struct FmpFit {
    /// p × G forecast of Y_{n+h}.
    MatrixXd prediction;
    MatrixXd loadings;
    Index rank = 0;
    /// Selected VAR order per factor.
    std::vector<Index> orders;
    bool ridge_used = false;
    /// SFMP only.
    std::vector<double> etas;
    Index cardinality = 0;
};

/// h-step-ahead prediction from the whole panel.
FmpFit predict_fmp(const CurvePanel& panel, Index k0, const WeightSpec& weight, const ForecastConfig& cfg);

/// Maps a training prefix to the p × G prediction of the curve h steps past
/// its end.
using Predictor = std::function<MatrixXd(const CurvePanel& train, Index h)>;

/// Per-series mean of the training curves.
MatrixXd historical_mean_prediction(const CurvePanel& train);

struct SplitError {
    /// Training prefix length.
    Index train_end = 0;
    /// 0-based time index predicted.
    Index target = 0;
    double abs_error = 0.0;
    double sq_error = 0.0;
};

struct ForecastReport {
    std::string method;
    Index h = 1;
    Index train_len = 0;
    double mape = 0.0;
    double mspe = 0.0;
    std::vector<SplitError> splits;
    std::vector<MatrixXd> predictions;
};

/// Expanding window: for every training length n1..n−h, predict the curve h
/// steps ahead and accumulate absolute and squared errors; both totals are
/// divided by p·G·(number of splits).
ForecastReport expanding_window_eval(const CurvePanel& panel, const ForecastConfig& cfg, const Predictor& predictor,
                                     const std::string& method);

/// FMP or SFMP (per cfg.sparse) under the expanding window, refitting every split.
ForecastReport expanding_window_eval(const CurvePanel& panel, const ForecastConfig& cfg, Index k0,
                                     const WeightSpec& weight);

} // namespace ffm
