#include "ffm/forecast.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "ffm/error.hpp"
#include "ffm/simgen.hpp"

namespace ffm {

void ForecastConfig::validate() const
{
    if (h < 1)
        throw ConfigError("forecast horizon h must be at least 1");
    if (max_order < 1)
        throw ConfigError("max_order must be at least 1");
    if (n_scores < 1)
        throw ConfigError("n_scores must be at least 1");
    if (train_len < 0)
        throw ConfigError("train_len must be nonnegative");
    if (rank < 0)
        throw ConfigError("rank must be nonnegative");
    if (!(c_r > 0.0 && c_r <= 1.0))
        throw ConfigError("c_r must lie in (0, 1]");
    if (sparse) {
        if (cardinality && *cardinality < 1)
            throw ConfigError("cardinality must be positive");
        cv.validate();
    }
}

CurvePanel extract_factors(const CurvePanel& panel, const MatrixXd& loadings)
{
    if (loadings.rows() != panel.p())
        throw DataError("loadings have " + std::to_string(loadings.rows()) + " rows, panel has p=" +
                        std::to_string(panel.p()));
    const Index r = loadings.cols();
    if (r < 1)
        throw DataError("loadings have no columns");
    const Index G = panel.grid_size();
    MatrixXd values(panel.n(), G * r);
    for (Index g = 0; g < G; ++g)
        values.middleCols(g * r, r).noalias() = panel.at_grid(g) * loadings;
    return CurvePanel(std::move(values), panel.grid(), r);
}

namespace {

struct VarFit {
    std::vector<MatrixXd> coefs;
    MatrixXd resid_cov;
    bool ridge = false;
};

// Least squares VAR(o) without intercept on rows start..n−1 of `s`.
VarFit fit_var(const MatrixXd& s, Index o, Index start)
{
    const Index d = s.cols();
    const Index T = s.rows() - start;
    MatrixXd z(T, d * o);
    for (Index l = 1; l <= o; ++l)
        z.middleCols((l - 1) * d, d) = s.middleRows(start - l, T);
    const MatrixXd y = s.bottomRows(T);

    MatrixXd gram = z.transpose() * z;
    VarFit fit;
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().maxCoeff();
    const double bottom = es.eigenvalues().minCoeff();
    if (!(top > 0.0) || bottom <= 1e-12 * top) {
        const double trace = gram.trace() / static_cast<double>(gram.rows());
        gram.diagonal().array() += 1e-8 * (trace > 0.0 ? trace : 1.0);
        fit.ridge = true;
    }
    const MatrixXd b = gram.ldlt().solve(z.transpose() * y); // (d·o) × d
    for (Index l = 0; l < o; ++l)
        fit.coefs.push_back(b.middleRows(l * d, d).transpose());
    const MatrixXd e = y - z * b;
    fit.resid_cov = e.transpose() * e / static_cast<double>(T);
    return fit;
}

double log_det_psd(const MatrixXd& m)
{
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    const double floor = std::max(1e-300, 1e-14 * es.eigenvalues().maxCoeff());
    double sum = 0.0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i)
        sum += std::log(std::max(es.eigenvalues()(i), floor));
    return sum;
}

} // namespace

ScoreModel::ScoreModel(const MatrixXd& curves, const Grid& grid, const ForecastConfig& cfg)
{
    cfg.validate();
    if (curves.cols() != grid.size())
        throw DataError("factor curves have " + std::to_string(curves.cols()) + " grid points, grid has " +
                        std::to_string(grid.size()));
    const Index n = curves.rows();
    const Index d = cfg.n_scores;
    const Index P = cfg.max_order;
    if (n < P + d + 2)
        throw InsufficientDataError("score model needs n >= max_order + n_scores + 2 = " +
                                    std::to_string(P + d + 2) + ", got n=" + std::to_string(n));
    basis_ = fourier_basis(grid, d);
    mean_curve_ = curves.colwise().mean().transpose();
    const MatrixXd centered = curves.rowwise() - mean_curve_.transpose();
    const MatrixXd raw = centered * grid.weights().asDiagonal() * basis_.transpose();
    score_mean_ = raw.colwise().mean().transpose();
    scores_ = raw.rowwise() - score_mean_.transpose();

    const double T = static_cast<double>(n - P);
    Index best = 1;
    for (Index o = 1; o <= P; ++o) {
        const VarFit fit = fit_var(scores_, o, P);
        const double value = T * log_det_psd(fit.resid_cov) + std::log(T) * static_cast<double>(d * d * o);
        bic_.push_back(value);
        if (value < bic_[static_cast<std::size_t>(best - 1)])
            best = o;
    }
    VarFit fit = fit_var(scores_, best, best);
    coefs_ = std::move(fit.coefs);
    ridge_used_ = fit.ridge;
}

VectorXd ScoreModel::forecast_scores(Index h) const
{
    if (h < 1)
        throw ConfigError("forecast horizon h must be at least 1");
    const Index o = order();
    const Index n = scores_.rows();
    // history(0) is the most recent score vector.
    std::vector<VectorXd> history;
    for (Index l = 0; l < o; ++l)
        history.push_back(scores_.row(n - 1 - l).transpose());
    VectorXd next;
    for (Index step = 0; step < h; ++step) {
        next = VectorXd::Zero(scores_.cols());
        for (Index l = 0; l < o; ++l)
            next.noalias() += coefs_[static_cast<std::size_t>(l)] * history[static_cast<std::size_t>(l)];
        history.insert(history.begin(), next);
        history.pop_back();
    }
    return next + score_mean_;
}

VectorXd ScoreModel::forecast_curve(Index h) const
{
    return mean_curve_ + basis_.transpose() * forecast_scores(h);
}

ScoreModel fit_score_model(const MatrixXd& curves, const Grid& grid, const ForecastConfig& cfg)
{
    return ScoreModel(curves, grid, cfg);
}

FmpFit predict_fmp(const CurvePanel& panel, Index k0, const WeightSpec& weight, const ForecastConfig& cfg)
{
    cfg.validate();
    FmpFit out;
    const EstimateOptions est_opts{.c_r = cfg.c_r, .rank = cfg.rank};
    if (!cfg.sparse) {
        out.loadings = estimate_factors(panel, k0, weight, est_opts).loadings;
    } else {
        if (cfg.etas) {
            out.etas = *cfg.etas;
        } else {
            for (Index k = 1; k <= k0; ++k)
                out.etas.push_back(cv_threshold(panel, k, cfg.cv).eta);
        }
        const MMatrix m = build_M_thresholded(panel, k0, out.etas, weight);
        SparsePcaConfig pc;
        pc.r = estimate_from_M(m, est_opts).loadings.cols();
        pc.deflation = cfg.deflation;
        pc.search = cfg.search;
        pc.starts = cfg.starts;
        pc.mode = cfg.mode;
        if (cfg.cardinality) {
            pc.cardinality = *cfg.cardinality;
        } else {
            pc.cardinality = cv_cardinality(panel, k0, out.etas, weight, pc, cfg.cv).c0;
        }
        out.cardinality = pc.cardinality;
        out.loadings = sparse_pca(m, pc).loadings;
    }
    out.rank = out.loadings.cols();

    const CenteredPanel centered = center_panel(panel);
    const CurvePanel factors = extract_factors(centered.panel, out.loadings);
    const Index r = out.rank;
    const Index G = panel.grid_size();
    MatrixXd forecast(r, G);
    MatrixXd curves(panel.n(), G);
    for (Index l = 0; l < r; ++l) {
        for (Index g = 0; g < G; ++g)
            curves.col(g) = factors.values().col(g * r + l);
        const ScoreModel model(curves, panel.grid(), cfg);
        forecast.row(l) = model.forecast_curve(cfg.h).transpose();
        out.orders.push_back(model.order());
        out.ridge_used = out.ridge_used || model.ridge_used();
    }
    out.prediction = centered.mean + out.loadings * forecast;
    return out;
}

MatrixXd historical_mean_prediction(const CurvePanel& train)
{
    if (train.n() < 1)
        throw InsufficientDataError("empty training panel");
    MatrixXd out = MatrixXd::Zero(train.p(), train.grid_size());
    for (Index g = 0; g < train.grid_size(); ++g)
        out.col(g) = train.at_grid(g).colwise().mean().transpose();
    return out;
}

ForecastReport expanding_window_eval(const CurvePanel& panel, const ForecastConfig& cfg, const Predictor& predictor,
                                     const std::string& method)
{
    cfg.validate();
    const Index n = panel.n();
    const Index n1 = cfg.train_len > 0 ? cfg.train_len : n / 2;
    if (n1 < 1 || n1 + cfg.h > n)
        throw ConfigError("expanding window needs 1 <= train_len and train_len + h <= n (train_len=" +
                          std::to_string(n1) + ", h=" + std::to_string(cfg.h) + ", n=" + std::to_string(n) + ")");
    ForecastReport rep;
    rep.method = method;
    rep.h = cfg.h;
    rep.train_len = n1;
    double abs_total = 0.0;
    double sq_total = 0.0;
    for (Index end = n1; end + cfg.h <= n; ++end) {
        const MatrixXd pred = predictor(panel.head(end), cfg.h);
        if (pred.rows() != panel.p() || pred.cols() != panel.grid_size())
            throw DataError("predictor returned a " + std::to_string(pred.rows()) + "x" +
                            std::to_string(pred.cols()) + " matrix");
        const Index target = end + cfg.h - 1;
        const MatrixXd diff = pred - panel.slice(target);
        SplitError e;
        e.train_end = end;
        e.target = target;
        e.abs_error = diff.cwiseAbs().sum();
        e.sq_error = diff.squaredNorm();
        abs_total += e.abs_error;
        sq_total += e.sq_error;
        rep.splits.push_back(e);
        rep.predictions.push_back(pred);
    }
    const double denom =
        static_cast<double>(panel.p() * panel.grid_size()) * static_cast<double>(rep.splits.size());
    rep.mape = abs_total / denom;
    rep.mspe = sq_total / denom;
    return rep;
}

ForecastReport expanding_window_eval(const CurvePanel& panel, const ForecastConfig& cfg, Index k0,
                                     const WeightSpec& weight)
{
    const Predictor fmp = [&](const CurvePanel& train, Index) { return predict_fmp(train, k0, weight, cfg).prediction; };
    return expanding_window_eval(panel, cfg, fmp, cfg.sparse ? "sfmp" : "fmp");
}

} // namespace ffm
