#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "ffm/error.hpp"
#include "ffm/forecast.hpp"
#include "ffm/simgen.hpp"
#include "support/oracles.hpp"

using namespace ffm;

namespace {

// n × G curves Σ_i s_{t,i} φ_i with s a diagonal VAR(1) with coefficient phi
// (phi = 0 gives white noise scores).
MatrixXd var1_curves(Index n, Index d, double phi, const Grid& grid, std::uint64_t seed, MatrixXd* scores = nullptr)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    MatrixXd s(n, d);
    VectorXd state = VectorXd::Zero(d);
    for (Index t = -100; t < n; ++t) {
        for (Index i = 0; i < d; ++i)
            state(i) = phi * state(i) + z(rng);
        if (t >= 0)
            s.row(t) = state.transpose();
    }
    if (scores)
        *scores = s;
    return s * fourier_basis(grid, d);
}

ForecastConfig small_config(Index n_scores = 3, Index max_order = 3)
{
    ForecastConfig cfg;
    cfg.n_scores = n_scores;
    cfg.max_order = max_order;
    return cfg;
}

CurvePanel permute_series(const CurvePanel& panel, const std::vector<Index>& perm)
{
    return panel.select_series(perm);
}

} // namespace

TEST(ExtractFactors, IdentityLoadingsReturnPanel)
{
    const CurvePanel panel = oracle::random_panel(6, 4, 5, 1);
    const CurvePanel x = extract_factors(panel, MatrixXd::Identity(4, 4));
    EXPECT_EQ(x.values(), panel.values());
}

TEST(ExtractFactors, NoiselessPanelGivesFactorsBack)
{
    const MatrixXd k = oracle::random_orthonormal(7, 2, 2);
    const CurvePanel x = oracle::random_panel(9, 2, 6, 3);
    std::vector<MatrixXd> slices;
    for (Index t = 0; t < x.n(); ++t)
        slices.push_back(k * x.slice(t));
    const CurvePanel y = CurvePanel::from_slices(slices, x.grid());
    const CurvePanel back = extract_factors(y, k);
    EXPECT_LE((back.values() - x.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExtractFactors, EqualWeightsGiveScaledAverage)
{
    const CurvePanel panel = oracle::random_panel(5, 4, 3, 4);
    const CurvePanel x = extract_factors(panel, VectorXd::Constant(4, 0.5));
    for (Index t = 0; t < 5; ++t)
        for (Index g = 0; g < 3; ++g) {
            double avg = 0.0;
            for (Index j = 0; j < 4; ++j)
                avg += panel.value(t, j, g);
            avg /= 4.0;
            EXPECT_NEAR(x.value(t, 0, g), 2.0 * avg, 1e-14);
        }
}

TEST(ExtractFactors, DimensionMismatch)
{
    const CurvePanel panel = oracle::random_panel(5, 4, 3, 4);
    EXPECT_THROW(extract_factors(panel, MatrixXd::Identity(3, 3)), DataError);
    EXPECT_THROW(extract_factors(panel, MatrixXd(4, 0)), DataError);
}

TEST(ScoreModel, RecoversVar1CoefficientAndOrder)
{
    const Grid grid = Grid::uniform(41);
    int order_one = 0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        const MatrixXd curves = var1_curves(2000, 3, 0.6, grid, static_cast<std::uint64_t>(seed));
        const ScoreModel model = fit_score_model(curves, grid, small_config());
        EXPECT_EQ(model.bic().size(), 3u);
        if (model.order() == 1) {
            ++order_one;
            // The shared coefficient is estimated by the mean diagonal entry
            // (standard error about 0.01); single entries have about 0.018.
            const MatrixXd& a = model.coefficients()[0];
            EXPECT_NEAR(a.diagonal().mean(), 0.6, 0.05) << "seed " << seed;
            for (Index i = 0; i < 3; ++i)
                for (Index j = 0; j < 3; ++j)
                    EXPECT_NEAR(a(i, j), i == j ? 0.6 : 0.0, 0.1) << "seed " << seed;
        }
    }
    EXPECT_GE(order_one, static_cast<int>(0.9 * seeds));
}

TEST(ScoreModel, WhiteNoiseForecastIsTheMean)
{
    const Grid grid = Grid::uniform(41);
    for (int seed = 0; seed < 5; ++seed) {
        const MatrixXd curves = var1_curves(2000, 3, 0.0, grid, 100 + static_cast<std::uint64_t>(seed));
        const ScoreModel model = fit_score_model(curves, grid, small_config());
        EXPECT_EQ(model.order(), 1);
        // Coefficients are O(1/√n); the forecast is within a few of those of the mean.
        for (Index h = 1; h <= 3; ++h)
            EXPECT_LE((model.forecast_scores(h) - model.score_mean()).cwiseAbs().maxCoeff(), 0.25);
    }
}

TEST(ScoreModel, ConstantCurvesForecastTheConstant)
{
    const Grid grid = Grid::uniform(21);
    const VectorXd pattern = (grid.points().array() * 3.0).sin().matrix();
    MatrixXd curves(30, 21);
    for (Index t = 0; t < 30; ++t)
        curves.row(t) = pattern.transpose();
    const ScoreModel model = fit_score_model(curves, grid, small_config());
    EXPECT_TRUE(model.ridge_used());
    for (Index h = 1; h <= 4; ++h)
        EXPECT_LE((model.forecast_curve(h) - pattern).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ScoreModel, Errors)
{
    const Grid grid = Grid::uniform(21);
    const MatrixXd curves = var1_curves(7, 3, 0.5, grid, 1);
    EXPECT_THROW(fit_score_model(curves, grid, small_config()), InsufficientDataError);
    EXPECT_NO_THROW(fit_score_model(var1_curves(8, 3, 0.5, grid, 1), grid, small_config()));
    EXPECT_THROW(fit_score_model(var1_curves(50, 3, 0.5, grid, 1), Grid::uniform(20), small_config()), DataError);
    ForecastConfig bad = small_config();
    bad.max_order = 0;
    EXPECT_THROW(fit_score_model(var1_curves(50, 3, 0.5, grid, 1), grid, bad), ConfigError);
    const ScoreModel model = fit_score_model(var1_curves(50, 3, 0.5, grid, 1), grid, small_config());
    EXPECT_THROW(model.forecast_scores(0), ConfigError);
}

TEST(ScoreModel, MultiStepFollowsTheRecursion)
{
    const Grid grid = Grid::uniform(41);
    const MatrixXd curves = var1_curves(300, 2, 0.7, grid, 5);
    const ScoreModel model = fit_score_model(curves, grid, small_config(2, 1));
    ASSERT_EQ(model.order(), 1);
    const MatrixXd& a = model.coefficients()[0];
    VectorXd s = model.scores().row(299).transpose();
    for (Index h = 1; h <= 4; ++h) {
        s = a * s;
        EXPECT_LE((model.forecast_scores(h) - (s + model.score_mean())).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(PredictFmp, ConstantFactorsReturnTheConstantPattern)
{
    const Grid grid = Grid::uniform(11);
    const MatrixXd pattern = oracle::random_panel(1, 5, 11, 6).slice(0);
    std::vector<MatrixXd> slices(40, pattern);
    const CurvePanel panel = CurvePanel::from_slices(slices, grid);
    ForecastConfig cfg = small_config();
    cfg.rank = 1;
    const FmpFit fit = predict_fmp(panel, 2, WeightSpec{WeightKind::Identity, 0, 0, 0.0}, cfg);
    EXPECT_LE((fit.prediction - pattern).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PredictFmp, NoiselessRankOneErrorShrinksWithN)
{
    const Grid grid = Grid::uniform(31);
    const VectorXd a = (VectorXd(4) << 1.0, -0.5, 0.8, 0.3).finished();
    auto error_at = [&](Index n, std::uint64_t seed) {
        MatrixXd s;
        const MatrixXd x = var1_curves(n, 3, 0.6, grid, seed, &s);
        std::vector<MatrixXd> slices;
        for (Index t = 0; t < n; ++t)
            slices.push_back(a * x.row(t));
        const CurvePanel panel = CurvePanel::from_slices(slices, grid);
        ForecastConfig cfg = small_config();
        cfg.rank = 1;
        const FmpFit fit = predict_fmp(panel, 2, WeightSpec{WeightKind::Identity, 0, 0, 0.0}, cfg);
        // Conditional mean of the next curve.
        const MatrixXd truth = a * (0.6 * s.row(n - 1) * fourier_basis(grid, 3));
        return (fit.prediction - truth).norm() / truth.norm();
    };
    double small_n = 0.0;
    double large_n = 0.0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        small_n += error_at(60, seed);
        large_n += error_at(20000, seed);
    }
    EXPECT_LT(large_n, small_n);
    EXPECT_LE(large_n / 6.0, 0.05);
}

TEST(PredictFmp, FullCardinalitySparseMatchesFmp)
{
    SimConfig sim;
    sim.n = 60;
    sim.p = 8;
    sim.r = 2;
    sim.n_basis = 10;
    const Grid grid = Grid::uniform(15);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        sim.seed = seed;
        const CurvePanel panel = gen_panel(sim, grid).panel;
        ForecastConfig cfg = small_config();
        cfg.rank = 2;
        const WeightSpec w{WeightKind::Projected, 5, seed, 0.0};
        const FmpFit fmp = predict_fmp(panel, 2, w, cfg);
        cfg.sparse = true;
        cfg.cardinality = sim.p;
        cfg.etas = std::vector<double>{0.0, 0.0};
        const FmpFit sfmp = predict_fmp(panel, 2, w, cfg);
        EXPECT_EQ(sfmp.cardinality, sim.p);
        EXPECT_LE((sfmp.prediction - fmp.prediction).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(PredictFmp, ReconstructionIdentity)
{
    // r = p with identity loadings and a perfect factor forecaster reproduces
    // the target curves.
    const CurvePanel panel = oracle::random_panel(10, 3, 7, 8);
    const MatrixXd k = MatrixXd::Identity(3, 3);
    const CurvePanel factors = extract_factors(panel, k);
    for (Index t = 0; t < panel.n(); ++t)
        EXPECT_LE((k * factors.slice(t) - panel.slice(t)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ExpandingWindow, OraclePredictorHasZeroError)
{
    const CurvePanel panel = oracle::random_panel(12, 3, 4, 9);
    ForecastConfig cfg;
    cfg.h = 2;
    cfg.train_len = 5;
    const Predictor perfect = [&](const CurvePanel& train, Index h) { return panel.slice(train.n() + h - 1); };
    const ForecastReport rep = expanding_window_eval(panel, cfg, perfect, "oracle");
    EXPECT_EQ(rep.mape, 0.0);
    EXPECT_EQ(rep.mspe, 0.0);
    ASSERT_EQ(rep.splits.size(), 6u);
    EXPECT_EQ(rep.splits.front().train_end, 5);
    EXPECT_EQ(rep.splits.front().target, 6);
    EXPECT_EQ(rep.splits.back().target, 11);
    EXPECT_EQ(rep.method, "oracle");
}

TEST(ExpandingWindow, ConstantPredictorAgainstConstantTruth)
{
    const Grid grid = Grid::uniform(3);
    std::vector<MatrixXd> slices(8, MatrixXd::Constant(2, 3, 1.5));
    const CurvePanel panel = CurvePanel::from_slices(slices, grid);
    ForecastConfig cfg;
    cfg.train_len = 3;
    const Predictor constant = [](const CurvePanel&, Index) { return MatrixXd::Constant(2, 3, -0.5); };
    const ForecastReport rep = expanding_window_eval(panel, cfg, constant, "c");
    EXPECT_DOUBLE_EQ(rep.mape, 2.0);
    EXPECT_DOUBLE_EQ(rep.mspe, 4.0);
}

TEST(ExpandingWindow, HandComputedNormalization)
{
    // p = 1, G = 2, n = 4, n1 = 2, h = 1: two splits predicting t = 2, 3 with zeros.
    MatrixXd v(4, 2);
    v << 0, 0, 0, 0, 1, -2, 3, 4;
    const CurvePanel panel(v, Grid::uniform(2), 1);
    ForecastConfig cfg;
    cfg.train_len = 2;
    const Predictor zero = [](const CurvePanel&, Index) { return MatrixXd::Zero(1, 2); };
    const ForecastReport rep = expanding_window_eval(panel, cfg, zero, "zero");
    EXPECT_DOUBLE_EQ(rep.mape, (1.0 + 2.0 + 3.0 + 4.0) / 4.0);
    EXPECT_DOUBLE_EQ(rep.mspe, (1.0 + 4.0 + 9.0 + 16.0) / 4.0);
}

TEST(ExpandingWindow, Errors)
{
    const CurvePanel panel = oracle::random_panel(6, 2, 3, 10);
    ForecastConfig cfg;
    cfg.train_len = 6;
    const Predictor zero = [](const CurvePanel& t, Index) { return MatrixXd::Zero(t.p(), t.grid_size()); };
    EXPECT_THROW(expanding_window_eval(panel, cfg, zero, "z"), ConfigError);
    cfg.train_len = 3;
    cfg.h = 4;
    EXPECT_THROW(expanding_window_eval(panel, cfg, zero, "z"), ConfigError);
    cfg.h = 1;
    const Predictor wrong = [](const CurvePanel&, Index) { return MatrixXd::Zero(1, 1); };
    EXPECT_THROW(expanding_window_eval(panel, cfg, wrong, "w"), DataError);
    cfg.train_len = 0; // n/2
    EXPECT_EQ(expanding_window_eval(panel, cfg, zero, "z").splits.size(), 3u);
}

TEST(ExpandingWindow, HistoricalMeanPredictor)
{
    const CurvePanel panel = oracle::random_panel(5, 2, 3, 11);
    const MatrixXd m = historical_mean_prediction(panel.head(3));
    for (Index j = 0; j < 2; ++j)
        for (Index g = 0; g < 3; ++g)
            EXPECT_NEAR(m(j, g), (panel.value(0, j, g) + panel.value(1, j, g) + panel.value(2, j, g)) / 3.0, 1e-15);
}

TEST(ExpandingWindow, PropertyErrorsInvariantToSeriesPermutation)
{
    SimConfig sim;
    sim.n = 50;
    sim.p = 6;
    sim.r = 2;
    sim.n_basis = 10;
    const Grid grid = Grid::uniform(11);
    std::mt19937_64 rng(12);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        sim.seed = seed;
        const CurvePanel panel = gen_panel(sim, grid).panel;
        std::vector<Index> perm(6);
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        const CurvePanel shuffled = permute_series(panel, perm);
        ForecastConfig cfg = small_config();
        cfg.rank = 2;
        cfg.train_len = 45;
        const WeightSpec w{WeightKind::Identity, 0, 0, 0.0};
        const ForecastReport a = expanding_window_eval(panel, cfg, 2, w);
        const ForecastReport b = expanding_window_eval(shuffled, cfg, 2, w);
        EXPECT_NEAR(a.mape, b.mape, 1e-10 * a.mape);
        EXPECT_NEAR(a.mspe, b.mspe, 1e-10 * a.mspe);
        EXPECT_EQ(a.method, "fmp");

        const Predictor mean = [](const CurvePanel& train, Index) { return historical_mean_prediction(train); };
        const ForecastReport c = expanding_window_eval(panel, cfg, mean, "mean");
        const ForecastReport d = expanding_window_eval(shuffled, cfg, mean, "mean");
        EXPECT_NEAR(c.mape, d.mape, 1e-12 * c.mape);
        EXPECT_NEAR(c.mspe, d.mspe, 1e-12 * c.mspe);
    }
}
