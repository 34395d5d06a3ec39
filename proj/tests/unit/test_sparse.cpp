#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ffm/error.hpp"
#include "ffm/simgen.hpp"
#include "ffm/sparse.hpp"
#include "support/oracles.hpp"

using namespace ffm;

namespace {

void expect_constraints(const SparsePcaResult& res, Index r, Index c0)
{
    ASSERT_EQ(res.loadings.cols(), r);
    EXPECT_LE((res.loadings.transpose() * res.loadings - MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff(), 1e-8);
    for (Index c = 0; c < r; ++c)
        EXPECT_LE(oracle::count_nonzero(res.loadings.col(c)), c0);
}

// Two groups of two series, each group driven by its own AR(1) curve, so the
// population cross-group autocovariances are exactly zero.
CurvePanel two_block_panel(Index n, std::uint64_t seed)
{
    const CurvePanel f = oracle::ar_panel(n, 2, 6, 0.6, seed);
    const CurvePanel e = oracle::random_panel(n, 4, 6, seed + 1);
    MatrixXd v = 0.3 * e.values();
    for (Index g = 0; g < 6; ++g) {
        v.col(g * 4 + 0) += f.at_grid(g).col(0);
        v.col(g * 4 + 1) -= f.at_grid(g).col(0);
        v.col(g * 4 + 2) += f.at_grid(g).col(1);
        v.col(g * 4 + 3) += 0.5 * f.at_grid(g).col(1);
    }
    return {v, f.grid(), 4};
}

} // namespace

TEST(SparsePcaConfig, Validation)
{
    EXPECT_THROW((SparsePcaConfig{0, 1}).validate(5), ConfigError);
    EXPECT_THROW((SparsePcaConfig{6, 1}).validate(5), ConfigError);
    EXPECT_THROW((SparsePcaConfig{1, 0}).validate(5), ConfigError);
    EXPECT_THROW((SparsePcaConfig{1, 6}).validate(5), ConfigError);
    EXPECT_THROW((SparsePcaConfig{1, 2, Deflation::Schur, SupportSearch::Exhaustive}).validate(21), ConfigError);
    EXPECT_THROW((SparsePcaConfig{3, 2, Deflation::Schur, SupportSearch::GreedyForward, SparsityMode::Row}).validate(5),
                 ConfigError);
    EXPECT_NO_THROW((SparsePcaConfig{3, 1}).validate(5));
    SparsePcaConfig no_starts{1, 2};
    no_starts.starts = 0;
    EXPECT_THROW(no_starts.validate(5), ConfigError);
    EXPECT_EQ(deflation_from_string(to_string(Deflation::Projection)), Deflation::Projection);
    EXPECT_EQ(support_search_from_string(to_string(SupportSearch::Exhaustive)), SupportSearch::Exhaustive);
    EXPECT_EQ(sparsity_mode_from_string(to_string(SparsityMode::Row)), SparsityMode::Row);
    EXPECT_THROW(sparsity_mode_from_string("diagonal"), ConfigError);
}

TEST(SparsePca, DiagonalArgmax)
{
    const MatrixXd m = Eigen::Vector3d(5.0, 3.0, 1.0).asDiagonal();
    for (const auto defl : {Deflation::Schur, Deflation::Projection}) {
        const SparsePcaResult res = sparse_pca(m, {2, 1, defl});
        EXPECT_NEAR(std::abs(res.loadings(0, 0)), 1.0, 1e-12);
        EXPECT_NEAR(std::abs(res.loadings(1, 1)), 1.0, 1e-12);
        EXPECT_NEAR(res.objective, 8.0, 1e-12);
        expect_constraints(res, 2, 1);
    }
}

TEST(SparsePca, FullCardinalityIsOrdinaryPca)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Index p = 4 + static_cast<Index>(seed % 8);
        const MatrixXd m = oracle::random_psd(p, seed);
        const SymmetricEigen eig = sym_eigen(m);
        for (Index r = 1; r <= std::min<Index>(p, 4); ++r) {
            for (const auto mode : {SparsityMode::Column, SparsityMode::Row}) {
                const SparsePcaResult res = sparse_pca(m, {r, p, Deflation::Schur, SupportSearch::GreedyForward, mode});
                EXPECT_NEAR(std::abs(res.loadings.col(0).dot(eig.vectors.col(0))), 1.0, 1e-8);
                EXPECT_NEAR(res.objective, eig.values.head(r).sum(), 1e-8 * eig.values(0));
                expect_constraints(res, r, p);
            }
        }
    }
}

TEST(SparsePca, GreedyAgainstExhaustiveOracle)
{
    int matches = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const MatrixXd m = oracle::random_psd(8, 1000 + seed);
        const double best = oracle::oracle_best_subset(m, 3);
        const SparsePcaResult greedy = sparse_pca(m, {1, 3, Deflation::Schur, SupportSearch::GreedyForward});
        const SparsePcaResult exhaustive = sparse_pca(m, {1, 3, Deflation::Schur, SupportSearch::Exhaustive});
        EXPECT_NEAR(exhaustive.objective, best, 1e-10 * best);
        EXPECT_GE(exhaustive.objective, greedy.objective - 1e-10 * best);
        EXPECT_GE(greedy.objective, 0.95 * best);
        expect_constraints(greedy, 1, 3);
        expect_constraints(exhaustive, 1, 3);
        if (greedy.supports[0] == exhaustive.supports[0]) {
            ++matches;
            EXPECT_NEAR(std::abs(greedy.loadings.col(0).dot(exhaustive.loadings.col(0))), 1.0, 1e-10);
        }
    }
    EXPECT_GT(matches, 0);
}

TEST(SparsePca, PropertyConstraintsAlwaysHold)
{
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        const Index p = 3 + static_cast<Index>(seed % 10);
        const Index r = 1 + static_cast<Index>(seed % std::min<Index>(p, 4));
        const Index c0 = 1 + static_cast<Index>((seed / 7) % p);
        const Index rank = (seed % 3 == 0) ? std::max<Index>(1, p / 2) : -1;
        const MatrixXd m = oracle::random_psd(p, seed, rank);
        const auto defl = seed % 2 == 0 ? Deflation::Schur : Deflation::Projection;
        const auto search = (seed % 5 == 0 && p <= 10) ? SupportSearch::Exhaustive : SupportSearch::GreedyForward;
        const SparsePcaResult res = sparse_pca(m, {r, c0, defl, search});
        expect_constraints(res, r, c0);
        if (c0 >= r) {
            const SparsePcaResult row = sparse_pca(m, {r, c0, defl, SupportSearch::GreedyForward, SparsityMode::Row});
            expect_constraints(row, r, c0);
            for (Index c = 1; c < r; ++c)
                EXPECT_EQ(row.supports[static_cast<std::size_t>(c)], row.supports[0]);
        }
    }
}

TEST(SparsePca, SchurDeflationStaysPsd)
{
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const Index p = 5 + static_cast<Index>(seed % 6);
        const MatrixXd m = oracle::random_psd(p, seed);
        const Index c0 = 2 + static_cast<Index>(seed % 3);
        const VectorXd x = sparse_pca(m, {1, c0}).loadings.col(0);
        const VectorXd mx = m * x;
        const MatrixXd deflated = m - mx * mx.transpose() / x.dot(mx);
        const VectorXd ev = sym_eigen(MatrixXd(0.5 * (deflated + deflated.transpose()))).values;
        EXPECT_GE(ev(p - 1), -1e-8 * ev(0));
        EXPECT_LE(deflated.cwiseAbs().maxCoeff(), m.cwiseAbs().maxCoeff() + 1e-12);
    }
}

TEST(SparsePca, PrincipalLeadingEigenvalue)
{
    MatrixXd m(3, 3);
    m << 2, 1, 0, 1, 2, 0, 0, 0, 7;
    const std::vector<Index> s01{0, 1};
    const std::vector<Index> s2{2};
    EXPECT_NEAR(principal_leading_eigenvalue(m, s01), 3.0, 1e-14);
    EXPECT_NEAR(principal_leading_eigenvalue(m, s2), 7.0, 1e-14);
}

TEST(BuildMThresholded, ZeroAndInfiniteThresholds)
{
    const CurvePanel panel = oracle::random_panel(30, 5, 6, 4);
    const std::vector<double> zeros(3, 0.0);
    const std::vector<double> inf(3, std::numeric_limits<double>::infinity());
    for (const auto kind : {WeightKind::Projected, WeightKind::Identity, WeightKind::DiagonalPath}) {
        const WeightSpec w{kind, 3, 2, 0.0};
        const MMatrix t0 = build_M_thresholded(panel, 3, zeros, w);
        EXPECT_EQ(t0.matrix, build_M(panel, 3, w).matrix);
        EXPECT_TRUE(t0.thresholded);
        EXPECT_EQ(build_M_thresholded(panel, 3, inf, w).matrix.cwiseAbs().maxCoeff(), 0.0);
    }
    const std::vector<double> wrong(2, 0.0);
    EXPECT_THROW(build_M_thresholded(panel, 3, wrong, {}), ConfigError);
    const std::vector<double> negative{0.0, -1.0, 0.0};
    EXPECT_THROW(build_M_thresholded(panel, 3, negative, {}), ConfigError);
}

TEST(BuildMThresholded, BatchMatchesIndividualCalls)
{
    const CurvePanel panel = oracle::random_panel(25, 6, 5, 8);
    const std::vector<MRequest> reqs{{{WeightKind::Projected, 3, 5, 0.0}, {}},
                                     {{WeightKind::Identity, 3, 5, 0.0}, {}},
                                     {{WeightKind::DiagonalPath, 3, 5, 0.0}, {}},
                                     {{WeightKind::Projected, 3, 5, 0.0}, {0.1, 0.2}}};
    const std::vector<MMatrix> out = build_M_batch(panel, 2, reqs);
    ASSERT_EQ(out.size(), 4u);
    for (std::size_t i = 0; i < 3; ++i)
        EXPECT_EQ(out[i].matrix, build_M(panel, 2, reqs[i].weight).matrix);
    EXPECT_EQ(out[3].matrix, build_M_thresholded(panel, 2, reqs[3].etas, reqs[3].weight).matrix);
}

TEST(BuildMThresholded, BlockSparsePanelSeparates)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const CurvePanel panel = two_block_panel(3000, 10 * seed);
        std::vector<double> etas;
        for (Index k = 1; k <= 2; ++k) {
            const MatrixXd norms = hs_norm_matrix(lag_autocov(panel, k));
            double cross = 0.0;
            double within = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < 4; ++i)
                for (Index j = 0; j < 4; ++j)
                    (i / 2 == j / 2 ? within : cross) =
                        i / 2 == j / 2 ? std::min(within, norms(i, j)) : std::max(cross, norms(i, j));
            ASSERT_LT(cross, within);
            etas.push_back(0.5 * (cross + within));
        }
        const MatrixXd m = build_M_thresholded(panel, 2, etas, {WeightKind::Identity, 2, 0, 0.0}).matrix;
        for (Index i = 0; i < 4; ++i)
            for (Index j = 0; j < 4; ++j) {
                if (i / 2 != j / 2)
                    EXPECT_EQ(m(i, j), 0.0);
                else
                    EXPECT_NE(m(i, j), 0.0);
            }
    }
}

TEST(CvFolds, ConsecutiveBlocks)
{
    const auto folds = make_folds(17, 5);
    ASSERT_EQ(folds.size(), 5u);
    const std::vector<Index> lengths{4, 4, 3, 3, 3};
    Index begin = 0;
    for (std::size_t g = 0; g < 5; ++g) {
        EXPECT_EQ(folds[g].first, begin);
        EXPECT_EQ(folds[g].second - folds[g].first, lengths[g]);
        begin = folds[g].second;
    }
    EXPECT_EQ(begin, 17);
    EXPECT_THROW(make_folds(3, 5), InsufficientDataError);
    EXPECT_THROW(make_folds(10, 1), ConfigError);
}

TEST(CvConfig, Validation)
{
    EXPECT_THROW((CvConfig{1, {}, {}}).validate(), ConfigError);
    EXPECT_THROW((CvConfig{5, {0.2, 0.1}, {}}).validate(), ConfigError);
    EXPECT_THROW((CvConfig{5, {-0.1}, {}}).validate(), ConfigError);
    EXPECT_THROW((CvConfig{5, {}, {3, 3}}).validate(), ConfigError);
    EXPECT_THROW((CvConfig{5, {}, {0}}).validate(), ConfigError);
    EXPECT_NO_THROW((CvConfig{5, {0.0, 0.1}, {1, 2}}).validate());
}

TEST(CvThreshold, DefaultGridShape)
{
    const LagAutocov a = lag_autocov(oracle::random_panel(20, 3, 4, 2), 1);
    const std::vector<double> grid = default_eta_grid(a);
    ASSERT_EQ(grid.size(), 20u);
    EXPECT_EQ(grid.front(), 0.0);
    EXPECT_EQ(grid.back(), hs_norm_matrix(a).maxCoeff());
    for (std::size_t i = 1; i < grid.size(); ++i)
        EXPECT_GT(grid[i], grid[i - 1]);
}

TEST(CvThreshold, SingleCandidateAndErrors)
{
    const CurvePanel panel = oracle::random_panel(40, 3, 4, 6);
    const CvThresholdResult res = cv_threshold(panel, 1, {5, {0.37}, {}});
    EXPECT_EQ(res.eta, 0.37);
    EXPECT_EQ(res.scores.size(), 1u);
    EXPECT_EQ(res.folds.size(), 5u);
    EXPECT_THROW(cv_threshold(panel, 0, {}), ConfigError);
    EXPECT_THROW(cv_threshold(panel.head(12), 2, {5, {}, {}}), InsufficientDataError);
}

TEST(CvThreshold, WhiteNoiseFavoursHeavyThresholding)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const CurvePanel panel = oracle::random_panel(300, 4, 6, 300 + seed);
        const CvThresholdResult res = cv_threshold(panel, 1, {});
        const MatrixXd norms = hs_norm_matrix(lag_autocov(panel, 1));
        std::vector<double> all(norms.data(), norms.data() + norms.size());
        std::nth_element(all.begin(), all.begin() + static_cast<long>(all.size() / 2), all.end());
        EXPECT_GE(res.eta, all[all.size() / 2]);
    }
}

TEST(CvThreshold, DeadChannelIsZeroedLiveKept)
{
    // Series 0 is a persistent AR(1) curve, series 1 white noise.
    int correct = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const CurvePanel live = oracle::ar_panel(400, 1, 6, 0.9, 500 + seed);
        const CurvePanel dead = oracle::random_panel(400, 1, 6, 600 + seed);
        MatrixXd v(400, 12);
        for (Index g = 0; g < 6; ++g) {
            v.col(2 * g) = live.at_grid(g).col(0);
            v.col(2 * g + 1) = dead.at_grid(g).col(0);
        }
        const CurvePanel panel(v, live.grid(), 2);
        const double eta = cv_threshold(panel, 1, {}).eta;
        const MatrixXd norms = hs_norm_matrix(lag_autocov(panel, 1));
        const bool ok = norms(0, 0) >= eta && norms(1, 1) < eta && norms(0, 1) < eta && norms(1, 0) < eta;
        correct += ok ? 1 : 0;
    }
    EXPECT_GE(correct, 8);
}

TEST(CvThreshold, Deterministic)
{
    const CurvePanel panel = oracle::ar_panel(120, 4, 5, 0.6, 77);
    const CvThresholdResult a = cv_threshold(panel, 2, {});
    const CvThresholdResult b = cv_threshold(panel, 2, {});
    EXPECT_EQ(a.eta, b.eta);
    EXPECT_EQ(a.scores, b.scores);
}

namespace {

CurvePanel sim(Index n, Index p, Index r, LoadingSparsity sparsity, std::uint64_t seed)
{
    SimConfig cfg;
    cfg.n = n;
    cfg.p = p;
    cfg.r = r;
    cfg.sparsity = sparsity;
    cfg.seed = seed;
    return gen_panel(cfg, Grid::uniform(11)).panel;
}

} // namespace

TEST(CvCardinality, SingleCandidateAndErrors)
{
    const CurvePanel panel = sim(60, 8, 2, LoadingSparsity::None, 1);
    const std::vector<double> etas{0.0, 0.0};
    const CvCardinalityResult res = cv_cardinality(panel, 2, etas, {WeightKind::Projected, 4, 1, 0.0}, {2, 1}, {5, {}, {8}});
    EXPECT_EQ(res.c0, 8);
    EXPECT_THROW(cv_cardinality(panel, 2, etas, {}, {2, 1}, {5, {}, {}}), ConfigError);
    EXPECT_THROW(cv_cardinality(panel, 2, etas, {}, {2, 1}, {5, {}, {9}}), ConfigError);
    EXPECT_THROW(cv_cardinality(panel.head(15), 2, etas, {}, {2, 1}, {5, {}, {8}}), InsufficientDataError);
}

TEST(CvCardinality, PlantedRowSparsityIsFound)
{
    // p = 20 with 80% zero rows leaves 4 active rows.
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 7; ++seed) {
        const CurvePanel panel = sim(200, 20, 2, LoadingSparsity::Row, 40 + seed);
        const std::vector<double> etas{0.0, 0.0};
        const auto res = cv_cardinality(panel, 2, etas, {WeightKind::Projected, 12, seed, 0.0}, {2, 1}, {5, {}, {4, 20}});
        hits += res.c0 == 4 ? 1 : 0;
    }
    EXPECT_GE(hits, 4);
}

TEST(CvCardinality, DenseDesignKeepsAllRows)
{
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 7; ++seed) {
        const CurvePanel panel = sim(200, 20, 2, LoadingSparsity::None, 80 + seed);
        const std::vector<double> etas{0.0, 0.0};
        const auto res = cv_cardinality(panel, 2, etas, {WeightKind::Projected, 12, seed, 0.0}, {2, 1}, {5, {}, {5, 20}});
        hits += res.c0 == 20 ? 1 : 0;
    }
    EXPECT_GE(hits, 4);
}

TEST(Tspca, FixedSettingsReduceToPca)
{
    const CurvePanel panel = sim(80, 10, 2, LoadingSparsity::None, 3);
    TspcaOptions opts;
    opts.k0 = 2;
    opts.weight = {WeightKind::Projected, 5, 4, 0.0};
    opts.pca = {2, 10};
    opts.etas = std::vector<double>{0.0, 0.0};
    opts.fixed_cardinality = true;
    const TspcaResult res = tspca(panel, opts);
    EXPECT_TRUE(res.eta_reports.empty());
    EXPECT_FALSE(res.c0_report.has_value());
    EXPECT_EQ(res.c0, 10);
    const MatrixXd pca = estimate_from_M(build_M(panel, 2, opts.weight), {.rank = 2}).loadings;
    EXPECT_LE(subspace_distance(res.pca.loadings, pca), 1e-7);
}

TEST(Tspca, CrossValidatedRunIsDeterministic)
{
    const CurvePanel panel = sim(80, 8, 2, LoadingSparsity::Column, 5);
    TspcaOptions opts;
    opts.k0 = 2;
    opts.weight = {WeightKind::Projected, 4, 4, 0.0};
    opts.pca = {2, 1};
    opts.cv.c0_grid = {2, 4, 8};
    const TspcaResult a = tspca(panel, opts);
    const TspcaResult b = tspca(panel, opts);
    EXPECT_EQ(a.etas, b.etas);
    EXPECT_EQ(a.c0, b.c0);
    EXPECT_EQ(a.pca.loadings, b.pca.loadings);
    EXPECT_EQ(a.eta_reports.size(), 2u);
    ASSERT_TRUE(a.c0_report.has_value());
    expect_constraints(a.pca, 2, a.c0);
}
