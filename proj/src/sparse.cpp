#include "ffm/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ffm/error.hpp"

namespace ffm {

std::string_view to_string(Deflation d)
{
    return d == Deflation::Schur ? "schur" : "projection";
}

std::string_view to_string(SupportSearch s)
{
    return s == SupportSearch::GreedyForward ? "greedy" : "exhaustive";
}

std::string_view to_string(SparsityMode m)
{
    return m == SparsityMode::Column ? "column" : "row";
}

Deflation deflation_from_string(std::string_view s)
{
    if (s == "schur")
        return Deflation::Schur;
    if (s == "projection")
        return Deflation::Projection;
    throw ConfigError("unknown deflation '" + std::string(s) + "' (schur|projection)");
}

SupportSearch support_search_from_string(std::string_view s)
{
    if (s == "greedy")
        return SupportSearch::GreedyForward;
    if (s == "exhaustive")
        return SupportSearch::Exhaustive;
    throw ConfigError("unknown support search '" + std::string(s) + "' (greedy|exhaustive)");
}

SparsityMode sparsity_mode_from_string(std::string_view s)
{
    if (s == "column")
        return SparsityMode::Column;
    if (s == "row")
        return SparsityMode::Row;
    throw ConfigError("unknown sparsity mode '" + std::string(s) + "' (column|row)");
}

void SparsePcaConfig::validate(Index p) const
{
    if (r < 1 || r > p)
        throw ConfigError("sparse PCA: r=" + std::to_string(r) + " must lie in [1, p=" + std::to_string(p) + "]");
    if (cardinality < 1 || cardinality > p)
        throw ConfigError("sparse PCA: cardinality C0=" + std::to_string(cardinality) + " must lie in [1, p=" +
                          std::to_string(p) + "]");
    if (search == SupportSearch::Exhaustive && p > 20)
        throw ConfigError("exhaustive support search is limited to p <= 20");
    if (mode == SparsityMode::Row && cardinality < r)
        throw ConfigError("row-sparse PCA needs C0 >= r");
    if (starts < 1)
        throw ConfigError("greedy search needs at least one start");
}

namespace {

MatrixXd principal(const MatrixXd& m, std::span<const Index> s)
{
    const Index k = static_cast<Index>(s.size());
    MatrixXd out(k, k);
    for (Index b = 0; b < k; ++b)
        for (Index a = 0; a < k; ++a)
            out(a, b) = m(s[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(b)]);
    return out;
}

MatrixXd rows_of(const MatrixXd& x, std::span<const Index> s)
{
    MatrixXd out(static_cast<Index>(s.size()), x.cols());
    for (std::size_t a = 0; a < s.size(); ++a)
        out.row(static_cast<Index>(a)) = x.row(s[a]);
    return out;
}

void fix_sign(Eigen::Ref<VectorXd> v)
{
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) > best) {
            best = std::abs(v(i));
            arg = i;
        }
    if (v(arg) < 0.0)
        v *= -1.0;
}

// Orthonormal basis of {y : X_Sᵀ y = 0}; identity when there is no constraint.
MatrixXd feasible_basis(const MatrixXd& x_s)
{
    const Index s = x_s.rows();
    if (x_s.cols() == 0 || x_s.cwiseAbs().maxCoeff() == 0.0)
        return MatrixXd::Identity(s, s);
    const Eigen::JacobiSVD<MatrixXd> svd(x_s, Eigen::ComputeFullU);
    const VectorXd& sv = svd.singularValues();
    const double tol = 1e-10 * std::max(1.0, sv(0));
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > tol)
        ++rank;
    return svd.matrixU().rightCols(s - rank);
}

bool feasible(std::span<const Index> s, const MatrixXd& prior)
{
    if (prior.cols() == 0)
        return true;
    return feasible_basis(rows_of(prior, s)).cols() > 0;
}

// Largest eigenvalue of [[A, b], [bᵀ, c]] given A = V diag(lam) Vᵀ. Roots of the
// secular equation x − c − Σ z_k²/(x − lam_k) = 0, z = Vᵀ b, above the largest
// pole; eigenvalues of A with z_k = 0 stay eigenvalues of the bordered matrix.
double bordered_leading(const VectorXd& lam, const MatrixXd& v, const VectorXd& b, double c)
{
    const VectorXd z = v.transpose() * b;
    const VectorXd z2 = z.cwiseAbs2();
    const double top = lam.maxCoeff();
    const double bnorm = b.norm();
    const double scale = std::max({std::abs(top), std::abs(c), bnorm, std::numeric_limits<double>::min()});
    const double tiny = 1e-30 * scale * scale;

    double pole = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < lam.size(); ++k)
        if (z2(k) > tiny)
            pole = std::max(pole, lam(k));
    if (!std::isfinite(pole))
        return std::max(top, c);

    auto f = [&](double x) {
        double s = x - c;
        for (Index k = 0; k < lam.size(); ++k)
            if (z2(k) > tiny)
                s -= z2(k) / (x - lam(k));
        return s;
    };
    double lo = pole;
    double hi = std::max(top, c) + bnorm;
    if (!(hi > lo))
        hi = lo + scale * 1e-12;
    while (f(hi) < 0.0)
        hi += (hi - lo) + scale * 1e-12;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi))
            break;
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return std::max(top, hi);
}

std::vector<Index> all_indices(Index p)
{
    std::vector<Index> s(static_cast<std::size_t>(p));
    std::iota(s.begin(), s.end(), Index{0});
    return s;
}

// Indices of the `starts` largest diagonal entries, ties to the lower index.
std::vector<Index> start_indices(const MatrixXd& m, Index starts)
{
    std::vector<Index> idx = all_indices(m.rows());
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return m(a, a) > m(b, b); });
    idx.resize(static_cast<std::size_t>(std::min<Index>(starts, m.rows())));
    return idx;
}

// Forward selection on the leading eigenvalue of m[S, S] from S = {start}.
// The final element is restricted to indices that leave a nonzero vector
// supported on S and orthogonal to `prior`. Empty when no such index exists.
std::vector<Index> greedy_from(const MatrixXd& m, Index c0, const MatrixXd& prior, Index start)
{
    const Index p = m.rows();
    std::vector<Index> s{start};
    if (c0 == 1)
        return feasible(s, prior) ? s : std::vector<Index>{};
    std::vector<char> used(static_cast<std::size_t>(p), 0);
    used[static_cast<std::size_t>(start)] = 1;
    VectorXd lam = VectorXd::Constant(1, m(start, start));
    MatrixXd vec = MatrixXd::Ones(1, 1);
    while (static_cast<Index>(s.size()) < c0) {
        const bool last = static_cast<Index>(s.size()) + 1 == c0;
        Index best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        VectorXd b(static_cast<Index>(s.size()));
        for (Index j = 0; j < p; ++j) {
            if (used[static_cast<std::size_t>(j)])
                continue;
            if (last && prior.cols() > 0) {
                std::vector<Index> trial = s;
                trial.push_back(j);
                if (!feasible(trial, prior))
                    continue;
            }
            for (std::size_t a = 0; a < s.size(); ++a)
                b(static_cast<Index>(a)) = m(s[a], j);
            const double score = bordered_leading(lam, vec, b, m(j, j));
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        if (best < 0)
            return {};
        s.push_back(best);
        used[static_cast<std::size_t>(best)] = 1;
        const Eigen::SelfAdjointEigenSolver<MatrixXd> es(principal(m, s));
        lam = es.eigenvalues();
        vec = es.eigenvectors();
    }
    std::sort(s.begin(), s.end());
    return s;
}

VectorXd constrained_leading_vector(const MatrixXd& m, std::span<const Index> s, const MatrixXd& prior);

// Greedy forward selection restarted from several seeds; the support whose
// constrained leading vector attains the largest xᵀ m x wins (first on ties).
std::vector<Index> greedy_column_support(const MatrixXd& m, Index c0, const MatrixXd& prior, Index starts)
{
    const Index p = m.rows();
    if (c0 >= p)
        return all_indices(p);
    std::vector<Index> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const Index start : start_indices(m, starts)) {
        std::vector<Index> s = greedy_from(m, c0, prior, start);
        if (s.empty())
            continue;
        const VectorXd x = constrained_leading_vector(m, s, prior);
        const double score = x.dot(m * x);
        if (score > best_score) {
            best_score = score;
            best = std::move(s);
        }
    }
    if (best.empty())
        throw NumericalError("sparse PCA: no support orthogonal to the previous components");
    return best;
}

template <typename Visit>
void for_each_subset(Index p, Index k, Visit&& visit)
{
    std::vector<Index> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), Index{0});
    while (true) {
        visit(std::span<const Index>(idx));
        Index i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == p - k + i)
            --i;
        if (i < 0)
            return;
        ++idx[static_cast<std::size_t>(i)];
        for (Index j = i + 1; j < k; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

std::vector<Index> exhaustive_column_support(const MatrixXd& m, Index c0, const MatrixXd& prior)
{
    const Index p = m.rows();
    const Index k = std::min(c0, p);
    std::vector<Index> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for_each_subset(p, k, [&](std::span<const Index> s) {
        if (!feasible(s, prior))
            return;
        const double score = principal_leading_eigenvalue(m, s);
        if (score > best_score) {
            best_score = score;
            best.assign(s.begin(), s.end());
        }
    });
    if (best.empty())
        throw NumericalError("sparse PCA: no support orthogonal to the previous components");
    return best;
}

VectorXd constrained_leading_vector(const MatrixXd& m, std::span<const Index> s, const MatrixXd& prior)
{
    const MatrixXd n = feasible_basis(rows_of(prior, s));
    const MatrixXd a = principal(m, s);
    MatrixXd reduced = n.transpose() * a * n;
    reduced = 0.5 * (reduced + reduced.transpose()).eval();
    const SymmetricEigen eig = sym_eigen(reduced);
    VectorXd xs = n * eig.vectors.col(0);
    xs.normalize();
    fix_sign(xs);
    VectorXd x = VectorXd::Zero(m.rows());
    for (std::size_t a2 = 0; a2 < s.size(); ++a2)
        x(s[a2]) = xs(static_cast<Index>(a2));
    return x;
}

double top_sum(const MatrixXd& sub, Index r)
{
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(sub, Eigen::EigenvaluesOnly);
    const VectorXd& ev = es.eigenvalues();
    const Index take = std::min(r, ev.size());
    return ev.tail(take).sum();
}

std::vector<Index> row_support(const MatrixXd& m, const SparsePcaConfig& cfg)
{
    const Index p = m.rows();
    const Index c0 = cfg.cardinality;
    if (c0 >= p)
        return all_indices(p);
    std::vector<Index> best;
    if (cfg.search == SupportSearch::Exhaustive) {
        double best_score = -std::numeric_limits<double>::infinity();
        for_each_subset(p, c0, [&](std::span<const Index> s) {
            const double score = top_sum(principal(m, s), cfg.r);
            if (score > best_score) {
                best_score = score;
                best.assign(s.begin(), s.end());
            }
        });
        return best;
    }
    double best_score = -std::numeric_limits<double>::infinity();
    for (const Index start : start_indices(m, cfg.starts)) {
        std::vector<Index> s{start};
        std::vector<char> used(static_cast<std::size_t>(p), 0);
        used[static_cast<std::size_t>(start)] = 1;
        while (static_cast<Index>(s.size()) < c0) {
            Index pick = -1;
            double pick_score = -std::numeric_limits<double>::infinity();
            for (Index j = 0; j < p; ++j) {
                if (used[static_cast<std::size_t>(j)])
                    continue;
                std::vector<Index> trial = s;
                trial.push_back(j);
                const double score = top_sum(principal(m, trial), cfg.r);
                if (score > pick_score) {
                    pick_score = score;
                    pick = j;
                }
            }
            s.push_back(pick);
            used[static_cast<std::size_t>(pick)] = 1;
        }
        const double score = top_sum(principal(m, s), cfg.r);
        if (score > best_score) {
            best_score = score;
            best = std::move(s);
        }
    }
    std::sort(best.begin(), best.end());
    return best;
}

} // namespace

double principal_leading_eigenvalue(const MatrixXd& m, std::span<const Index> support)
{
    if (support.empty())
        return 0.0;
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(principal(m, support), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

SparsePcaResult sparse_pca(const MatrixXd& m_in, const SparsePcaConfig& cfg)
{
    if (m_in.rows() != m_in.cols() || m_in.rows() == 0)
        throw DataError("sparse PCA needs a nonempty square matrix");
    const Index p = m_in.rows();
    cfg.validate(p);
    const MatrixXd m = 0.5 * (m_in + m_in.transpose());

    SparsePcaResult res;
    res.loadings = MatrixXd::Zero(p, cfg.r);

    if (cfg.mode == SparsityMode::Row) {
        const std::vector<Index> s = row_support(m, cfg);
        const SymmetricEigen eig = sym_eigen(principal(m, s));
        for (Index c = 0; c < cfg.r; ++c) {
            for (std::size_t a = 0; a < s.size(); ++a)
                res.loadings(s[a], c) = eig.vectors(static_cast<Index>(a), c);
            res.supports.push_back(s);
        }
    } else {
        MatrixXd deflated = m;
        for (Index c = 0; c < cfg.r; ++c) {
            const MatrixXd prior = res.loadings.leftCols(c);
            const std::vector<Index> s = cfg.search == SupportSearch::Exhaustive
                                             ? exhaustive_column_support(deflated, cfg.cardinality, prior)
                                             : greedy_column_support(deflated, cfg.cardinality, prior, cfg.starts);
            const VectorXd x = constrained_leading_vector(deflated, s, prior);
            res.loadings.col(c) = x;
            res.supports.push_back(s);

            if (cfg.deflation == Deflation::Schur) {
                const VectorXd mx = deflated * x;
                const double denom = x.dot(mx);
                const double scale = deflated.diagonal().cwiseAbs().maxCoeff();
                if (denom > 1e-14 * scale)
                    deflated -= (mx * mx.transpose()) / denom;
            } else {
                const MatrixXd proj = MatrixXd::Identity(p, p) - x * x.transpose();
                deflated = proj * deflated * proj;
            }
            deflated = 0.5 * (deflated + deflated.transpose()).eval();
        }
    }
    res.objective = (res.loadings.transpose() * m * res.loadings).trace();
    return res;
}

// ---------------------------------------------------------------------------

MMatrix build_M_thresholded(const CurvePanel& panel, Index k0, std::span<const double> etas,
                            const WeightSpec& weight)
{
    if (k0 < 1 || k0 > panel.n() - 2)
        throw ConfigError("k0=" + std::to_string(k0) + " must lie in [1, n-2=" + std::to_string(panel.n() - 2) + "]");
    if (static_cast<Index>(etas.size()) != k0)
        throw ConfigError("need one threshold per lag (" + std::to_string(k0) + "), got " +
                          std::to_string(etas.size()));
    for (const double e : etas)
        if (std::isnan(e) || e < 0.0)
            throw ConfigError("thresholds must be nonnegative");
    weight.validate(panel.p());
    std::vector<MatrixXd> blocks;
    if (weight.kind == WeightKind::Projected)
        blocks = lag0_diagonal(panel);
    MAccumulator acc(weight, panel.grid(), panel.p(), blocks);
    for (Index k = 1; k <= k0; ++k)
        acc.add(functional_threshold(lag_autocov(panel, k), etas[static_cast<std::size_t>(k - 1)]));
    MMatrix out = acc.finish(true);
    return out;
}

std::vector<MMatrix> build_M_batch(const CurvePanel& panel, Index k0, std::span<const MRequest> requests)
{
    if (k0 < 1 || k0 > panel.n() - 2)
        throw ConfigError("k0=" + std::to_string(k0) + " must lie in [1, n-2=" + std::to_string(panel.n() - 2) + "]");
    bool projected = false;
    for (const auto& req : requests) {
        req.weight.validate(panel.p());
        if (!req.etas.empty() && static_cast<Index>(req.etas.size()) != k0)
            throw ConfigError("need one threshold per lag (" + std::to_string(k0) + "), got " +
                              std::to_string(req.etas.size()));
        for (const double e : req.etas)
            if (std::isnan(e) || e < 0.0)
                throw ConfigError("thresholds must be nonnegative");
        projected = projected || req.weight.kind == WeightKind::Projected;
    }
    std::vector<MatrixXd> blocks;
    if (projected)
        blocks = lag0_diagonal(panel);
    const std::vector<MatrixXd> none;
    std::vector<MAccumulator> accs;
    accs.reserve(requests.size());
    for (const auto& req : requests)
        accs.emplace_back(req.weight, panel.grid(), panel.p(), req.weight.kind == WeightKind::Projected ? blocks : none);
    for (Index k = 1; k <= k0; ++k) {
        const LagAutocov acov = lag_autocov(panel, k);
        std::optional<MatrixXd> norms;
        for (std::size_t i = 0; i < requests.size(); ++i) {
            if (requests[i].etas.empty()) {
                accs[i].add(acov);
            } else {
                if (!norms)
                    norms = hs_norm_matrix(acov);
                accs[i].add(functional_threshold(acov, requests[i].etas[static_cast<std::size_t>(k - 1)], *norms));
            }
        }
    }
    std::vector<MMatrix> out;
    for (std::size_t i = 0; i < requests.size(); ++i)
        out.push_back(accs[i].finish(!requests[i].etas.empty()));
    return out;
}

void CvConfig::validate() const
{
    if (folds < 2)
        throw ConfigError("cross-validation needs at least 2 folds");
    for (std::size_t i = 0; i < eta_grid.size(); ++i) {
        if (std::isnan(eta_grid[i]) || eta_grid[i] < 0.0)
            throw ConfigError("threshold grid values must be nonnegative");
        if (i > 0 && !(eta_grid[i] > eta_grid[i - 1]))
            throw ConfigError("threshold grid must be strictly increasing");
    }
    for (std::size_t i = 0; i < c0_grid.size(); ++i) {
        if (c0_grid[i] < 1)
            throw ConfigError("cardinality grid values must be positive");
        if (i > 0 && !(c0_grid[i] > c0_grid[i - 1]))
            throw ConfigError("cardinality grid must be strictly increasing");
    }
}

std::vector<std::pair<Index, Index>> make_folds(Index n, int folds)
{
    if (folds < 2)
        throw ConfigError("cross-validation needs at least 2 folds");
    if (n < folds)
        throw InsufficientDataError("cannot split " + std::to_string(n) + " observations into " +
                                    std::to_string(folds) + " folds");
    std::vector<std::pair<Index, Index>> out;
    const Index base = n / folds;
    const Index extra = n % folds;
    Index begin = 0;
    for (Index g = 0; g < folds; ++g) {
        const Index len = base + (g < extra ? 1 : 0);
        out.emplace_back(begin, begin + len);
        begin += len;
    }
    return out;
}

std::vector<double> default_eta_grid(const LagAutocov& acov)
{
    const double top = hs_norm_matrix(acov).maxCoeff();
    std::vector<double> grid{0.0};
    if (!(top > 0.0))
        return grid;
    for (int i = 0; i < 19; ++i)
        grid.push_back(top * std::pow(10.0, -3.0 + 3.0 * static_cast<double>(i) / 18.0));
    grid.back() = top;
    return grid;
}

namespace {

struct FoldPanels {
    CurvePanel train;
    CurvePanel valid;
};

FoldPanels split_fold(const CurvePanel& panel, std::pair<Index, Index> block)
{
    std::vector<Index> train;
    std::vector<Index> valid;
    for (Index t = 0; t < panel.n(); ++t)
        (t >= block.first && t < block.second ? valid : train).push_back(t);
    return {panel.select_times(train), panel.select_times(valid)};
}

} // namespace

CvThresholdResult cv_threshold(const CurvePanel& panel, Index k, const CvConfig& cfg)
{
    cfg.validate();
    if (k < 1)
        throw ConfigError("threshold CV is defined for lags k >= 1");
    CvThresholdResult res;
    res.lag = k;
    res.folds = make_folds(panel.n(), cfg.folds);
    for (const auto& [b, e] : res.folds) {
        if (e - b < k + 2 || panel.n() - (e - b) < k + 2)
            throw InsufficientDataError("CV block of length " + std::to_string(e - b) + " is too short for lag " +
                                        std::to_string(k));
    }
    res.grid = cfg.eta_grid.empty() ? default_eta_grid(lag_autocov(panel, k)) : cfg.eta_grid;
    res.scores.assign(res.grid.size(), 0.0);

    const VectorXd& w = panel.grid().weights();
    const Index G = panel.grid_size();
    const Index p = panel.p();
    for (const auto& fold : res.folds) {
        const FoldPanels fp = split_fold(panel, fold);
        const LagAutocov train = lag_autocov(fp.train, k);
        const LagAutocov valid = lag_autocov(fp.valid, k);
        const MatrixXd train_norm = hs_norm_matrix(train);
        MatrixXd diff_sq = MatrixXd::Zero(p, p);
        MatrixXd valid_sq = MatrixXd::Zero(p, p);
        for (Index h = 0; h < G; ++h)
            for (Index g = 0; g < G; ++g) {
                const double wgh = w(g) * w(h);
                diff_sq += wgh * (train.kernels.block(g, h) - valid.kernels.block(g, h)).cwiseAbs2();
                valid_sq += wgh * valid.kernels.block(g, h).cwiseAbs2();
            }
        for (std::size_t e = 0; e < res.grid.size(); ++e) {
            double loss = 0.0;
            for (Index j = 0; j < p; ++j)
                for (Index i = 0; i < p; ++i)
                    loss += train_norm(i, j) >= res.grid[e] ? diff_sq(i, j) : valid_sq(i, j);
            res.scores[e] += loss;
        }
    }
    for (double& s : res.scores)
        s /= static_cast<double>(res.folds.size());
    std::size_t best = 0;
    for (std::size_t e = 1; e < res.scores.size(); ++e)
        if (res.scores[e] < res.scores[best])
            best = e;
    res.eta = res.grid[best];
    return res;
}

CvCardinalityResult cv_cardinality(const CurvePanel& panel, Index k0, std::span<const double> etas,
                                   const WeightSpec& weight, const SparsePcaConfig& base, const CvConfig& cfg)
{
    cfg.validate();
    if (cfg.c0_grid.empty())
        throw ConfigError("cardinality CV needs a non-empty c0 grid");
    if (cfg.c0_grid.back() > panel.p())
        throw ConfigError("cardinality grid exceeds p");
    CvCardinalityResult res;
    res.grid = cfg.c0_grid;
    res.folds = make_folds(panel.n(), cfg.folds);
    for (const auto& [b, e] : res.folds) {
        if (e - b < k0 + 2)
            throw InsufficientDataError("validation block of length " + std::to_string(e - b) +
                                        " is shorter than k0 + 2 = " + std::to_string(k0 + 2));
        if (panel.n() - (e - b) < k0 + 2)
            throw InsufficientDataError("training blocks too short for k0 = " + std::to_string(k0));
    }
    res.scores.assign(res.grid.size(), 0.0);
    for (const auto& fold : res.folds) {
        const FoldPanels fp = split_fold(panel, fold);
        const MMatrix m_train = build_M_thresholded(fp.train, k0, etas, weight);
        const MatrixXd k_valid = estimate_from_M(build_M(fp.valid, k0, weight), {.c_r = 0.75, .rank = base.r}).loadings;
        for (std::size_t c = 0; c < res.grid.size(); ++c) {
            SparsePcaConfig pc = base;
            pc.cardinality = res.grid[c];
            const SparsePcaResult sp = sparse_pca(m_train, pc);
            res.scores[c] += subspace_distance(sp.loadings, k_valid);
        }
    }
    for (double& s : res.scores)
        s /= static_cast<double>(res.folds.size());
    std::size_t best = 0;
    for (std::size_t c = 1; c < res.scores.size(); ++c)
        if (res.scores[c] < res.scores[best])
            best = c;
    res.c0 = res.grid[best];
    return res;
}

TspcaResult tspca(const CurvePanel& panel, const TspcaOptions& opts)
{
    TspcaResult res;
    if (opts.etas) {
        res.etas = *opts.etas;
    } else {
        for (Index k = 1; k <= opts.k0; ++k) {
            res.eta_reports.push_back(cv_threshold(panel, k, opts.cv));
            res.etas.push_back(res.eta_reports.back().eta);
        }
    }
    if (opts.fixed_cardinality) {
        res.c0 = opts.pca.cardinality;
    } else {
        res.c0_report = cv_cardinality(panel, opts.k0, res.etas, opts.weight, opts.pca, opts.cv);
        res.c0 = res.c0_report->c0;
    }
    res.m = build_M_thresholded(panel, opts.k0, res.etas, opts.weight);
    SparsePcaConfig pc = opts.pca;
    pc.cardinality = res.c0;
    res.pca = sparse_pca(res.m, pc);
    return res;
}

} // namespace ffm
