#include "ffm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ffm/error.hpp"
#include "ffm/rng.hpp"

namespace ffm {

std::string_view to_string(WeightKind kind)
{
    switch (kind) {
    case WeightKind::Projected:
        return "projected";
    case WeightKind::Identity:
        return "identity";
    case WeightKind::DiagonalPath:
        return "diagonal";
    }
    return "unknown";
}

WeightKind weight_kind_from_string(std::string_view name)
{
    if (name == "projected")
        return WeightKind::Projected;
    if (name == "identity")
        return WeightKind::Identity;
    if (name == "diagonal")
        return WeightKind::DiagonalPath;
    throw ConfigError("unknown weight kind '" + std::string(name) + "' (projected|identity|diagonal)");
}

void WeightSpec::validate(Index p) const
{
    if (!(ridge >= 0.0))
        throw ConfigError("weight ridge must be nonnegative");
    if (kind == WeightKind::Projected && (q < 1 || q > p))
        throw ConfigError("projection dimension q=" + std::to_string(q) + " must lie in [1, p=" +
                          std::to_string(p) + "]");
}

ProjectionMatrix make_projection(Index p, Index q, std::uint64_t seed)
{
    if (q < 1 || q > p)
        throw ConfigError("projection dimension q=" + std::to_string(q) + " must lie in [1, p=" +
                          std::to_string(p) + "]");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd entries(p, q);
    for (Index c = 0; c < q; ++c)
        for (Index r = 0; r < p; ++r)
            entries(r, c) = normal(rng);

    const Eigen::JacobiSVD<MatrixXd> svd(entries);
    const VectorXd& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 1e-8 * sv(0)))
        throw NumericalError("projection matrix is numerically rank deficient");
    return {std::move(entries), seed};
}

namespace {

// F with W = F Fᵀ = Q (Qᵀ S Q + ridge I)⁻¹ Qᵀ, via the Cholesky factor of the
// inner q × q matrix.
MatrixXd weight_factor(const MatrixXd& s, const MatrixXd& q, double ridge)
{
    const Index dim = q.cols();
    MatrixXd inner = q.transpose() * s * q;
    inner = 0.5 * (inner + inner.transpose()).eval();
    inner.diagonal().array() += ridge;

    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(inner, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(dim - 1);
    if (!(lo > 0.0) || hi / lo > 1e10) {
        const double tr = inner.trace();
        if (!(tr > 0.0))
            throw NumericalError("weight matrix: Q^T C0(v,v) Q is singular (zero trace)");
        inner.diagonal().array() += 1e-8 * tr / static_cast<double>(dim);
    }
    const Eigen::LLT<MatrixXd> llt(inner);
    if (llt.info() != Eigen::Success)
        throw NumericalError("weight matrix: inner matrix not positive definite after ridge");
    // F = Q L⁻ᵀ  ⇔  Fᵀ = L⁻¹ Qᵀ
    return llt.matrixL().solve(q.transpose()).transpose();
}

} // namespace

MatrixXd weight_at(Index v_index, const LagAutocov& acov0, const ProjectionMatrix& Q, double ridge)
{
    if (acov0.lag != 0)
        throw ConfigError("weight matrix needs the lag-0 autocovariance");
    if (v_index < 0 || v_index >= acov0.kernels.grid_size())
        throw DataError("grid index out of range");
    if (Q.entries.rows() != acov0.p())
        throw DataError("projection matrix rows do not match p");
    if (!(ridge >= 0.0))
        throw ConfigError("ridge must be nonnegative");
    const MatrixXd f = weight_factor(acov0.kernels.block(v_index, v_index), Q.entries, ridge);
    MatrixXd w = f * f.transpose();
    return 0.5 * (w + w.transpose());
}

// ---------------------------------------------------------------------------

MAccumulator::MAccumulator(const WeightSpec& weight, const Grid& grid, Index p,
                           const std::vector<MatrixXd>& lag0_blocks)
    : weight_(weight), grid_(grid), p_(p), lower_(MatrixXd::Zero(p, p))
{
    weight_.validate(p);
    if (weight_.kind != WeightKind::Projected)
        return;
    if (static_cast<Index>(lag0_blocks.size()) != grid.size())
        throw DataError("projected weight needs one lag-0 block per grid point");
    const ProjectionMatrix q = make_projection(p, weight_.q, weight_.seed);
    factors_.reserve(lag0_blocks.size());
    for (const auto& s : lag0_blocks) {
        if (s.rows() != p || s.cols() != p)
            throw DataError("lag-0 block has wrong shape");
        factors_.push_back(weight_factor(s, q.entries, weight_.ridge));
    }
}

void MAccumulator::add(const LagAutocov& acov)
{
    const auto& kern = acov.kernels;
    if (kern.rows() != p_ || kern.cols() != p_)
        throw DataError("autocovariance dimension does not match p");
    if (!(kern.grid() == grid_))
        throw DataError("autocovariance grid does not match");
    const Index G = grid_.size();
    const VectorXd& w = grid_.weights();
    const VectorXd sw = w.cwiseSqrt();
    auto acc = lower_.selfadjointView<Eigen::Lower>();

    switch (weight_.kind) {
    case WeightKind::DiagonalPath:
        for (Index g = 0; g < G; ++g)
            acc.rankUpdate(MatrixXd(kern.block(g, g)), w(g));
        break;
    case WeightKind::Identity: {
        MatrixXd stripe(p_, G * p_);
        for (Index g = 0; g < G; ++g) {
            for (Index h = 0; h < G; ++h)
                stripe.middleCols(h * p_, p_) = sw(h) * kern.block(g, h);
            acc.rankUpdate(stripe, w(g));
        }
        break;
    }
    case WeightKind::Projected: {
        const Index q = weight_.q;
        MatrixXd stripe(p_, G * q);
        for (Index g = 0; g < G; ++g) {
            for (Index h = 0; h < G; ++h)
                stripe.middleCols(h * q, q).noalias() = sw(h) * (kern.block(g, h) * factors_[static_cast<std::size_t>(h)]);
            acc.rankUpdate(stripe, w(g));
        }
        break;
    }
    }
    ++lags_;
}

MMatrix MAccumulator::finish(bool thresholded) const
{
    MatrixXd full = lower_.selfadjointView<Eigen::Lower>();
    MatrixXd sym = 0.5 * (full + full.transpose());
    return {std::move(sym), lags_, weight_, thresholded};
}

MMatrix build_M(const CurvePanel& panel, Index k0, const WeightSpec& weight)
{
    if (k0 < 1 || k0 > panel.n() - 2)
        throw ConfigError("k0=" + std::to_string(k0) + " must lie in [1, n-2=" + std::to_string(panel.n() - 2) + "]");
    weight.validate(panel.p());
    std::vector<MatrixXd> blocks;
    if (weight.kind == WeightKind::Projected)
        blocks = lag0_diagonal(panel);
    MAccumulator acc(weight, panel.grid(), panel.p(), blocks);
    for (Index k = 1; k <= k0; ++k)
        acc.add(lag_autocov(panel, k));
    return acc.finish();
}

MMatrix build_M_from_acov(std::span<const LagAutocov> acovs, const LagAutocov& acov0, const WeightSpec& weight)
{
    if (acovs.empty())
        throw ConfigError("need at least one lagged autocovariance");
    if (acov0.lag != 0)
        throw ConfigError("acov0 must have lag 0");
    const Index p = acov0.p();
    for (std::size_t i = 0; i < acovs.size(); ++i) {
        if (acovs[i].lag != static_cast<Index>(i) + 1)
            throw ConfigError("autocovariances must have lags 1..k0 in order");
        if (acovs[i].p() != p || !(acovs[i].grid() == acov0.grid()))
            throw DataError("autocovariances disagree in dimension or grid");
    }
    std::vector<MatrixXd> blocks;
    if (weight.kind == WeightKind::Projected)
        blocks = lag0_diagonal(acov0);
    MAccumulator acc(weight, acov0.grid(), p, blocks);
    for (const auto& a : acovs)
        acc.add(a);
    return acc.finish();
}

// ---------------------------------------------------------------------------

SymmetricEigen sym_eigen(const MatrixXd& m)
{
    if (m.rows() != m.cols() || m.rows() == 0)
        throw DataError("eigenanalysis needs a nonempty square matrix");
    if (!m.allFinite())
        throw NumericalError("eigenanalysis input has non-finite entries");
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    if (es.info() != Eigen::Success)
        throw NumericalError("symmetric eigensolver did not converge (p=" + std::to_string(m.rows()) + ")");
    const Index p = m.rows();
    SymmetricEigen out{es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
    for (Index c = 0; c < p; ++c) {
        Index arg = 0;
        double best = -1.0;
        for (Index r = 0; r < p; ++r) {
            const double a = std::abs(out.vectors(r, c));
            if (a > best) {
                best = a;
                arg = r;
            }
        }
        if (out.vectors(arg, c) < 0.0)
            out.vectors.col(c) *= -1.0;
    }
    return out;
}

VectorXd eigen_ratios(const VectorXd& eigenvalues)
{
    const Index p = eigenvalues.size();
    if (p < 2)
        throw ConfigError("rank selection needs at least 2 eigenvalues");
    VectorXd ratios(p - 1);
    if (!(eigenvalues(0) > 0.0)) {
        ratios.setOnes();
        return ratios;
    }
    const double floor = 1e-14 * eigenvalues(0);
    VectorXd clamped = eigenvalues.cwiseMax(floor);
    for (Index j = 0; j + 1 < p; ++j)
        ratios(j) = clamped(j + 1) / clamped(j);
    return ratios;
}

Index estimate_rank(const VectorXd& eigenvalues, double c_r)
{
    if (!(c_r > 0.0 && c_r < 1.0))
        throw ConfigError("c_r must lie in (0, 1)");
    const VectorXd ratios = eigen_ratios(eigenvalues);
    const Index p = eigenvalues.size();
    const Index jmax = std::clamp<Index>(static_cast<Index>(std::floor(c_r * static_cast<double>(p))), 1, p - 1);
    Index best = 0;
    for (Index j = 1; j < jmax; ++j)
        if (ratios(j) < ratios(best))
            best = j;
    return best + 1;
}

FactorEstimate estimate_from_M(const MMatrix& m, const EstimateOptions& opts)
{
    const SymmetricEigen eig = sym_eigen(m.matrix);
    FactorEstimate est;
    est.eigenvalues = eig.values;
    est.ratios = eigen_ratios(eig.values);
    est.r_hat = estimate_rank(eig.values, opts.c_r);
    const Index cols = opts.rank > 0 ? opts.rank : est.r_hat;
    if (cols > m.matrix.rows())
        throw ConfigError("requested rank exceeds p");
    est.loadings = eig.vectors.leftCols(cols);
    est.weight = m.weight;
    est.k0 = m.k0;
    est.c_r = opts.c_r;
    return est;
}

FactorEstimate estimate_factors(const CurvePanel& panel, Index k0, const WeightSpec& weight,
                                const EstimateOptions& opts)
{
    return estimate_from_M(build_M(panel, k0, weight), opts);
}

// ---------------------------------------------------------------------------

namespace {

void require_orthonormal(const MatrixXd& k, const char* name)
{
    if (k.cols() == 0)
        throw DataError(std::string(name) + " has no columns");
    const MatrixXd gram = k.transpose() * k;
    const double err = (gram - MatrixXd::Identity(k.cols(), k.cols())).cwiseAbs().maxCoeff();
    if (!(err <= 1e-8))
        throw DataError(std::string(name) + " does not have orthonormal columns (error " + std::to_string(err) + ")");
}

} // namespace

double subspace_distance(const MatrixXd& k1, const MatrixXd& k2)
{
    if (k1.rows() != k2.rows())
        throw DataError("subspace_distance: row counts differ");
    require_orthonormal(k1, "K1");
    require_orthonormal(k2, "K2");
    const Index r1 = k1.cols();
    const Index r2 = k2.cols();
    // 1 − tr(P1P2)/max(r1, r2) = (|r1 − r2| + ‖P1 − P2‖²_F) / (2 max(r1, r2)).
    // The right side has no cancellation when the spans nearly coincide, and
    // ‖P1 − P2‖ is symmetric in the arguments bit for bit.
    const MatrixXd diff = k1 * k1.transpose() - k2 * k2.transpose();
    const double v = (static_cast<double>(std::abs(r1 - r2)) + diff.squaredNorm()) /
                     (2.0 * static_cast<double>(std::max(r1, r2)));
    return std::sqrt(std::clamp(v, 0.0, 1.0));
}

double varimax_criterion(const MatrixXd& loadings)
{
    const double p = static_cast<double>(loadings.rows());
    const MatrixXd sq = loadings.cwiseAbs2();
    double total = 0.0;
    for (Index c = 0; c < sq.cols(); ++c) {
        const double mean = sq.col(c).sum() / p;
        total += sq.col(c).squaredNorm() / p - mean * mean;
    }
    return total;
}

VarimaxResult varimax(const MatrixXd& loadings, int max_iter, double tol)
{
    const Index p = loadings.rows();
    const Index r = loadings.cols();
    if (r < 1)
        throw ConfigError("varimax needs at least one column");
    VarimaxResult res;
    res.rotation = MatrixXd::Identity(r, r);
    res.loadings = loadings;
    res.criterion.push_back(varimax_criterion(loadings));

    double d = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const MatrixXd z = loadings * res.rotation;
        const Eigen::RowVectorXd colsq = z.cwiseAbs2().colwise().sum() / static_cast<double>(p);
        const MatrixXd target = z.cwiseAbs2().cwiseProduct(z) - z * colsq.asDiagonal();
        const MatrixXd b = loadings.transpose() * target;
        const Eigen::JacobiSVD<MatrixXd> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
        res.rotation = svd.matrixU() * svd.matrixV().transpose();
        res.loadings = loadings * res.rotation;
        res.criterion.push_back(varimax_criterion(res.loadings));
        res.iterations = it + 1;
        const double d_new = svd.singularValues().sum();
        if (d_new < d * (1.0 + tol)) {
            res.converged = true;
            break;
        }
        d = d_new;
    }
    return res;
}

} // namespace ffm
