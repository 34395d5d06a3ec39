#include "ffm/autocov.hpp"

#include <cmath>
#include <string>

#include "ffm/error.hpp"

namespace ffm {

namespace {

// One p × p block of the lag product. Both the full kernel build and the
// diagonal-only path go through here so their blocks agree bit for bit.
MatrixXd cross_block(const MatrixXd& lead, const MatrixXd& lagged, Index g, Index h, Index p, double scale)
{
    MatrixXd b = lead.middleCols(g * p, p).transpose() * lagged.middleCols(h * p, p);
    b *= scale;
    return b;
}

void check_lag(const CurvePanel& panel, Index k)
{
    if (k < 0)
        throw ConfigError("lag must be nonnegative, got " + std::to_string(k));
    if (k > panel.n() - 2)
        throw InsufficientDataError("lag " + std::to_string(k) + " needs n >= " + std::to_string(k + 2) +
                                    " observations, panel has " + std::to_string(panel.n()));
}

} // namespace

LagAutocov lag_autocov(const CurvePanel& panel, Index k)
{
    check_lag(panel, k);
    const Index n = panel.n();
    const Index p = panel.p();
    const Index G = panel.grid_size();
    const Index m = n - k;

    const MatrixXd centered = center_panel(panel).panel.values();
    const MatrixXd lead = centered.middleRows(k, m);
    const MatrixXd lagged = centered.topRows(m);
    const double scale = 1.0 / static_cast<double>(m);

    MatrixXd data(G * p, G * p);
    for (Index h = 0; h < G; ++h)
        for (Index g = 0; g < G; ++g)
            data.block(g * p, h * p, p, p) = cross_block(lead, lagged, g, h, p, scale);

    if (k == 0) {
        // (i,j) at (u,v) pairs with (j,i) at (v,u): a plain transpose of the storage.
        MatrixXd sym = 0.5 * (data + data.transpose());
        data = std::move(sym);
    }
    return {k, BivariateKernelMatrix(std::move(data), panel.grid(), p, p), m};
}

std::vector<MatrixXd> lag0_diagonal(const CurvePanel& panel)
{
    check_lag(panel, 0);
    const Index n = panel.n();
    const Index p = panel.p();
    const MatrixXd centered = center_panel(panel).panel.values();
    const MatrixXd lead = centered.middleRows(0, n);
    const MatrixXd lagged = centered.topRows(n);
    const double scale = 1.0 / static_cast<double>(n);

    std::vector<MatrixXd> out;
    out.reserve(static_cast<std::size_t>(panel.grid_size()));
    for (Index g = 0; g < panel.grid_size(); ++g) {
        const MatrixXd b = cross_block(lead, lagged, g, g, p, scale);
        out.emplace_back(0.5 * (b + b.transpose()));
    }
    return out;
}

std::vector<MatrixXd> lag0_diagonal(const LagAutocov& acov0)
{
    if (acov0.lag != 0)
        throw ConfigError("weight matrix needs the lag-0 autocovariance");
    std::vector<MatrixXd> out;
    out.reserve(static_cast<std::size_t>(acov0.kernels.grid_size()));
    for (Index g = 0; g < acov0.kernels.grid_size(); ++g)
        out.emplace_back(acov0.kernels.block(g, g));
    return out;
}

MatrixXd hs_norm_matrix(const LagAutocov& acov)
{
    const Index p = acov.kernels.rows();
    const Index q = acov.kernels.cols();
    const Index G = acov.kernels.grid_size();
    const VectorXd& w = acov.grid().weights();
    MatrixXd sq = MatrixXd::Zero(p, q);
    for (Index h = 0; h < G; ++h)
        for (Index g = 0; g < G; ++g)
            sq += (w(g) * w(h)) * acov.kernels.block(g, h).cwiseAbs2();
    return sq.cwiseSqrt();
}

LagAutocov functional_threshold(const LagAutocov& acov, double eta)
{
    return functional_threshold(acov, eta, hs_norm_matrix(acov));
}

LagAutocov functional_threshold(const LagAutocov& acov, double eta, const MatrixXd& norms)
{
    if (std::isnan(eta) || eta < 0.0)
        throw ConfigError("threshold must be nonnegative");
    if (norms.rows() != acov.kernels.rows() || norms.cols() != acov.kernels.cols())
        throw DataError("norm matrix does not match autocovariance dimensions");
    LagAutocov out = acov;
    for (Index j = 0; j < norms.cols(); ++j)
        for (Index i = 0; i < norms.rows(); ++i)
            if (!(norms(i, j) >= eta))
                out.kernels.set_kernel_zero(i, j);
    return out;
}

} // namespace ffm
