#include "ffm/curves.hpp"

#include <cmath>
#include <string>

#include "ffm/error.hpp"

namespace ffm {

VectorXd trapezoid_weights(const VectorXd& points)
{
    const Index G = points.size();
    if (G < 2)
        throw DataError("grid needs at least 2 points, got " + std::to_string(G));
    for (Index g = 0; g < G; ++g) {
        if (!std::isfinite(points(g)))
            throw DataError("grid point " + std::to_string(g) + " is not finite");
        if (g > 0 && !(points(g) > points(g - 1)))
            throw DataError("grid points must be strictly increasing (index " + std::to_string(g) + ")");
    }
    VectorXd w(G);
    w(0) = 0.5 * (points(1) - points(0));
    w(G - 1) = 0.5 * (points(G - 1) - points(G - 2));
    for (Index g = 1; g + 1 < G; ++g)
        w(g) = 0.5 * (points(g + 1) - points(g - 1));
    return w;
}

Grid::Grid(VectorXd points) : points_(std::move(points)), weights_(trapezoid_weights(points_)) {}

Grid Grid::uniform(Index size, double a, double b)
{
    if (size < 2 || !(b > a))
        throw ConfigError("uniform grid needs size >= 2 and b > a");
    VectorXd pts(size);
    for (Index g = 0; g < size; ++g)
        pts(g) = a + (b - a) * static_cast<double>(g) / static_cast<double>(size - 1);
    pts(size - 1) = b;
    return Grid(std::move(pts));
}

bool Grid::operator==(const Grid& other) const
{
    return points_.size() == other.points_.size() && points_ == other.points_;
}

// ---------------------------------------------------------------------------

CurvePanel::CurvePanel(MatrixXd values, Grid grid, Index series)
    : values_(std::move(values)), grid_(std::move(grid)), p_(series)
{
    if (p_ < 1)
        throw DataError("panel needs at least one series");
    if (values_.cols() != grid_.size() * p_)
        throw DataError("panel has " + std::to_string(values_.cols()) + " columns, expected G*p = " +
                        std::to_string(grid_.size() * p_));
    if (!values_.allFinite())
        throw DataError("panel contains non-finite values");
}

CurvePanel CurvePanel::from_slices(std::span<const MatrixXd> slices, const Grid& grid)
{
    if (slices.empty())
        throw DataError("panel needs at least one time point");
    const Index n = static_cast<Index>(slices.size());
    const Index p = slices.front().rows();
    const Index G = grid.size();
    MatrixXd values(n, G * p);
    for (Index t = 0; t < n; ++t) {
        const MatrixXd& s = slices[static_cast<std::size_t>(t)];
        if (s.rows() != p || s.cols() != G)
            throw DataError("slice " + std::to_string(t) + " has inconsistent shape");
        for (Index g = 0; g < G; ++g)
            values.block(t, g * p, 1, p) = s.col(g).transpose();
    }
    return CurvePanel(std::move(values), grid, p);
}

VectorXd CurvePanel::curve(Index t, Index j) const
{
    VectorXd c(grid_size());
    for (Index g = 0; g < grid_size(); ++g)
        c(g) = values_(t, g * p_ + j);
    return c;
}

MatrixXd CurvePanel::slice(Index t) const
{
    MatrixXd s(p_, grid_size());
    for (Index g = 0; g < grid_size(); ++g)
        s.col(g) = values_.block(t, g * p_, 1, p_).transpose();
    return s;
}

CurvePanel CurvePanel::select_times(std::span<const Index> times) const
{
    MatrixXd sub(static_cast<Index>(times.size()), values_.cols());
    for (std::size_t r = 0; r < times.size(); ++r) {
        if (times[r] < 0 || times[r] >= n())
            throw DataError("time index out of range");
        sub.row(static_cast<Index>(r)) = values_.row(times[r]);
    }
    return CurvePanel(std::move(sub), grid_, p_);
}

CurvePanel CurvePanel::head(Index count) const
{
    if (count < 1 || count > n())
        throw DataError("head length out of range");
    return CurvePanel(values_.topRows(count), grid_, p_);
}

CurvePanel CurvePanel::select_series(std::span<const Index> series) const
{
    const Index q = static_cast<Index>(series.size());
    MatrixXd sub(n(), grid_size() * q);
    for (Index g = 0; g < grid_size(); ++g)
        for (Index c = 0; c < q; ++c) {
            const Index j = series[static_cast<std::size_t>(c)];
            if (j < 0 || j >= p_)
                throw DataError("series index out of range");
            sub.col(g * q + c) = values_.col(g * p_ + j);
        }
    return CurvePanel(std::move(sub), grid_, q);
}

// ---------------------------------------------------------------------------

BivariateKernelMatrix::BivariateKernelMatrix(MatrixXd data, Grid grid, Index rows, Index cols)
    : data_(std::move(data)), grid_(std::move(grid)), rows_(rows), cols_(cols)
{
    if (data_.rows() != grid_.size() * rows_ || data_.cols() != grid_.size() * cols_)
        throw DataError("kernel matrix storage does not match declared p, q, G");
    if (!data_.allFinite())
        throw DataError("kernel matrix contains non-finite values");
}

BivariateKernelMatrix BivariateKernelMatrix::zeros(const Grid& grid, Index rows, Index cols)
{
    return {MatrixXd::Zero(grid.size() * rows, grid.size() * cols), grid, rows, cols};
}

MatrixXd BivariateKernelMatrix::kernel(Index i, Index j) const
{
    const Index G = grid_size();
    MatrixXd k(G, G);
    for (Index h = 0; h < G; ++h)
        for (Index g = 0; g < G; ++g)
            k(g, h) = data_(g * rows_ + i, h * cols_ + j);
    return k;
}

void BivariateKernelMatrix::set_kernel_zero(Index i, Index j)
{
    const Index G = grid_size();
    for (Index h = 0; h < G; ++h)
        for (Index g = 0; g < G; ++g)
            data_(g * rows_ + i, h * cols_ + j) = 0.0;
}

// ---------------------------------------------------------------------------

double l2_norm(const VectorXd& curve, const Grid& grid)
{
    if (curve.size() != grid.size())
        throw DataError("curve length does not match grid size");
    return std::sqrt(grid.weights().dot(curve.cwiseAbs2()));
}

double hs_norm(const MatrixXd& kernel, const Grid& grid)
{
    if (kernel.rows() != grid.size() || kernel.cols() != grid.size())
        throw DataError("kernel shape does not match grid size");
    const VectorXd& w = grid.weights();
    return std::sqrt(w.dot(kernel.cwiseAbs2() * w));
}

CenteredPanel center_panel(const CurvePanel& panel)
{
    if (panel.n() < 1)
        throw DataError("cannot center an empty panel");
    const Eigen::RowVectorXd mean = panel.values().colwise().mean();
    MatrixXd centered = panel.values().rowwise() - mean;
    MatrixXd mean_curves(panel.p(), panel.grid_size());
    for (Index g = 0; g < panel.grid_size(); ++g)
        mean_curves.col(g) = mean.segment(g * panel.p(), panel.p()).transpose();
    return {CurvePanel(std::move(centered), panel.grid(), panel.p()), std::move(mean_curves)};
}

} // namespace ffm
