#pragma once

// Functional-data substrate. Every curve in the library is sampled on one
// shared grid and every integral is a trapezoidal sum over that grid, so the
// estimators downstream reduce to finite matrix computations.

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ffm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Trapezoidal weights for an increasing abscissa sequence.
/// Throws DataError if the points are not strictly increasing or fewer than 2.
VectorXd trapezoid_weights(const VectorXd& points);

/// Ordered sampling grid on [a, b] together with its quadrature weights.
class Grid {
public:
    explicit Grid(VectorXd points);

    /// G equally spaced points covering [a, b] inclusive.
    static Grid uniform(Index size, double a = 0.0, double b = 1.0);

    Index size() const { return points_.size(); }
    const VectorXd& points() const { return points_; }
    const VectorXd& weights() const { return weights_; }
    double lower() const { return points_(0); }
    double upper() const { return points_(points_.size() - 1); }
    double length() const { return upper() - lower(); }

    bool operator==(const Grid& other) const;

private:
    VectorXd points_;
    VectorXd weights_;
};

/// Panel of n × p curves on a shared grid.
///
/// Storage is an n × (G·p) matrix whose column `g*p + j` holds series j at
/// grid point g, so the cross-section at grid point g is a contiguous n × p
/// block. That layout is what the autocovariance code multiplies.
class CurvePanel {
public:
    CurvePanel(MatrixXd values, Grid grid, Index series);

    /// Build from per-time p × G matrices (row j = curve of series j).
    static CurvePanel from_slices(std::span<const MatrixXd> slices, const Grid& grid);

    Index n() const { return values_.rows(); }
    Index p() const { return p_; }
    Index grid_size() const { return grid_.size(); }
    const Grid& grid() const { return grid_; }
    const MatrixXd& values() const { return values_; }

    double value(Index t, Index j, Index g) const { return values_(t, g * p_ + j); }
    VectorXd curve(Index t, Index j) const;
    /// p × G matrix of all curves at time t.
    MatrixXd slice(Index t) const;
    /// n × p cross-section at grid index g.
    auto at_grid(Index g) const { return values_.middleCols(g * p_, p_); }

    /// Sub-panel made of the listed time indices, in the order given.
    CurvePanel select_times(std::span<const Index> times) const;
    /// First `count` time points.
    CurvePanel head(Index count) const;
    /// Sub-panel keeping only the listed series, in the order given.
    CurvePanel select_series(std::span<const Index> series) const;

private:
    MatrixXd values_;
    Grid grid_;
    Index p_;
};

/// p × q matrix of bivariate kernels, each sampled on the G × G grid.
///
/// Stored as a (G·p) × (G·q) matrix: entry (i, j) at (u_g, v_h) lives at row
/// g*p + i, column h*q + j. `block(g, h)` is then the p × q matrix of kernel
/// values at one grid pair.
class BivariateKernelMatrix {
public:
    BivariateKernelMatrix(MatrixXd data, Grid grid, Index rows, Index cols);
    static BivariateKernelMatrix zeros(const Grid& grid, Index rows, Index cols);

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index grid_size() const { return grid_.size(); }
    const Grid& grid() const { return grid_; }
    const MatrixXd& data() const { return data_; }
    MatrixXd& data() { return data_; }

    auto block(Index g, Index h) const { return data_.block(g * rows_, h * cols_, rows_, cols_); }
    auto block(Index g, Index h) { return data_.block(g * rows_, h * cols_, rows_, cols_); }

    /// G × G samples of kernel (i, j).
    MatrixXd kernel(Index i, Index j) const;
    void set_kernel_zero(Index i, Index j);

private:
    MatrixXd data_;
    Grid grid_;
    Index rows_;
    Index cols_;
};

double l2_norm(const VectorXd& curve, const Grid& grid);
double hs_norm(const MatrixXd& kernel, const Grid& grid);

struct CenteredPanel {
    CurvePanel panel;
    /// p × G time-mean curves.
    MatrixXd mean;
};

CenteredPanel center_panel(const CurvePanel& panel);

} // namespace ffm
