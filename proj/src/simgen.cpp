#include "ffm/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <spdlog/spdlog.h>

#include "ffm/error.hpp"
#include "ffm/rng.hpp"

namespace ffm {

std::string_view to_string(Scenario s)
{
    switch (s) {
    case Scenario::S1:
        return "S1";
    case Scenario::S2:
        return "S2";
    case Scenario::S3:
        return "S3";
    }
    return "S1";
}

Scenario scenario_from_string(std::string_view s)
{
    if (s == "S1" || s == "s1" || s == "1")
        return Scenario::S1;
    if (s == "S2" || s == "s2" || s == "2")
        return Scenario::S2;
    if (s == "S3" || s == "s3" || s == "3")
        return Scenario::S3;
    throw ConfigError("unknown scenario '" + std::string(s) + "' (S1|S2|S3)");
}

std::string_view to_string(LoadingSparsity s)
{
    switch (s) {
    case LoadingSparsity::None:
        return "none";
    case LoadingSparsity::Row:
        return "row";
    case LoadingSparsity::Column:
        return "column";
    }
    return "none";
}

LoadingSparsity loading_sparsity_from_string(std::string_view s)
{
    if (s == "none")
        return LoadingSparsity::None;
    if (s == "row")
        return LoadingSparsity::Row;
    if (s == "column")
        return LoadingSparsity::Column;
    throw ConfigError("unknown loading sparsity '" + std::string(s) + "' (none|row|column)");
}

void SimConfig::validate() const
{
    if (n < 1)
        throw ConfigError("n must be positive");
    if (p < 1)
        throw ConfigError("p must be positive");
    if (r < 1)
        throw ConfigError("r must be positive");
    if (!(delta >= 0.0 && delta <= 1.0))
        throw ConfigError("delta must lie in [0, 1]");
    if (!(kappa0 > 0.0) || !std::isfinite(kappa0))
        throw ConfigError("kappa0 must be positive");
    if (!std::isfinite(kappa1))
        throw ConfigError("kappa1 must be finite");
    if (!(rho > -1.0 && rho < 1.0))
        throw ConfigError("rho must lie in (-1, 1)");
    if (!std::isfinite(iota))
        throw ConfigError("iota must be finite");
    if (n_basis < 1)
        throw ConfigError("n_basis must be positive");
    if (burn_in < 0)
        throw ConfigError("burn_in must be nonnegative");
    if (sparsity != LoadingSparsity::None && !(sparsity_fraction >= 0.0 && sparsity_fraction < 1.0))
        throw ConfigError("sparsity fraction must lie in [0, 1)");
    const Index cols = r + (scenario == Scenario::S3 ? 1 : 0);
    if (cols > p)
        throw ConfigError("number of factors exceeds p");
}

MatrixXd fourier_basis(const Grid& grid, Index m)
{
    if (m < 1)
        throw ConfigError("Fourier basis size must be positive");
    const double a = grid.lower();
    const double len = grid.length();
    const double scale = 1.0 / std::sqrt(len);
    MatrixXd out(m, grid.size());
    for (Index g = 0; g < grid.size(); ++g) {
        const double x = (grid.points()(g) - a) / len;
        out(0, g) = scale;
        for (Index i = 1; i < m; ++i) {
            const double freq = 2.0 * std::numbers::pi * static_cast<double>((i + 1) / 2);
            const double v = (i % 2 == 1) ? std::cos(freq * x) : std::sin(freq * x);
            out(i, g) = std::numbers::sqrt2 * scale * v;
        }
    }
    return out;
}

namespace {

MatrixXd draw_loading(const SimConfig& cfg, Rng& rng)
{
    const bool sparse = cfg.sparsity != LoadingSparsity::None;
    const double bound =
        std::sqrt(3.0) * (sparse ? 1.0 : std::pow(static_cast<double>(cfg.p), -cfg.delta / 2.0));
    std::uniform_real_distribution<double> unif(-bound, bound);
    MatrixXd a(cfg.p, cfg.r);
    for (Index c = 0; c < cfg.r; ++c)
        for (Index i = 0; i < cfg.p; ++i)
            a(i, c) = unif(rng);

    const auto zeros = static_cast<Index>(std::llround(cfg.sparsity_fraction * static_cast<double>(cfg.p)));
    std::vector<Index> idx(static_cast<std::size_t>(cfg.p));
    if (cfg.sparsity == LoadingSparsity::Row) {
        std::iota(idx.begin(), idx.end(), Index{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        for (Index z = 0; z < zeros; ++z)
            a.row(idx[static_cast<std::size_t>(z)]).setZero();
    } else if (cfg.sparsity == LoadingSparsity::Column) {
        for (Index c = 0; c < cfg.r; ++c) {
            std::iota(idx.begin(), idx.end(), Index{0});
            std::shuffle(idx.begin(), idx.end(), rng);
            for (Index z = 0; z < zeros; ++z)
                a(idx[static_cast<std::size_t>(z)], c) = 0.0;
        }
    }
    if (cfg.scenario == Scenario::S3) {
        a.conservativeResize(Eigen::NoChange, cfg.r + 1);
        a.col(cfg.r).setOnes();
    }
    return a;
}

} // namespace

GroundTruth gen_loading(const SimConfig& cfg)
{
    cfg.validate();
    constexpr int max_attempts = 1000;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Rng rng = make_rng(cfg.seed, "loading", static_cast<std::uint64_t>(attempt));
        MatrixXd a = draw_loading(cfg, rng);
        const Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
        if (qr.rank() < a.cols()) {
            spdlog::warn("loading matrix draw {} is rank deficient ({} < {}), redrawing", attempt, qr.rank(),
                         a.cols());
            continue;
        }
        GroundTruth out;
        const Eigen::HouseholderQR<MatrixXd> hqr(a);
        out.K_true = hqr.householderQ() * MatrixXd::Identity(a.rows(), a.cols());
        out.r_true = a.cols();
        out.A = std::move(a);
        return out;
    }
    throw NumericalError("could not draw a full-rank loading matrix");
}

CurvePanel gen_factors(const SimConfig& cfg, const Grid& grid)
{
    cfg.validate();
    const Index r = cfg.r;
    MatrixXd v(r, r);
    for (Index l = 0; l < r; ++l)
        for (Index m = 0; m < r; ++m)
            v(l, m) = std::pow(cfg.rho, static_cast<double>(std::abs(l - m) + 1));
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(v, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().cwiseAbs().maxCoeff() >= 1.0)
        throw ConfigError("coefficient VAR is not stable for rho=" + std::to_string(cfg.rho) +
                          ", r=" + std::to_string(r));

    const MatrixXd phi = fourier_basis(grid, cfg.n_basis);
    // coef.block(t*r, i, r, 1) = ξ_{t,·,i}
    MatrixXd coef(cfg.n * r, cfg.n_basis);
    Rng rng = make_rng(cfg.seed, "factors");
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd state(r);
    VectorXd next(r);
    for (Index i = 0; i < cfg.n_basis; ++i) {
        const double sd = std::pow(static_cast<double>(i + 1), -cfg.iota);
        state.setZero();
        for (Index t = -cfg.burn_in; t < cfg.n; ++t) {
            next.noalias() = v * state;
            for (Index l = 0; l < r; ++l)
                next(l) += sd * normal(rng);
            state = next;
            if (t >= 0)
                coef.block(t * r, i, r, 1) = state;
        }
    }
    // Curves at grid points: (n·r) × G, row t*r + l is X̃_{tl}.
    const MatrixXd curves = coef * phi;
    MatrixXd values(cfg.n, grid.size() * r);
    for (Index t = 0; t < cfg.n; ++t)
        for (Index g = 0; g < grid.size(); ++g)
            for (Index l = 0; l < r; ++l)
                values(t, g * r + l) = curves(t * r + l, g);
    return CurvePanel(std::move(values), grid, r);
}

CurvePanel gen_noise(const SimConfig& cfg, const Grid& grid)
{
    cfg.validate();
    constexpr Index n_noise_basis = 20;
    const Index p = cfg.p;
    const Index G = grid.size();
    const MatrixXd phi = fourier_basis(grid, n_noise_basis);
    VectorXd decay(n_noise_basis);
    for (Index i = 0; i < n_noise_basis; ++i)
        decay(i) = std::ldexp(1.0, -static_cast<int>(i + 2));
    const MatrixXd scaled_phi = decay.asDiagonal() * phi;

    VectorXd scale = VectorXd::Ones(p);
    if (cfg.scenario == Scenario::S2) {
        Rng rng = make_rng(cfg.seed, "noise", 2);
        std::uniform_int_distribution<int> pick(1, 10);
        for (Index j = 0; j < p; ++j)
            scale(j) = pick(rng) / 5.0;
    }

    Rng rng = make_rng(cfg.seed, "noise", 0);
    Rng common_rng = make_rng(cfg.seed, "noise", 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd z(p, n_noise_basis);
    MatrixXd values(cfg.n, G * p);
    for (Index t = 0; t < cfg.n; ++t) {
        for (Index j = 0; j < p; ++j)
            for (Index i = 0; i < n_noise_basis; ++i)
                z(j, i) = normal(rng);
        MatrixXd eps = scale.asDiagonal() * (z * scaled_phi); // p × G
        if (cfg.scenario == Scenario::S3) {
            VectorXd zt(4);
            for (Index i = 0; i < 4; ++i)
                zt(i) = normal(common_rng);
            const Eigen::RowVectorXd common = zt.transpose() * phi.topRows(4);
            eps.rowwise() += cfg.kappa1 * common;
        }
        for (Index g = 0; g < G; ++g)
            values.block(t, g * p, 1, p) = eps.col(g).transpose();
    }
    return CurvePanel(std::move(values), grid, p);
}

SimPanel gen_panel(const SimConfig& cfg, const Grid& grid)
{
    cfg.validate();
    GroundTruth truth = gen_loading(cfg);
    const CurvePanel x = gen_factors(cfg, grid);
    const CurvePanel eps = gen_noise(cfg, grid);
    const double k0 = cfg.scenario == Scenario::S3 ? 1.0 : cfg.kappa0;
    const auto a = truth.A.leftCols(cfg.r);
    MatrixXd values = eps.values();
    for (Index g = 0; g < grid.size(); ++g)
        values.middleCols(g * cfg.p, cfg.p).noalias() += k0 * x.at_grid(g) * a.transpose();
    return {CurvePanel(std::move(values), grid, cfg.p), std::move(truth)};
}

} // namespace ffm
