#pragma once

// Simulated functional factor panels
//
//     Y_t(u) = κ0 A X̃_t(u) + ε_t(u),
//
// with Fourier-expanded latent curves whose coefficients follow a VAR(1), and
// three idiosyncratic designs: homogeneous white noise (S1), heteroscedastic
// white noise (S2) and an extra pervasive white-noise factor (S3).

#include <cstdint>
#include <string_view>

#include "ffm/curves.hpp"

namespace ffm {

enum class Scenario { S1, S2, S3 };

std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view s);

enum class LoadingSparsity { None, Row, Column };

std::string_view to_string(LoadingSparsity s);
LoadingSparsity loading_sparsity_from_string(std::string_view s);

struct SimConfig {
    Index n = 100;
    Index p = 50;
    Index r = 4;
    /// Factor strength exponent; entries of A have scale p^{-δ/2}.
    double delta = 0.0;
    double kappa0 = 1.0;
    Scenario scenario = Scenario::S1;
    /// Strength of the extra S3 factor.
    double kappa1 = 1.0;
    double rho = 0.45;
    double iota = 0.75;
    Index n_basis = 50;
    std::uint64_t seed = 0;
    LoadingSparsity sparsity = LoadingSparsity::None;
    /// Fraction of zero rows (Row) or of zeros within each column (Column).
    double sparsity_fraction = 0.8;
    /// Burn-in steps for the coefficient VAR.
    Index burn_in = 200;

    void validate() const;
};

struct GroundTruth {
    /// p × r, or p × (r+1) with a trailing column of ones under S3.
    MatrixXd A;
    /// Orthonormal basis of span(A).
    MatrixXd K_true;
    Index r_true = 0;
};

/// Rows are the orthonormal Fourier system on [a, b] evaluated on the grid:
/// 1, √2 cos(2πx), √2 sin(2πx), √2 cos(4πx), ... with x = (u − a)/(b − a),
/// divided by √(b − a).
MatrixXd fourier_basis(const Grid& grid, Index m);

GroundTruth gen_loading(const SimConfig& cfg);

/// Latent curves X̃_t as an n-by-r panel (without the κ0 scale).
CurvePanel gen_factors(const SimConfig& cfg, const Grid& grid);

/// Idiosyncratic curves ε_t as an n-by-p panel. Under S3 this includes the
/// κ1 ε_{t0} 1_p term.
CurvePanel gen_noise(const SimConfig& cfg, const Grid& grid);

struct SimPanel {
    CurvePanel panel;
    GroundTruth truth;
};

/// κ0 is taken as 1 under S3 regardless of cfg.kappa0.
SimPanel gen_panel(const SimConfig& cfg, const Grid& grid);

} // namespace ffm
