#pragma once

// Monte Carlo comparison of loading estimators over a grid of factor
// strengths: mean/SE of the subspace distance and the frequency of r̂ = r.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ffm/estimator.hpp"
#include "ffm/simgen.hpp"
#include "ffm/sparse.hpp"

namespace ffm::cli {

struct BenchmarkConfig {
    /// Base simulation settings; seed, and kappa0 or kappa1, are set per run.
    SimConfig sim;
    Index grid_size = 51;
    double grid_lower = 0.0;
    double grid_upper = 1.0;
    /// Values of kappa0 (or kappa1 when vary_kappa1).
    std::vector<double> strengths;
    bool vary_kappa1 = false;
    /// Any of projected, identity, diagonal, tspca.
    std::vector<std::string> methods{"projected", "identity", "diagonal"};
    Index k0 = 4;
    Index q = 12;
    double c_r = 0.75;
    /// Score the distance with the true number of factors instead of r̂.
    bool use_true_rank = false;

    WeightKind tspca_weight = WeightKind::Projected;
    /// Fixed TSPCA cardinality; unset selects it over cv.c0_grid.
    std::optional<Index> cardinality;
    /// Fixed thresholds; unset selects them by cross-validation.
    std::optional<std::vector<double>> etas;
    CvConfig cv;
    Deflation deflation = Deflation::Schur;
    SupportSearch search = SupportSearch::GreedyForward;
    Index starts = 10;
    SparsityMode mode = SparsityMode::Column;

    Index reps = 1;
    int threads = 1;
    std::uint64_t seed = 1;

    void validate() const;
};

struct RepRecord {
    std::string method;
    double strength = 0.0;
    Index rep = 0;
    Index r_true = 0;
    Index r_hat = 0;
    double distance = 0.0;
    /// TSPCA cardinality; 0 for the other methods.
    Index c0 = 0;
};

struct SummaryRow {
    std::string method;
    double strength = 0.0;
    Index reps = 0;
    double mean_distance = 0.0;
    double se_distance = 0.0;
    double freq_correct = 0.0;
    double mean_r_hat = 0.0;
};

struct BenchmarkResult {
    /// Ordered by strength, then method (in config order), then replication.
    std::vector<RepRecord> records;
    std::vector<SummaryRow> summary;
};

/// Seed of replication `rep`; the same across strengths so that the grid is
/// traversed with common random numbers.
std::uint64_t replication_seed(std::uint64_t master, Index rep);

/// Records for one replication at one strength, methods in config order.
std::vector<RepRecord> run_replication(const BenchmarkConfig& cfg, double strength, Index rep);

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

void write_summary_csv(std::ostream& out, const BenchmarkResult& res, bool vary_kappa1);
void write_records_csv(std::ostream& out, const BenchmarkResult& res, bool vary_kappa1);

} // namespace ffm::cli
