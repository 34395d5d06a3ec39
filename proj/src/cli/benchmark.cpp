#include "cli/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "ffm/csv_io.hpp"
#include "ffm/error.hpp"
#include "ffm/rng.hpp"

namespace ffm::cli {

void BenchmarkConfig::validate() const
{
    sim.validate();
    if (strengths.empty())
        throw ConfigError("benchmark needs at least one strength value");
    for (const double s : strengths)
        if (!(s > 0.0) || !std::isfinite(s))
            throw ConfigError("strength values must be positive");
    if (methods.empty())
        throw ConfigError("benchmark needs at least one method");
    for (const auto& m : methods)
        if (m != "projected" && m != "identity" && m != "diagonal" && m != "tspca")
            throw ConfigError("unknown method '" + m + "' (projected|identity|diagonal|tspca)");
    if (grid_size < 2)
        throw ConfigError("grid size must be at least 2");
    if (!(grid_upper > grid_lower))
        throw ConfigError("grid upper bound must exceed lower bound");
    if (k0 < 1 || k0 > sim.n - 2)
        throw ConfigError("k0 must lie in [1, n-2]");
    if (reps < 1)
        throw ConfigError("reps must be at least 1");
    if (threads < 1)
        throw ConfigError("threads must be at least 1");
    if (!(c_r > 0.0 && c_r <= 1.0))
        throw ConfigError("c_r must lie in (0, 1]");
    WeightSpec{WeightKind::Projected, q, 0, 0.0}.validate(sim.p);
    cv.validate();
    if (etas && static_cast<Index>(etas->size()) != k0)
        throw ConfigError("need one threshold per lag");
    if (std::find(methods.begin(), methods.end(), "tspca") != methods.end() && !cardinality && cv.c0_grid.empty())
        throw ConfigError("tspca needs a fixed cardinality or a c0 grid");
}

std::uint64_t replication_seed(std::uint64_t master, Index rep)
{
    return derive_seed(master, "replication", static_cast<std::uint64_t>(rep));
}

std::vector<RepRecord> run_replication(const BenchmarkConfig& cfg, double strength, Index rep)
{
    SimConfig sc = cfg.sim;
    sc.seed = replication_seed(cfg.seed, rep);
    if (cfg.vary_kappa1)
        sc.kappa1 = strength;
    else
        sc.kappa0 = strength;
    const Grid grid = Grid::uniform(cfg.grid_size, cfg.grid_lower, cfg.grid_upper);
    const SimPanel sim = gen_panel(sc, grid);
    const CurvePanel& panel = sim.panel;
    const Index r_true = sim.truth.r_true;
    const std::uint64_t proj_seed = derive_seed(sc.seed, "projection");

    std::vector<MRequest> requests;
    std::vector<double> etas;
    for (const auto& m : cfg.methods) {
        if (m == "tspca") {
            if (cfg.etas) {
                etas = *cfg.etas;
            } else {
                for (Index k = 1; k <= cfg.k0; ++k)
                    etas.push_back(cv_threshold(panel, k, cfg.cv).eta);
            }
            requests.push_back({WeightSpec{cfg.tspca_weight, cfg.q, proj_seed, 0.0}, etas});
        } else {
            requests.push_back({WeightSpec{weight_kind_from_string(m), cfg.q, proj_seed, 0.0}, {}});
        }
    }
    const std::vector<MMatrix> ms = build_M_batch(panel, cfg.k0, requests);

    std::vector<RepRecord> out;
    const EstimateOptions opts{.c_r = cfg.c_r, .rank = cfg.use_true_rank ? r_true : 0};
    for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
        RepRecord rec;
        rec.method = cfg.methods[i];
        rec.strength = strength;
        rec.rep = rep;
        rec.r_true = r_true;
        const FactorEstimate est = estimate_from_M(ms[i], opts);
        rec.r_hat = est.r_hat;
        MatrixXd loadings = est.loadings;
        if (rec.method == "tspca") {
            SparsePcaConfig pc;
            pc.r = est.loadings.cols();
            pc.deflation = cfg.deflation;
            pc.search = cfg.search;
            pc.starts = cfg.starts;
            pc.mode = cfg.mode;
            if (cfg.cardinality) {
                pc.cardinality = std::min(*cfg.cardinality, panel.p());
            } else {
                pc.cardinality = cv_cardinality(panel, cfg.k0, etas, requests[i].weight, pc, cfg.cv).c0;
            }
            if (pc.mode == SparsityMode::Row)
                pc.cardinality = std::max(pc.cardinality, pc.r);
            rec.c0 = pc.cardinality;
            loadings = sparse_pca(ms[i], pc).loadings;
        }
        rec.distance = subspace_distance(loadings, sim.truth.K_true);
        out.push_back(std::move(rec));
    }
    return out;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg)
{
    cfg.validate();
    const auto S = cfg.strengths.size();
    const auto R = static_cast<std::size_t>(cfg.reps);
    // per_rep[rep][strength] -> records in method order
    std::vector<std::vector<std::vector<RepRecord>>> per_rep(R);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> finished{0};
    std::exception_ptr failure;
    std::mutex mu;

    auto worker = [&] {
        while (true) {
            const std::size_t rep = next.fetch_add(1);
            if (rep >= R)
                return;
            {
                const std::lock_guard lock(mu);
                if (failure)
                    return;
            }
            try {
                std::vector<std::vector<RepRecord>> rows;
                for (std::size_t s = 0; s < S; ++s)
                    rows.push_back(run_replication(cfg, cfg.strengths[s], static_cast<Index>(rep)));
                per_rep[rep] = std::move(rows);
                const std::size_t done = ++finished;
                if (R >= 10 && done % (R / 10) == 0)
                    spdlog::info("benchmark: {}/{} replications done", done, R);
            } catch (...) {
                const std::lock_guard lock(mu);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    const auto n_threads = static_cast<std::size_t>(std::min<Index>(cfg.threads, cfg.reps));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    BenchmarkResult res;
    const std::size_t M = cfg.methods.size();
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t m = 0; m < M; ++m) {
            SummaryRow row;
            row.method = cfg.methods[m];
            row.strength = cfg.strengths[s];
            row.reps = cfg.reps;
            double sum = 0.0;
            double sum_sq = 0.0;
            double correct = 0.0;
            double rhat = 0.0;
            for (std::size_t rep = 0; rep < R; ++rep) {
                const RepRecord& rec = per_rep[rep][s][m];
                res.records.push_back(rec);
                sum += rec.distance;
                sum_sq += rec.distance * rec.distance;
                correct += rec.r_hat == rec.r_true ? 1.0 : 0.0;
                rhat += static_cast<double>(rec.r_hat);
            }
            const double n = static_cast<double>(R);
            row.mean_distance = sum / n;
            const double var = R > 1 ? std::max(0.0, (sum_sq - n * row.mean_distance * row.mean_distance) / (n - 1.0)) : 0.0;
            row.se_distance = std::sqrt(var / n);
            row.freq_correct = correct / n;
            row.mean_r_hat = rhat / n;
            res.summary.push_back(row);
        }
    }
    return res;
}

void write_summary_csv(std::ostream& out, const BenchmarkResult& res, bool vary_kappa1)
{
    out << "method," << (vary_kappa1 ? "kappa1" : "kappa0") << ",reps,mean_D,se_D,freq_rhat_correct,mean_rhat\n";
    for (const auto& row : res.summary)
        out << row.method << ',' << format_double(row.strength) << ',' << row.reps << ','
            << format_double(row.mean_distance) << ',' << format_double(row.se_distance) << ','
            << format_double(row.freq_correct) << ',' << format_double(row.mean_r_hat) << '\n';
}

void write_records_csv(std::ostream& out, const BenchmarkResult& res, bool vary_kappa1)
{
    out << "method," << (vary_kappa1 ? "kappa1" : "kappa0") << ",rep,r_true,r_hat,D,c0\n";
    for (const auto& rec : res.records)
        out << rec.method << ',' << format_double(rec.strength) << ',' << rec.rep + 1 << ',' << rec.r_true << ','
            << rec.r_hat << ',' << format_double(rec.distance) << ',' << rec.c0 << '\n';
}

} // namespace ffm::cli
