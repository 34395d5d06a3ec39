#include "cli/commands.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli/benchmark.hpp"
#include "cli/config.hpp"
#include "ffm/csv_io.hpp"
#include "ffm/error.hpp"
#include "ffm/forecast.hpp"
#include "ffm/rng.hpp"
#include "ffm/serialize.hpp"
#include "ffm/simgen.hpp"
#include "ffm/sparse.hpp"

namespace ffm::cli {

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 1;
    Index reps = 1;
    int threads = 1;
};

struct SimOpts {
    SimConfig cfg;
    std::string scenario = "S1";
    std::string sparsity = "none";
    Index grid_size = 51;
    double grid_lower = 0.0;
    double grid_upper = 1.0;

    SimConfig resolve() const
    {
        SimConfig c = cfg;
        c.scenario = scenario_from_string(scenario);
        c.sparsity = loading_sparsity_from_string(sparsity);
        c.validate();
        return c;
    }
};

struct WeightOpts {
    Index k0 = 4;
    std::string kind = "projected";
    Index q = 12;
    double ridge = 0.0;
    double c_r = 0.75;
    Index rank = 0;

    WeightSpec spec(std::uint64_t master) const
    {
        return {weight_kind_from_string(kind), q, derive_seed(master, "projection"), ridge};
    }
};

struct SparseOpts {
    std::string etas;
    std::string eta_grid;
    std::string c0_grid;
    Index cardinality = 0;
    int folds = 5;
    std::string deflation = "schur";
    std::string search = "greedy";
    Index starts = 10;
    std::string mode = "column";

    CvConfig cv() const
    {
        CvConfig c;
        c.folds = folds;
        c.eta_grid = parse_double_list(eta_grid, "eta-grid");
        c.c0_grid = parse_index_list(c0_grid, "c0-grid");
        c.validate();
        return c;
    }
    std::optional<std::vector<double>> fixed_etas() const
    {
        auto v = parse_double_list(etas, "etas");
        if (v.empty())
            return std::nullopt;
        return v;
    }
};

struct InputOpts {
    std::string panel;
    std::string grid;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "Flat key = value file; command-line flags override it");
    sub->add_option("--seed", c.seed, "Master seed");
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--reps", c.reps, "Replications")->check(CLI::PositiveNumber);
    sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

void add_sim(CLI::App* sub, SimOpts& s, bool with_kappa0)
{
    sub->add_option("--n", s.cfg.n, "Time length");
    sub->add_option("--p", s.cfg.p, "Number of series");
    sub->add_option("--r", s.cfg.r, "Number of factors");
    sub->add_option("--delta", s.cfg.delta, "Factor strength exponent in [0,1]");
    if (with_kappa0)
        sub->add_option("--kappa0", s.cfg.kappa0, "Factor scale");
    sub->add_option("--kappa1", s.cfg.kappa1, "Strength of the extra S3 factor");
    sub->add_option("--scenario", s.scenario, "S1 | S2 | S3");
    sub->add_option("--rho", s.cfg.rho, "VAR coefficient base");
    sub->add_option("--iota", s.cfg.iota, "Innovation decay exponent");
    sub->add_option("--n-basis", s.cfg.n_basis, "Fourier functions per latent curve");
    sub->add_option("--burn-in", s.cfg.burn_in, "VAR burn-in steps");
    sub->add_option("--sparsity", s.sparsity, "none | row | column");
    sub->add_option("--sparsity-fraction", s.cfg.sparsity_fraction, "Fraction of zero loadings");
    sub->add_option("--grid-size", s.grid_size, "Grid points");
    sub->add_option("--grid-lower", s.grid_lower, "Grid lower bound");
    sub->add_option("--grid-upper", s.grid_upper, "Grid upper bound");
}

void add_weight(CLI::App* sub, WeightOpts& w)
{
    sub->add_option("--k0", w.k0, "Number of lags");
    sub->add_option("--weight", w.kind, "projected | identity | diagonal");
    sub->add_option("--q", w.q, "Projection dimension");
    sub->add_option("--ridge", w.ridge, "Ridge added before inverting the projected covariance");
    sub->add_option("--c-r", w.c_r, "Ratio-estimator search range as a fraction of p");
    sub->add_option("--rank", w.rank, "Number of factors (0: ratio estimator)");
}

void add_sparse(CLI::App* sub, SparseOpts& s)
{
    sub->add_option("--etas", s.etas, "Comma-separated thresholds, one per lag (empty: cross-validate)");
    sub->add_option("--eta-grid", s.eta_grid, "Comma-separated threshold candidates (empty: data-driven)");
    sub->add_option("--cardinality", s.cardinality, "Nonzeros per loading column (0: cross-validate)");
    sub->add_option("--c0-grid", s.c0_grid, "Comma-separated cardinality candidates");
    sub->add_option("--folds", s.folds, "Cross-validation blocks");
    sub->add_option("--deflation", s.deflation, "schur | projection");
    sub->add_option("--search", s.search, "greedy | exhaustive");
    sub->add_option("--starts", s.starts, "Greedy restarts from the largest diagonal entries");
    sub->add_option("--mode", s.mode, "column | row");
}

void add_input(CLI::App* sub, InputOpts& in)
{
    sub->add_option("--panel", in.panel, "Panel CSV")->required();
    sub->add_option("--grid", in.grid, "Grid CSV")->required();
}

CurvePanel load_panel(const InputOpts& in)
{
    const Grid grid = read_grid_csv(in.grid);
    return read_panel_csv(in.panel, grid);
}

std::vector<Index> default_c0_grid(Index p)
{
    std::vector<Index> grid;
    if (p <= 20) {
        for (Index c = 1; c <= p; ++c)
            grid.push_back(c);
        return grid;
    }
    for (int i = 1; i <= 10; ++i) {
        const Index c = (p * i + 9) / 10;
        if (grid.empty() || c > grid.back())
            grid.push_back(c);
    }
    return grid;
}

void write_loadings_csv(const std::filesystem::path& path, const MatrixXd& k)
{
    std::ostringstream out;
    out << "series";
    for (Index c = 0; c < k.cols(); ++c)
        out << ",k" << c + 1;
    out << '\n';
    for (Index i = 0; i < k.rows(); ++i) {
        out << i + 1;
        for (Index c = 0; c < k.cols(); ++c)
            out << ',' << format_double(k(i, c));
        out << '\n';
    }
    write_text_file(path, out.str());
}

void finish(const CLI::App* sub, const std::filesystem::path& dir, std::vector<std::string> files)
{
    files.push_back("manifest.cfg");
    write_text_file(dir / "manifest.cfg", manifest_text(*sub, files));
}

std::string rep_dir(Index rep, Index reps)
{
    if (reps == 1)
        return "";
    std::ostringstream s;
    s << "rep_";
    s.width(4);
    s.fill('0');
    s << rep + 1;
    return s.str();
}

void cmd_simulate(const CLI::App* sub, const Common& c, const SimOpts& s)
{
    const SimConfig base = s.resolve();
    const Grid grid = Grid::uniform(s.grid_size, s.grid_lower, s.grid_upper);
    const auto dir = ensure_dir(c.out);
    std::vector<std::string> files{"grid.csv"};
    write_grid_csv((dir / "grid.csv").string(), grid);
    for (Index rep = 0; rep < c.reps; ++rep) {
        SimConfig cfg = base;
        cfg.seed = replication_seed(c.seed, rep);
        const SimPanel sim = gen_panel(cfg, grid);
        const std::string sub_dir = rep_dir(rep, c.reps);
        const auto target = sub_dir.empty() ? dir : ensure_dir((dir / sub_dir).string());
        const std::string prefix = sub_dir.empty() ? "" : sub_dir + "/";
        write_panel_csv((target / "panel.csv").string(), sim.panel);
        Json truth = to_json(sim.truth);
        truth["config"] = to_json(cfg);
        write_json_file((target / "truth.json").string(), truth);
        files.push_back(prefix + "panel.csv");
        files.push_back(prefix + "truth.json");
    }
    finish(sub, dir, files);
    std::cout << "simulated " << c.reps << " panel(s): n=" << base.n << " p=" << base.p << " G=" << grid.size()
              << " -> " << c.out << "\n";
}

void cmd_estimate(const CLI::App* sub, const Common& c, const InputOpts& in, const WeightOpts& w, bool rotate)
{
    const CurvePanel panel = load_panel(in);
    const FactorEstimate est = estimate_factors(panel, w.k0, w.spec(c.seed), {.c_r = w.c_r, .rank = w.rank});
    const auto dir = ensure_dir(c.out);
    std::vector<std::string> files{"estimate.json", "eigen.csv", "loadings.csv"};
    write_json_file((dir / "estimate.json").string(), to_json(est));

    std::ostringstream eig;
    eig << "j,eigenvalue,ratio\n";
    for (Index j = 0; j < est.eigenvalues.size(); ++j) {
        eig << j + 1 << ',' << format_double(est.eigenvalues(j)) << ',';
        if (j < est.ratios.size())
            eig << format_double(est.ratios(j));
        eig << '\n';
    }
    write_text_file(dir / "eigen.csv", eig.str());
    write_loadings_csv(dir / "loadings.csv", est.loadings);

    if (rotate) {
        const VarimaxResult vm = varimax(est.loadings);
        Json j{{"loadings", matrix_to_json(vm.loadings)},
               {"rotation", matrix_to_json(vm.rotation)},
               {"converged", vm.converged},
               {"iterations", vm.iterations},
               {"criterion", vm.criterion}};
        write_json_file((dir / "varimax.json").string(), j);
        files.push_back("varimax.json");
    }
    finish(sub, dir, files);
    std::cout << "r_hat = " << est.r_hat << " (weight " << w.kind << ", k0 " << w.k0 << ")\n";
}

void cmd_sparse_estimate(const CLI::App* sub, const Common& c, const InputOpts& in, const WeightOpts& w,
                         const SparseOpts& s)
{
    const CurvePanel panel = load_panel(in);
    const WeightSpec weight = w.spec(c.seed);
    TspcaOptions opts;
    opts.k0 = w.k0;
    opts.weight = weight;
    opts.cv = s.cv();
    if (opts.cv.c0_grid.empty())
        opts.cv.c0_grid = default_c0_grid(panel.p());
    opts.pca.deflation = deflation_from_string(s.deflation);
    opts.pca.search = support_search_from_string(s.search);
    opts.pca.starts = s.starts;
    opts.pca.mode = sparsity_mode_from_string(s.mode);

    std::vector<CvThresholdResult> eta_reports;
    std::vector<double> etas;
    if (auto fixed = s.fixed_etas()) {
        etas = *fixed;
    } else {
        for (Index k = 1; k <= w.k0; ++k) {
            eta_reports.push_back(cv_threshold(panel, k, opts.cv));
            etas.push_back(eta_reports.back().eta);
        }
    }
    opts.etas = etas;
    const MMatrix m = build_M_thresholded(panel, w.k0, etas, weight);
    const FactorEstimate est = estimate_from_M(m, {.c_r = w.c_r, .rank = w.rank});
    opts.pca.r = est.loadings.cols();
    if (s.cardinality > 0) {
        opts.pca.cardinality = s.cardinality;
        opts.fixed_cardinality = true;
    }
    TspcaResult res = tspca(panel, opts);
    res.eta_reports = eta_reports;

    const auto dir = ensure_dir(c.out);
    Json doc = to_json(res);
    doc["r_hat"] = est.r_hat;
    doc["eigenvalues"] = vector_to_json(est.eigenvalues);
    doc["ratios"] = vector_to_json(est.ratios);
    write_json_file((dir / "tspca.json").string(), doc);
    write_loadings_csv(dir / "loadings.csv", res.pca.loadings);
    finish(sub, dir, {"tspca.json", "loadings.csv"});
    std::cout << "r = " << opts.pca.r << ", C0 = " << res.c0 << "\n";
}

struct ForecastOpts {
    std::string h = "1";
    Index train_len = 0;
    Index max_order = 3;
    Index n_scores = 5;
    bool sparse = false;
    bool baseline = true;
    bool oracle = false;
};

void cmd_forecast(const CLI::App* sub, const Common& c, const InputOpts& in, const WeightOpts& w,
                  const SparseOpts& s, const ForecastOpts& f)
{
    const CurvePanel panel = load_panel(in);
    const WeightSpec weight = w.spec(c.seed);
    const std::vector<Index> horizons = parse_index_list(f.h, "h");
    if (horizons.empty())
        throw ConfigError("need at least one horizon");

    ForecastConfig fc;
    fc.train_len = f.train_len;
    fc.max_order = f.max_order;
    fc.n_scores = f.n_scores;
    fc.rank = w.rank;
    fc.c_r = w.c_r;
    fc.sparse = f.sparse;
    if (f.sparse) {
        fc.cv = s.cv();
        if (fc.cv.c0_grid.empty())
            fc.cv.c0_grid = default_c0_grid(panel.p());
        if (s.cardinality > 0)
            fc.cardinality = s.cardinality;
        fc.etas = s.fixed_etas();
        fc.deflation = deflation_from_string(s.deflation);
        fc.search = support_search_from_string(s.search);
        fc.starts = s.starts;
        fc.mode = sparsity_mode_from_string(s.mode);
    }

    Json reports = Json::array();
    std::ostringstream summary;
    std::ostringstream splits;
    summary << "method,h,mape,mspe\n";
    splits << "method,h,train_end,target,abs_error,sq_error\n";
    auto record = [&](const ForecastReport& rep) {
        reports.push_back(to_json(rep));
        summary << rep.method << ',' << rep.h << ',' << format_double(rep.mape) << ',' << format_double(rep.mspe)
                << '\n';
        for (const auto& e : rep.splits)
            splits << rep.method << ',' << rep.h << ',' << e.train_end << ',' << e.target + 1 << ','
                   << format_double(e.abs_error) << ',' << format_double(e.sq_error) << '\n';
        std::cout << rep.method << " h=" << rep.h << ": MAPE " << format_double(rep.mape) << ", MSPE "
                  << format_double(rep.mspe) << "\n";
    };
    for (const Index h : horizons) {
        fc.h = h;
        record(expanding_window_eval(panel, fc, w.k0, weight));
        if (f.baseline) {
            const Predictor mean = [](const CurvePanel& train, Index) { return historical_mean_prediction(train); };
            record(expanding_window_eval(panel, fc, mean, "historical_mean"));
        }
        if (f.oracle) {
            const Predictor oracle = [&panel](const CurvePanel& train, Index hh) {
                return panel.slice(train.n() + hh - 1);
            };
            record(expanding_window_eval(panel, fc, oracle, "oracle"));
        }
    }
    const auto dir = ensure_dir(c.out);
    write_json_file((dir / "forecast.json").string(), Json{{"reports", reports}});
    write_text_file(dir / "forecast.csv", summary.str());
    write_text_file(dir / "splits.csv", splits.str());
    finish(sub, dir, {"forecast.json", "forecast.csv", "splits.csv"});
}

struct BenchOpts {
    std::string strengths = "0.1,0.2,0.5,1,2";
    std::string vary = "kappa0";
    std::string methods = "projected,identity,diagonal";
    bool use_true_rank = false;
    std::string tspca_weight = "projected";
};

void cmd_benchmark(const CLI::App* sub, const Common& c, const SimOpts& s, const WeightOpts& w,
                   const SparseOpts& sp, const BenchOpts& b)
{
    BenchmarkConfig cfg;
    cfg.sim = s.resolve();
    cfg.grid_size = s.grid_size;
    cfg.grid_lower = s.grid_lower;
    cfg.grid_upper = s.grid_upper;
    cfg.strengths = parse_double_list(b.strengths, "strengths");
    if (b.vary != "kappa0" && b.vary != "kappa1")
        throw ConfigError("vary must be kappa0 or kappa1");
    cfg.vary_kappa1 = b.vary == "kappa1";
    cfg.methods.clear();
    std::istringstream ms(b.methods);
    for (std::string m; std::getline(ms, m, ',');)
        if (!m.empty())
            cfg.methods.push_back(m);
    cfg.k0 = w.k0;
    cfg.q = w.q;
    cfg.c_r = w.c_r;
    cfg.use_true_rank = b.use_true_rank;
    cfg.tspca_weight = weight_kind_from_string(b.tspca_weight);
    if (sp.cardinality > 0)
        cfg.cardinality = sp.cardinality;
    cfg.etas = sp.fixed_etas();
    cfg.cv = sp.cv();
    if (cfg.cv.c0_grid.empty())
        cfg.cv.c0_grid = default_c0_grid(cfg.sim.p);
    cfg.deflation = deflation_from_string(sp.deflation);
    cfg.search = support_search_from_string(sp.search);
    cfg.starts = sp.starts;
    cfg.mode = sparsity_mode_from_string(sp.mode);
    cfg.reps = c.reps;
    cfg.threads = c.threads;
    cfg.seed = c.seed;

    const BenchmarkResult res = run_benchmark(cfg);
    const auto dir = ensure_dir(c.out);
    std::ostringstream summary;
    write_summary_csv(summary, res, cfg.vary_kappa1);
    std::ostringstream records;
    write_records_csv(records, res, cfg.vary_kappa1);
    write_text_file(dir / "summary.csv", summary.str());
    write_text_file(dir / "replications.csv", records.str());
    finish(sub, dir, {"summary.csv", "replications.csv"});
    std::cout << summary.str();
}

void setup_logging(bool verbose)
{
    auto logger = spdlog::get("ffm");
    if (!logger) {
        logger = spdlog::stderr_color_mt("ffm");
        spdlog::set_default_logger(logger);
    }
    spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);
}

} // namespace

int run(const std::vector<std::string>& args_in)
{
    CLI::App app{"Factor models for high-dimensional functional time series"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

    auto configure = [](CLI::App* sub) {
        sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    };

    Common common;
    SimOpts sim;
    WeightOpts weight;
    // Forecasting targets short series, hence fewer lags by default.
    WeightOpts forecast_weight;
    forecast_weight.k0 = 2;
    SparseOpts sparse;
    InputOpts input;
    ForecastOpts fopts;
    BenchOpts bench;
    bool rotate = false;

    CLI::App* simulate = app.add_subcommand("simulate", "Generate simulated panels with ground truth");
    configure(simulate);
    add_common(simulate, common);
    add_sim(simulate, sim, true);

    CLI::App* estimate = app.add_subcommand("estimate", "Estimate the number of factors and the loading space");
    configure(estimate);
    add_common(estimate, common);
    add_input(estimate, input);
    add_weight(estimate, weight);
    estimate->add_flag("--varimax", rotate, "Also write varimax-rotated loadings");

    CLI::App* sparse_est = app.add_subcommand("sparse-estimate", "Thresholded sparse loading estimation");
    configure(sparse_est);
    add_common(sparse_est, common);
    add_input(sparse_est, input);
    add_weight(sparse_est, weight);
    add_sparse(sparse_est, sparse);

    CLI::App* forecast = app.add_subcommand("forecast", "Expanding-window factor-model forecasting");
    configure(forecast);
    add_common(forecast, common);
    add_input(forecast, input);
    add_weight(forecast, forecast_weight);
    add_sparse(forecast, sparse);
    forecast->add_option("--horizon", fopts.h, "Comma-separated forecast horizons");
    forecast->add_option("--train-len", fopts.train_len, "Initial training length (0: n/2)");
    forecast->add_option("--max-order", fopts.max_order, "Largest VAR order");
    forecast->add_option("--n-scores", fopts.n_scores, "Fourier scores per factor curve");
    forecast->add_flag("--sparse", fopts.sparse, "Use thresholded sparse loadings (SFMP)");
    forecast->add_flag("--baseline,!--no-baseline", fopts.baseline, "Also score the historical-mean predictor")
        ->default_str("true");
    forecast->add_flag("--oracle", fopts.oracle, "Also score a predictor that returns the truth (debugging)");

    CLI::App* benchmark = app.add_subcommand("benchmark", "Monte Carlo comparison of estimators");
    configure(benchmark);
    add_common(benchmark, common);
    add_sim(benchmark, sim, false);
    add_weight(benchmark, weight);
    add_sparse(benchmark, sparse);
    benchmark->add_option("--strengths", bench.strengths, "Comma-separated kappa0 (or kappa1) values");
    benchmark->add_option("--vary", bench.vary, "kappa0 | kappa1");
    benchmark->add_option("--methods", bench.methods, "Comma-separated: projected, identity, diagonal, tspca");
    benchmark->add_flag("--use-true-rank", bench.use_true_rank, "Score distances with the true number of factors");
    benchmark->add_option("--tspca-weight", bench.tspca_weight, "Weight used by tspca");

    try {
        const std::set<std::string> names{"simulate", "estimate", "sparse-estimate", "forecast", "benchmark"};
        std::vector<std::string> args = expand_config_args(args_in, names);
        if (args.empty())
            args.emplace_back("ffm");
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(rev);
        setup_logging(verbose);

        if (simulate->parsed())
            cmd_simulate(simulate, common, sim);
        else if (estimate->parsed())
            cmd_estimate(estimate, common, input, weight, rotate);
        else if (sparse_est->parsed())
            cmd_sparse_estimate(sparse_est, common, input, weight, sparse);
        else if (forecast->parsed())
            cmd_forecast(forecast, common, input, forecast_weight, sparse, fopts);
        else if (benchmark->parsed())
            cmd_benchmark(benchmark, common, sim, weight, sparse, bench);
        return kOk;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace ffm::cli
