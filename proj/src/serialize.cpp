#include "ffm/serialize.hpp"

#include <fstream>
#include <sstream>

#include "ffm/error.hpp"

namespace ffm {

Json matrix_to_json(const MatrixXd& m)
{
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

MatrixXd matrix_from_json(const Json& j)
{
    if (!j.is_array())
        throw DataError("matrix must be an array of rows");
    const auto rows = static_cast<Index>(j.size());
    const Index cols = rows == 0 ? 0 : static_cast<Index>(j.at(0).size());
    MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const Json& row = j.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw DataError("matrix rows must all have " + std::to_string(cols) + " entries");
        for (Index c = 0; c < cols; ++c)
            m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

Json vector_to_json(const VectorXd& v)
{
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i)
        out.push_back(v(i));
    return out;
}

VectorXd vector_from_json(const Json& j)
{
    if (!j.is_array())
        throw DataError("vector must be an array");
    VectorXd v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i)
        v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

Json to_json(const WeightSpec& w)
{
    return {{"kind", std::string(to_string(w.kind))}, {"q", w.q}, {"seed", w.seed}, {"ridge", w.ridge}};
}

WeightSpec weight_from_json(const Json& j)
{
    WeightSpec w;
    w.kind = weight_kind_from_string(j.at("kind").get<std::string>());
    w.q = j.at("q").get<Index>();
    w.seed = j.at("seed").get<std::uint64_t>();
    w.ridge = j.at("ridge").get<double>();
    return w;
}

Json to_json(const FactorEstimate& est)
{
    return {{"eigenvalues", vector_to_json(est.eigenvalues)},
            {"ratios", vector_to_json(est.ratios)},
            {"r_hat", est.r_hat},
            {"loadings", matrix_to_json(est.loadings)},
            {"weight", to_json(est.weight)},
            {"k0", est.k0},
            {"c_r", est.c_r},
            {"seed", est.weight.seed}};
}

FactorEstimate estimate_from_json(const Json& j)
{
    try {
        FactorEstimate est;
        est.eigenvalues = vector_from_json(j.at("eigenvalues"));
        est.ratios = vector_from_json(j.at("ratios"));
        est.r_hat = j.at("r_hat").get<Index>();
        est.loadings = matrix_from_json(j.at("loadings"));
        est.weight = weight_from_json(j.at("weight"));
        est.k0 = j.at("k0").get<Index>();
        est.c_r = j.at("c_r").get<double>();
        return est;
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed estimate document: ") + e.what());
    }
}

namespace {

Json folds_to_json(const std::vector<std::pair<Index, Index>>& folds)
{
    Json out = Json::array();
    for (const auto& [b, e] : folds)
        out.push_back({{"begin", b}, {"end", e}});
    return out;
}

} // namespace

Json to_json(const CvThresholdResult& r)
{
    return {{"lag", r.lag}, {"eta", r.eta}, {"grid", r.grid}, {"scores", r.scores}, {"folds", folds_to_json(r.folds)}};
}

Json to_json(const CvCardinalityResult& r)
{
    return {{"c0", r.c0}, {"grid", r.grid}, {"scores", r.scores}, {"folds", folds_to_json(r.folds)}};
}

Json to_json(const SparsePcaConfig& c)
{
    return {{"r", c.r},
            {"cardinality", c.cardinality},
            {"deflation", std::string(to_string(c.deflation))},
            {"search", std::string(to_string(c.search))},
            {"starts", c.starts},
            {"mode", std::string(to_string(c.mode))}};
}

Json to_json(const SparsePcaResult& r)
{
    return {{"loadings", matrix_to_json(r.loadings)}, {"supports", r.supports}, {"objective", r.objective}};
}

Json to_json(const TspcaResult& r)
{
    Json eta_reports = Json::array();
    for (const auto& rep : r.eta_reports)
        eta_reports.push_back(to_json(rep));
    Json out{{"etas", r.etas},
             {"threshold_cv", eta_reports},
             {"c0", r.c0},
             {"k0", r.m.k0},
             {"weight", to_json(r.m.weight)},
             {"sparse_pca", to_json(r.pca)}};
    out["cardinality_cv"] = r.c0_report ? to_json(*r.c0_report) : Json(nullptr);
    return out;
}

Json to_json(const ForecastReport& r)
{
    Json splits = Json::array();
    for (const auto& s : r.splits)
        splits.push_back({{"train_end", s.train_end},
                          {"target", s.target},
                          {"abs_error", s.abs_error},
                          {"sq_error", s.sq_error}});
    return {{"method", r.method}, {"h", r.h}, {"train_len", r.train_len}, {"mape", r.mape},
            {"mspe", r.mspe},     {"splits", splits}};
}

Json to_json(const GroundTruth& t)
{
    return {{"A", matrix_to_json(t.A)}, {"K_true", matrix_to_json(t.K_true)}, {"r_true", t.r_true}};
}

Json to_json(const SimConfig& c)
{
    return {{"n", c.n},
            {"p", c.p},
            {"r", c.r},
            {"delta", c.delta},
            {"kappa0", c.kappa0},
            {"kappa1", c.kappa1},
            {"scenario", std::string(to_string(c.scenario))},
            {"rho", c.rho},
            {"iota", c.iota},
            {"n_basis", c.n_basis},
            {"seed", c.seed},
            {"sparsity", std::string(to_string(c.sparsity))},
            {"sparsity_fraction", c.sparsity_fraction},
            {"burn_in", c.burn_in}};
}

std::string dump(const Json& j)
{
    return j.dump(2) + "\n";
}

void write_json_file(const std::string& path, const Json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot open '" + path + "' for writing");
    out << dump(j);
    if (!out)
        throw DataError("failed writing '" + path + "'");
}

Json read_json_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw DataError("'" + path + "': " + e.what());
    }
}

} // namespace ffm
