#include "ffm/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "ffm/error.hpp"

namespace ffm {

namespace {

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& raw, std::size_t line_no, const std::string& what)
{
    const std::string s = trim(raw);
    double v = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(begin, end, v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != end)
        throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + s + "'");
    return v;
}

long parse_index(const std::string& raw, std::size_t line_no, const std::string& what)
{
    const std::string s = trim(raw);
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + s + "'");
    return v;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("cannot open '" + path + "' for writing");
    return out;
}

} // namespace

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return {buf, res.ptr};
}

Grid parse_grid_csv(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line))
        throw DataError("grid file is empty");
    ++line_no;
    if (trim(line) != "u")
        throw DataError("line 1: grid header must be 'u'");
    std::vector<double> pts;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        pts.push_back(parse_number(line, line_no, "grid point"));
    }
    return Grid(Eigen::Map<VectorXd>(pts.data(), static_cast<Index>(pts.size())));
}

Grid read_grid_csv(const std::string& path)
{
    auto in = open_in(path);
    return parse_grid_csv(in);
}

void write_grid_csv(std::ostream& out, const Grid& grid)
{
    out << "u\n";
    for (Index g = 0; g < grid.size(); ++g)
        out << format_double(grid.points()(g)) << '\n';
}

void write_grid_csv(const std::string& path, const Grid& grid)
{
    auto out = open_out(path);
    write_grid_csv(out, grid);
    if (!out)
        throw DataError("write to '" + path + "' failed");
}

CurvePanel parse_panel_csv(std::istream& in, const Grid& grid)
{
    const Index G = grid.size();
    std::string line;
    if (!std::getline(in, line))
        throw DataError("panel file is empty");
    auto header = split_fields(line);
    if (header.size() < 3 || trim(header[0]) != "t" || trim(header[1]) != "series")
        throw DataError("line 1: panel header must start with 't,series'");
    if (static_cast<Index>(header.size()) - 2 != G)
        throw DataError("line 1: panel has " + std::to_string(header.size() - 2) +
                        " value columns but grid has " + std::to_string(G) + " points");
    for (Index g = 0; g < G; ++g)
        if (trim(header[static_cast<std::size_t>(g + 2)]) != "v" + std::to_string(g + 1))
            throw DataError("line 1: expected column 'v" + std::to_string(g + 1) + "'");

    struct Row {
        long t;
        long s;
        std::vector<double> v;
    };
    std::vector<Row> rows;
    long n = 0;
    long p = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        auto fields = split_fields(line);
        if (static_cast<Index>(fields.size()) != G + 2)
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(G + 2) +
                            " fields, got " + std::to_string(fields.size()));
        Row r{parse_index(fields[0], line_no, "t"), parse_index(fields[1], line_no, "series"), {}};
        if (r.t < 1 || r.s < 1)
            throw DataError("line " + std::to_string(line_no) + ": t and series are 1-based");
        r.v.reserve(static_cast<std::size_t>(G));
        for (Index g = 0; g < G; ++g)
            r.v.push_back(parse_number(fields[static_cast<std::size_t>(g + 2)], line_no, "value"));
        n = std::max(n, r.t);
        p = std::max(p, r.s);
        rows.push_back(std::move(r));
    }
    if (rows.empty())
        throw DataError("panel file has no data rows");
    if (static_cast<long>(rows.size()) != n * p)
        throw DataError("panel rows do not cover t = 1.." + std::to_string(n) + " x series = 1.." +
                        std::to_string(p) + " exactly once");

    MatrixXd values(n, G * p);
    std::vector<char> seen(static_cast<std::size_t>(n * p), 0);
    for (const auto& r : rows) {
        auto& mark = seen[static_cast<std::size_t>((r.t - 1) * p + (r.s - 1))];
        if (mark)
            throw DataError("duplicate row for t=" + std::to_string(r.t) + ", series=" + std::to_string(r.s));
        mark = 1;
        for (Index g = 0; g < G; ++g)
            values(r.t - 1, g * p + (r.s - 1)) = r.v[static_cast<std::size_t>(g)];
    }
    return CurvePanel(std::move(values), grid, p);
}

CurvePanel read_panel_csv(const std::string& path, const Grid& grid)
{
    auto in = open_in(path);
    return parse_panel_csv(in, grid);
}

void write_panel_csv(std::ostream& out, const CurvePanel& panel)
{
    const Index G = panel.grid_size();
    out << "t,series";
    for (Index g = 0; g < G; ++g)
        out << ",v" << (g + 1);
    out << '\n';
    for (Index t = 0; t < panel.n(); ++t)
        for (Index j = 0; j < panel.p(); ++j) {
            out << (t + 1) << ',' << (j + 1);
            for (Index g = 0; g < G; ++g)
                out << ',' << format_double(panel.value(t, j, g));
            out << '\n';
        }
}

void write_panel_csv(const std::string& path, const CurvePanel& panel)
{
    auto out = open_out(path);
    write_panel_csv(out, panel);
    if (!out)
        throw DataError("write to '" + path + "' failed");
}

} // namespace ffm
