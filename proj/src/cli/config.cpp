#include "cli/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ffm/error.hpp"

namespace ffm::cli {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& text)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ','))
        out.push_back(trim(item));
    return out;
}

} // namespace

KeyValues parse_flat_config(std::istream& in, const std::string& origin)
{
    KeyValues out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(std::string_view(t).substr(0, eq));
        std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

KeyValues read_flat_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    return parse_flat_config(in, path);
}

std::vector<std::string> expand_config_args(const std::vector<std::string>& args,
                                            const std::set<std::string>& subcommands)
{
    std::vector<std::string> rest;
    std::vector<std::string> configs;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--config") {
            if (i + 1 >= args.size())
                throw ConfigError("--config needs a path");
            configs.push_back(args[++i]);
        } else if (a.rfind("--config=", 0) == 0) {
            configs.push_back(a.substr(9));
        } else {
            rest.push_back(a);
        }
    }
    if (configs.empty())
        return rest;
    std::vector<std::string> injected;
    for (const auto& path : configs)
        for (const auto& [k, v] : read_flat_config(path)) {
            // CLI11 reads "--key=" as a key whose value is the next token, so
            // empty values are dropped; every empty-valued option defaults to "".
            if (!v.empty())
                injected.push_back("--" + k + "=" + v);
        }

    std::vector<std::string> out;
    bool done = false;
    for (std::size_t i = 0; i < rest.size(); ++i) {
        out.push_back(rest[i]);
        if (!done && i > 0 && subcommands.count(rest[i])) {
            out.insert(out.end(), injected.begin(), injected.end());
            done = true;
        }
    }
    if (!done)
        throw ConfigError("--config given without a subcommand");
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what)
{
    std::vector<double> out;
    if (trim(text).empty())
        return out;
    for (const auto& item : split_commas(text)) {
        double v = 0.0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc() || res.ptr != item.data() + item.size())
            throw ConfigError(what + ": '" + item + "' is not a number");
        out.push_back(v);
    }
    return out;
}

std::vector<Index> parse_index_list(const std::string& text, const std::string& what)
{
    std::vector<Index> out;
    if (trim(text).empty())
        return out;
    for (const auto& item : split_commas(text)) {
        long long v = 0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc() || res.ptr != item.data() + item.size())
            throw ConfigError(what + ": '" + item + "' is not an integer");
        out.push_back(static_cast<Index>(v));
    }
    return out;
}

std::filesystem::path ensure_dir(const std::string& path)
{
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec || !std::filesystem::is_directory(path))
        throw DataError("cannot create output directory '" + path + "'" + (ec ? ": " + ec.message() : ""));
    return std::filesystem::path(path);
}

std::string manifest_text(const CLI::App& sub, const std::vector<std::string>& files)
{
    std::ostringstream out;
    out << "# ffm " << sub.get_name() << "\n";
    out << "# rerun with: ffm " << sub.get_name() << " --config manifest.cfg\n";
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config" || name == "out")
            continue;
        std::string value = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
        if (opt->get_expected_min() == 0) {
            // Flags: write the resulting boolean, since an empty value would
            // switch the flag on when the manifest is loaded back.
            bool on = false;
            if (opt->count() > 0)
                on = opt->as<bool>();
            else if (!value.empty())
                on = CLI::detail::to_flag_value(value) > 0;
            value = on ? "true" : "false";
        }
        if (value.find_first_of(" #=") != std::string::npos)
            value = '"' + value + '"';
        out << name << " = " << value << "\n";
    }
    out << "# files:\n";
    for (const auto& f : files)
        out << "#   " << f << "\n";
    return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out)
        throw DataError("failed writing '" + path.string() + "'");
}

} // namespace ffm::cli
