#pragma once

// Run-configuration plumbing shared by the subcommands: flat key=value config
// files, list-valued options, output directories and run manifests.

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ffm/curves.hpp"

namespace ffm::cli {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines; `#` starts a comment line, blank lines are
/// skipped and surrounding quotes on the value are removed. Throws ConfigError.
KeyValues parse_flat_config(std::istream& in, const std::string& origin);
KeyValues read_flat_config(const std::string& path);

/// Rewrites argv so that entries of a `--config <path>` file appear as
/// `--key=value` right after the subcommand name, ahead of the explicit
/// arguments (which therefore win).
std::vector<std::string> expand_config_args(const std::vector<std::string>& args,
                                            const std::set<std::string>& subcommands);

std::vector<double> parse_double_list(const std::string& text, const std::string& what);
std::vector<Index> parse_index_list(const std::string& text, const std::string& what);

/// Creates the directory (and parents). Throws DataError if that fails.
std::filesystem::path ensure_dir(const std::string& path);

/// Flat config text holding every option of `sub` (given or default) so that
/// `ffm <sub> --config manifest.cfg` repeats the run, plus the list of files
/// written, as comments.
std::string manifest_text(const CLI::App& sub, const std::vector<std::string>& files);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace ffm::cli
