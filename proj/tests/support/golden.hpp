#pragma once

// Output-tree comparison and CLI invocation for end-to-end checks.

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace golden {

// Regular files below `root`, relative and sorted.
std::vector<std::string> list_files(const std::filesystem::path& root);

// One message per file that is missing on either side or differs in any byte.
std::vector<std::string> diff_bytes(const std::filesystem::path& a, const std::filesystem::path& b,
                                    const std::set<std::string>& skip);

// Compares two text files token by token: numbers agree when
// |x - y| <= abs_tol + rel_tol * max(|x|, |y|), everything else must match
// exactly. Files in `skip` are ignored; files in `actual` without a golden
// counterpart are reported.
std::vector<std::string> diff_numeric(const std::filesystem::path& expected, const std::filesystem::path& actual,
                                      const std::set<std::string>& skip, double rel_tol, double abs_tol);

// Runs the built CLI with `args`; returns its exit status.
int run_cli(const std::string& args);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace golden
