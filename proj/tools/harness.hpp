#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aim::cli {

/// Runs one aimctl invocation (args exclude the program name). Returns the
/// process exit code: 0 on success, 1 on any error, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Removes the named columns (matched against the header) from CSV text.
/// Used to compare runs while ignoring timing columns.
std::string drop_columns(const std::string& csv, const std::vector<std::string>& names);

std::string read_file(const std::string& path);

}  // namespace aim::cli
