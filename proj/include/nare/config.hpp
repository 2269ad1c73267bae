#pragma once

#include <map>
#include <string>

namespace nare {

/// Plain `key = value` file; '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> read_config(const std::string& path);

}  // namespace nare
