#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mfa {

/// Runs one mfacap subcommand. args excludes the program name.
/// Returns 0 on success, 2 on a bad flag or config, 1 on a runtime failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfa
