#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gfbm::cli {

/// gfbm-lab <command> --config path [--out dir] [--workers n] [--overwrite]
/// gfbm-lab report <dir> [--overwrite]
///
/// Returns the process exit code: 0 success, 1 configuration error,
/// 2 numerical failure, 3 I/O error. Failures print one JSON object to err.
/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gfbm::cli
