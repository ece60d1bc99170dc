#pragma once

#include "artifacts.hpp"
#include "config.hpp"
#include "json.hpp"

namespace gfbm::cli {

/// Runs cfg.command, writing its data files into dir. Returns the summary
/// that goes to <command>.json.
nlohmann::json run_command(const RunConfig& cfg, int workers, StagedDir& dir);

/// report over every run directory below root; writes report.json and
/// report.txt through dir. Throws IoError on unreadable artifacts or when no
/// runs are found.
void run_report(const std::filesystem::path& root, StagedDir& dir);

}  // namespace gfbm::cli
