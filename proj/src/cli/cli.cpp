#include "gfbm/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "commands.hpp"
#include "gfbm/errors.hpp"

namespace gfbm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

int resolve_workers(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("GFBM_LAB_WORKERS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) throw ConfigError("GFBM_LAB_WORKERS must be a positive integer");
    return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int fail(std::ostream& err, int code, const std::string& type, const std::string& message, json extra = {}) {
  json j{{"error", type}, {"message", message}, {"exit_code", code}};
  if (!extra.is_null()) j["details"] = std::move(extra);
  err << j.dump() << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"gfbm-lab: generalized fractional Brownian motion laboratory"};
  std::string command, report_dir, config_path, out_dir;
  int workers = 0;
  bool overwrite = false;
  app.add_option("command", command,
                 "simulate | cov | smallball | exponent | integral-test | chung | probe | audit | report")
      ->required();
  app.add_option("dir", report_dir, "run directory root (report only)");
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--workers", workers, "worker threads (default: GFBM_LAB_WORKERS, else all cores)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--overwrite", overwrite, "replace existing outputs");
  app.set_version_flag("--version", kVersion);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(err, 1, "UsageError", e.what());
  }

  try {
    const int n_workers = resolve_workers(workers);
    if (command == "report") {
      const fs::path root = !report_dir.empty() ? fs::path(report_dir) : fs::path(out_dir);
      if (root.empty()) throw ConfigError("report needs a directory");
      if (!fs::is_directory(root)) throw IoError("report: " + root.string() + " is not a directory");
      StagedDir dir(root / "report", overwrite);
      run_report(root, dir);
      dir.commit();
      out << (root / "report").string() << '\n';
      return 0;
    }
    if (!report_dir.empty()) throw ConfigError("unexpected argument '" + report_dir + "'");
    if (config_path.empty()) throw ConfigError(command + " needs --config");
    const std::string raw = read_file(config_path);
    const RunConfig cfg = parse_config(raw, command);
    const std::string hash = git_blob_sha1(raw);
    const fs::path root = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
    StagedDir dir(root / (command + "-" + hash.substr(0, 12)), overwrite);
    const json summary = run_command(cfg, n_workers, dir);
    dir.write("config.json", raw);
    dir.write("summary.json", summary.dump(2) + "\n");
    dir.write("provenance.json", json{{"command", command},
                                      {"config_hash", hash},
                                      {"hash_kind", "git blob sha1 of config.json"},
                                      {"seed", cfg.seed},
                                      {"params",
                                       {{"gamma", cfg.params->gamma()},
                                        {"alpha", cfg.params->alpha()},
                                        {"theta", cfg.params->theta()}}},
                                      {"tool", "gfbm-lab"},
                                      {"version", kVersion}}
                                         .dump(2) +
                                     "\n");
    dir.commit();
    out << dir.target().string() << '\n';
    return 0;
  } catch (const ParamError& e) {
    json v = json::array();
    for (const auto& x : e.violations()) v.push_back({{"field", x.field}, {"allowed", x.allowed}, {"value", x.value}});
    return fail(err, 1, "ParamError", e.what(), v);
  } catch (const ConfigError& e) {
    return fail(err, 1, "ConfigError", e.what());
  } catch (const DomainError& e) {
    return fail(err, 1, "DomainError", e.what());
  } catch (const IoError& e) {
    return fail(err, 3, "IoError", e.what());
  } catch (const NoConvergence& e) {
    return fail(err, 2, "NoConvergence", e.what(),
                {{"evaluations", e.evaluations()}, {"best_estimate", e.best_estimate()}});
  } catch (const NotFactorizable& e) {
    return fail(err, 2, "NotFactorizable", e.what(), {{"attempted_jitter", e.attempted_jitter()}});
  } catch (const ZeroHits& e) {
    return fail(err, 2, "ZeroHits", e.what());
  } catch (const InsufficientData& e) {
    return fail(err, 2, "InsufficientData", e.what());
  } catch (const UnboundedRatio& e) {
    return fail(err, 2, "UnboundedRatio", e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(err, 3, "IoError", e.what());
  } catch (const std::exception& e) {
    return fail(err, 2, "InternalError", e.what());
  }
}

}  // namespace gfbm::cli
