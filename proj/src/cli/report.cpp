#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "commands.hpp"
#include "gfbm/errors.hpp"

namespace gfbm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("unreadable artifact " + path.string() + ": " + e.what());
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Pass/fail of one run against the acceptance criterion it can speak for;
// empty key when the run says nothing about any criterion.
std::pair<std::string, bool> judge(const std::string& command, const json& params, const json& s,
                                   std::string& line) {
  // Criteria 5, 7 and 11 are stated for (gamma, alpha, theta) = (0.5, 0.2, 0.5).
  const bool reference = params.is_object() && params.value("gamma", -1.0) == 0.5 &&
                         params.value("alpha", -1.0) == 0.2 && params.value("theta", -1.0) == 0.5;
  auto flag = [&](const char* key) { return s.contains(key) && s[key].is_boolean() && s[key].get<bool>(); };
  if (command == "smallball" && s.contains("brownian_series")) {
    for (const auto& row : s["brownian_series"]["rows"]) {
      if (std::abs(row["epsilon"].get<double>() - 0.4) < 1e-12) {
        const double rel = row["rel_error"];
        line = "phi(0.4) = " + num(row["phat"]) + " vs series " + num(row["series"]) + ", relative error " + num(rel);
        return {"4", rel <= 0.15};
      }
    }
  }
  if (command == "smallball" && s["fit"].is_object()) {
    line = "fitted slope " + num(s["fit"]["slope"]) + " vs 1/beta " + num(1.0 / s["beta_expected"].get<double>());
  }
  if (command == "exponent") {
    const bool ok = flag("within_tolerance");
    line = "slope " + num(s["slope"]) + " vs 1/beta " + num(s["slope_expected"]) + ": " +
           (ok ? "within tolerance" : "outside tolerance");
    if (reference && s.value("process", "") == "Y") return {"5", ok};
  }
  if (command == "integral-test") {
    const std::size_t decided = s["decided"], correct = s["correct"];
    line = std::to_string(correct) + "/" + std::to_string(decided) + " verdicts correct";
    if (s["phi"] == "analytic") return {"6", decided >= 18 && correct == decided};
  }
  if (command == "chung") {
    line = "running-min median change " + num(s["true_exponent"]["change"]) + " (true beta), " +
           num(s["misspecified_exponent"]["change"]) + " (misspecified); 5th percentile " + num(s["final_min_p05"]);
    if (reference) return {"7", flag("pass")};
  }
  if (command == "cov" && s.contains("lamperti")) {
    const auto& l = s["lamperti"];
    line = "Lamperti slope " + num(l["slope"]) + ", rate bound " + num(l["rate_bound"]) +
           (l["strictly_decreasing"].get<bool>() ? ", strictly decreasing" : ", not decreasing");
    return {"10", l["pass"].get<bool>()};
  }
  if (command == "audit") {
    line = std::string("monotone ") + (flag("monotone") ? "yes" : "no") + ", growth " + (flag("growth") ? "yes" : "no") +
           ", K1 " + num(s["k1_min"]) + ", convex " + (flag("convex") ? "yes" : "no");
    if (reference) return {"11", flag("pass")};
  }
  if (command == "probe") {
    line = "joint " + num(s["joint"]) + ", product ratio " + num(s["product_ratio"]);
  }
  return {"", false};
}

}  // namespace

void run_report(const fs::path& root, StagedDir& dir) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("report: " + root.string() + " is not a directory");
  std::vector<fs::path> runs;
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.empty() || name[0] == '.') continue;
    if (fs::exists(entry.path() / "provenance.json")) runs.push_back(entry.path());
  }
  if (ec) throw IoError("report: cannot list " + root.string() + ": " + ec.message());
  if (runs.empty()) throw IoError("report: no runs found in " + root.string());
  std::sort(runs.begin(), runs.end());

  json merged = json::object();
  std::map<std::string, std::vector<std::pair<std::string, bool>>> verdicts;
  std::string text = "gfbm-lab report for " + root.string() + "\n\nRuns\n";
  for (const auto& run : runs) {
    const json prov = read_json(run / "provenance.json");
    if (!prov.contains("config_hash") || !prov.contains("command")) {
      throw IoError("unreadable artifact " + (run / "provenance.json").string() + ": missing fields");
    }
    const std::string hash = prov["config_hash"], command = prov["command"];
    const json summary = read_json(run / "summary.json");
    std::string line;
    const auto [criterion, ok] = judge(command, prov.value("params", json(nullptr)), summary, line);
    merged[hash] = {{"command", command}, {"seed", prov.value("seed", json(nullptr))},
                    {"directory", run.filename().string()}, {"summary", summary}};
    if (!criterion.empty()) verdicts[criterion].emplace_back(hash, ok);
    text += "  " + hash.substr(0, 12) + "  " + command + "  seed " + prov.value("seed", json(0)).dump();
    if (!line.empty()) text += "  " + line;
    text += "\n";
  }

  json criteria = json::object();
  text += "\nAcceptance criteria\n";
  for (const char* id : {"1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11"}) {
    const auto it = verdicts.find(id);
    if (it == verdicts.end()) {
      criteria[id] = {{"status", "not_assessed"}, {"runs", json::array()}};
      text += "  " + std::string(id) + ": not assessed by these runs\n";
      continue;
    }
    bool all = true;
    json ids = json::array();
    for (const auto& [hash, ok] : it->second) {
      all = all && ok;
      ids.push_back({{"run", hash}, {"pass", ok}});
    }
    criteria[id] = {{"status", all ? "pass" : "fail"}, {"runs", ids}};
    text += "  " + std::string(id) + ": " + (all ? "PASS" : "FAIL") + " (" + std::to_string(it->second.size()) +
            " run" + (it->second.size() == 1 ? "" : "s") + ")\n";
  }
  dir.write("report.json", json{{"runs", merged}, {"criteria", criteria}}.dump(2) + "\n");
  dir.write("report.txt", text);
}

}  // namespace gfbm::cli
