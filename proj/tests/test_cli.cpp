#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "artifacts.hpp"
#include "doctest.h"
#include "gfbm/cli.hpp"
#include "gfbm/sampler.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result lab(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = gfbm::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Scratch {
 public:
  Scratch() : root_(fs::temp_directory_path() / ("gfbm-cli-" + std::to_string(::getpid()) + "-" + std::to_string(next_++))) {
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  ~Scratch() { fs::remove_all(root_); }
  fs::path path(const std::string& name) const { return root_ / name; }
  std::string file(const std::string& name, const std::string& content) const {
    std::ofstream(root_ / name, std::ios::binary) << content;
    return (root_ / name).string();
  }

 private:
  static inline int next_ = 0;
  fs::path root_;
};

fs::path only_run(const fs::path& dir, const std::string& prefix) {
  fs::path found;
  int count = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().rfind(prefix, 0) == 0) {
      found = e.path();
      ++count;
    }
  }
  REQUIRE(count == 1);
  return found;
}

const char* kBrownian =
    R"({"command": "smallball", "params": {"gamma": 0, "alpha": 0, "theta": 1}, "process": "X",
        "grid_n": 1024, "n_paths": 2000, "seed": 5, "eps_list": [1.2, 1.0, 0.8, 0.7]})";

}  // namespace

TEST_CASE("git blob hash") {
  CHECK(gfbm::cli::git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(gfbm::cli::git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("smallball and exponent runs") {
  Scratch s;
  const auto cfg = s.file("sb.json", kBrownian);
  const auto r = lab({"smallball", "--config", cfg, "--out", s.path("out").string(), "--workers", "2"});
  REQUIRE(r.code == 0);
  CHECK(r.err.empty());
  const auto run = only_run(s.path("out"), "smallball-");
  for (const char* f : {"smallball.csv", "summary.json", "provenance.json", "config.json", "psi.svg"}) {
    CHECK(fs::exists(run / f));
  }
  const std::string csv = slurp(run / "smallball.csv");
  CHECK(csv.rfind("epsilon,n,hits,phat,ci_low,ci_high,psi\r\n", 0) == 0);
  const auto est = gfbm::cli::read_smallball_csv(csv);
  REQUIRE(est.size() == 4);
  CHECK(est[0].n == 2000);
  CHECK(est[0].hits >= est[3].hits);

  CHECK(slurp(run / "config.json") == kBrownian);
  const auto prov = json::parse(slurp(run / "provenance.json"));
  CHECK(prov["config_hash"] == gfbm::cli::git_blob_sha1(kBrownian));
  CHECK(prov["seed"] == 5);
  CHECK(run.filename().string() == "smallball-" + prov["config_hash"].get<std::string>().substr(0, 12));

  // Byte-identical outputs for an identical config, whatever the worker count.
  const auto again = lab({"smallball", "--config", cfg, "--out", s.path("again").string(), "--workers", "1"});
  REQUIRE(again.code == 0);
  const auto run2 = only_run(s.path("again"), "smallball-");
  for (const char* f : {"smallball.csv", "summary.json", "provenance.json", "psi.svg"}) {
    CHECK(slurp(run / f) == slurp(run2 / f));
  }

  const auto ex = s.file("ex.json", R"({"command": "exponent", "params": {"gamma": 0, "alpha": 0, "theta": 1},
      "process": "X", "input": ")" + (run / "smallball.csv").string() + R"("})");
  REQUIRE(lab({"exponent", "--config", ex, "--out", s.path("out").string()}).code == 0);
  const auto summary = json::parse(slurp(only_run(s.path("out"), "exponent-") / "summary.json"));
  for (const char* key : {"slope", "stderr", "r2", "beta_expected", "within_tolerance"}) CHECK(summary.contains(key));
  CHECK(summary["beta_expected"] == 0.5);
  CHECK(summary["slope"].get<double>() > 0.0);

  const auto au = s.file("au.json", R"({"command": "audit", "params": {"gamma": 0, "alpha": 0, "theta": 1},
      "process": "X", "input": ")" + (run / "smallball.csv").string() + R"("})");
  REQUIRE(lab({"audit", "--config", au, "--out", s.path("out").string()}).code == 0);
  CHECK(json::parse(slurp(only_run(s.path("out"), "audit-") / "summary.json")).contains("k1_min"));
}

TEST_CASE("no silent overwrite") {
  Scratch s;
  const auto cfg = s.file("sb.json", kBrownian);
  const std::string out = s.path("out").string();
  REQUIRE(lab({"smallball", "--config", cfg, "--out", out}).code == 0);
  const auto r = lab({"smallball", "--config", cfg, "--out", out});
  CHECK(r.code == 3);
  CHECK(json::parse(r.err)["error"] == "IoError");
  CHECK(lab({"smallball", "--config", cfg, "--out", out, "--overwrite"}).code == 0);
}

TEST_CASE("configuration errors leave nothing behind") {
  Scratch s;
  const std::string out = s.path("out").string();

  const auto bad = lab({"smallball", "--config", s.file("bad.json", R"({"params": {"gamma": 0)"), "--out", out});
  CHECK(bad.code == 1);
  const auto err = json::parse(bad.err);
  CHECK(err["error"] == "ConfigError");
  CHECK(err["exit_code"] == 1);
  CHECK_FALSE(fs::exists(out));

  auto code_of = [&](const std::string& text) {
    return lab({"smallball", "--config", s.file("c.json", text), "--out", out}).code;
  };
  CHECK(code_of(R"({"params": {"gamma": 0, "alpha": 0, "theta": 1}, "eps_list": [1.0], "colour": 3})") == 1);
  CHECK(code_of(R"({"params": {"gamma": 0, "alpha": 0, "theta": 1}, "eps_list": [0.5, 1.0]})") == 1);
  CHECK(code_of(R"({"command": "chung", "params": {"gamma": 0, "alpha": 0, "theta": 1}, "eps_list": [1.0]})") == 1);
  CHECK(code_of(R"({"params": {"gamma": 0, "alpha": 0}, "eps_list": [1.0]})") == 1);
  CHECK(code_of(R"({"params": {"gamma": 0, "alpha": 0, "theta": 1}, "eps_list": [1.0], "n_paths": -4})") == 1);

  const auto param = lab({"smallball", "--config",
                          s.file("p.json", R"({"params": {"gamma": 1.5, "alpha": 0.9, "theta": 1}, "eps_list": [1.0]})"),
                          "--out", out});
  CHECK(param.code == 1);
  const auto perr = json::parse(param.err);
  CHECK(perr["error"] == "ParamError");
  CHECK(perr["details"].size() == 2);
  CHECK_FALSE(fs::exists(out));

  CHECK(lab({"smallball"}).code == 1);
  CHECK(lab({"smallball", "--config", s.path("missing.json").string()}).code == 3);
  CHECK(lab({"bogus", "--config", s.file("b.json", "{}")}).code == 1);
  CHECK(lab({"--help"}).code == 0);

  ::setenv("GFBM_LAB_WORKERS", "many", 1);
  CHECK(lab({"smallball", "--config", s.file("w.json", kBrownian), "--out", out}).code == 1);
  ::unsetenv("GFBM_LAB_WORKERS");
}

TEST_CASE("numerical failures exit 2 without partial output") {
  Scratch s;
  const auto cfg = s.file("probe.json", R"({"params": {"gamma": 0.5, "alpha": 0.2, "theta": 0.5}, "grid_n": 256,
      "n_paths": 100, "probe": {"t": 0.25, "u": 1.0, "nu": 0.0001, "eta": 0.0001}})");
  const auto r = lab({"probe", "--config", cfg, "--out", s.path("out").string()});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"] == "ZeroHits");
  CHECK(fs::is_empty(s.path("out")));

  const auto ex = s.file("ex.json", R"({"params": {"gamma": 0, "alpha": 0, "theta": 1},
      "input": ")" + s.path("absent.csv").string() + R"("})");
  CHECK(lab({"exponent", "--config", ex, "--out", s.path("out").string()}).code == 3);
}

TEST_CASE("integral-test, cov, simulate, chung and probe commands") {
  Scratch s;
  const std::string out = s.path("out").string();
  const auto it = s.file("it.json", R"({"params": {"gamma": 0.5, "alpha": 0.2, "theta": 0.5},
      "integral_test": {"kappa": [0.5, 1, 2], "beta": [0.8, 1.2, 1.5]}})");
  REQUIRE(lab({"integral-test", "--config", it, "--out", out}).code == 0);
  const auto its = json::parse(slurp(only_run(out, "integral-test-") / "summary.json"));
  CHECK(its["decided"] == 36);
  CHECK(its["all_correct"] == true);

  const auto cv = s.file("cov.json", R"({"params": {"gamma": 0.5, "alpha": 0.2, "theta": 0.5}, "grid": [0.25, 0.5, 1.0]})");
  REQUIRE(lab({"cov", "--config", cv, "--out", out}).code == 0);
  const auto cov_run = only_run(out, "cov-");
  CHECK(slurp(cov_run / "cov.csv").rfind("0.25,0.5,1\r\n", 0) == 0);
  const auto cs = json::parse(slurp(cov_run / "summary.json"));
  CHECK(cs["min_eigenvalue"].get<double>() > 0.0);
  CHECK(cs["lamperti"]["pass"] == true);
  CHECK(fs::exists(cov_run / "lamperti.svg"));

  const auto sim = s.file("sim.json", R"({"params": {"gamma": 0.5, "alpha": 0.2, "theta": 0.5}, "process": "X",
      "grid_n": 16, "n_paths": 7, "seed": 9, "format": "binary", "plots": false})");
  REQUIRE(lab({"simulate", "--config", sim, "--out", out}).code == 0);
  std::ifstream bin(only_run(out, "simulate-") / "paths.bin", std::ios::binary);
  const auto batch = gfbm::read_batch_binary(bin);
  CHECK(batch.values.rows() == 7);
  CHECK(batch.grid.size() == 16);
  CHECK(batch.seed == 9);

  const auto ch = s.file("ch.json", R"({"params": {"gamma": 0.5, "alpha": 0.2, "theta": 0.5}, "k_max": 4,
      "n_paths": 50, "chung": {"points_per_octave": 16}})");
  REQUIRE(lab({"chung", "--config", ch, "--out", out}).code == 0);
  const auto chs = json::parse(slurp(only_run(out, "chung-") / "summary.json"));
  CHECK(chs["final_min_p05"].get<double>() > 0.0);
  CHECK(chs["true_exponent"]["median_k4_ci"].size() == 2);

  const auto pr = s.file("pr.json", R"({"params": {"gamma": 0.5, "alpha": 0.2, "theta": 0.5}, "grid_n": 256,
      "n_paths": 500, "probe": {"t": 0.25, "u": 1.0, "nu": 1.5, "eta": 1.5}})");
  REQUIRE(lab({"probe", "--config", pr, "--out", out}).code == 0);
  const auto ps = json::parse(slurp(only_run(out, "probe-") / "summary.json"));
  CHECK(ps["joint_hits"].get<int>() <= ps["hits_t"].get<int>());
}

TEST_CASE("report") {
  Scratch s;
  fs::create_directories(s.path("empty"));
  const auto empty = lab({"report", s.path("empty").string()});
  CHECK(empty.code == 3);
  CHECK(json::parse(empty.err)["error"] == "IoError");

  const std::string out = s.path("out").string();
  std::string seed6 = kBrownian;
  seed6.replace(seed6.find("\"seed\": 5"), 9, "\"seed\": 6");
  REQUIRE(lab({"smallball", "--config", s.file("a.json", kBrownian), "--out", out}).code == 0);
  REQUIRE(lab({"smallball", "--config", s.file("b.json", seed6), "--out", out}).code == 0);
  const auto hash_a = gfbm::cli::git_blob_sha1(kBrownian);
  const auto csv_a = fs::path(out) / ("smallball-" + hash_a.substr(0, 12)) / "smallball.csv";
  const auto ex_a = s.file("ex_a.json", R"({"params": {"gamma": 0, "alpha": 0, "theta": 1}, "process": "X", "input": ")" +
                                            csv_a.string() + R"("})");
  REQUIRE(lab({"exponent", "--config", ex_a, "--out", out}).code == 0);

  const auto r = lab({"report", out});
  REQUIRE(r.code == 0);
  const auto rep = json::parse(slurp(fs::path(out) / "report" / "report.json"));
  CHECK(rep["runs"].size() == 3);
  CHECK(rep["runs"].contains(hash_a));
  CHECK(rep["runs"].contains(gfbm::cli::git_blob_sha1(seed6)));
  CHECK(rep["criteria"]["6"]["status"] == "not_assessed");
  const std::string text = slurp(fs::path(out) / "report" / "report.txt");
  CHECK(text.find("vs 1/beta 2") != std::string::npos);
  CHECK(lab({"report", out}).code == 3);
  CHECK(lab({"report", out, "--overwrite"}).code == 0);

  fs::create_directories(fs::path(out) / "broken");
  std::ofstream(fs::path(out) / "broken" / "provenance.json") << "{not json";
  CHECK(lab({"report", out, "--overwrite"}).code == 3);
}
