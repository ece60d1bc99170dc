#include "artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <openssl/evp.h>

#include "gfbm/csv.hpp"
#include "gfbm/errors.hpp"

namespace gfbm::cli {

namespace fs = std::filesystem;

std::string git_blob_sha1(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw Error("SHA-1 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

StagedDir::StagedDir(fs::path target, bool overwrite) : target_(std::move(target)), overwrite_(overwrite) {
  std::error_code ec;
  if (fs::exists(target_, ec) && !overwrite_) {
    throw IoError("output " + target_.string() + " exists; pass --overwrite to replace it");
  }
  const fs::path parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create " + parent.string() + ": " + ec.message());
  staging_ = parent / ("." + target_.filename().string() + ".partial");
  fs::remove_all(staging_, ec);
  fs::create_directory(staging_, ec);
  if (ec) throw IoError("cannot create " + staging_.string() + ": " + ec.message());
}

StagedDir::~StagedDir() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagedDir::write(const std::string& name, const std::string& content) {
  std::ofstream out(staging_ / name, std::ios::binary);
  out << content;
  out.close();
  if (!out) throw IoError("cannot write " + (staging_ / name).string());
}

void StagedDir::commit() {
  std::error_code ec;
  if (fs::exists(target_, ec)) {
    if (!overwrite_) throw IoError("output " + target_.string() + " appeared during the run");
    fs::remove_all(target_, ec);
    if (ec) throw IoError("cannot replace " + target_.string() + ": " + ec.message());
  }
  fs::rename(staging_, target_, ec);
  if (ec) throw IoError("cannot move results to " + target_.string() + ": " + ec.message());
  committed_ = true;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return s.str();
}

namespace {
constexpr const char* kHeader = "epsilon,n,hits,phat,ci_low,ci_high,psi";
}

std::string smallball_csv(const std::vector<SmallBallEstimate>& estimates) {
  std::string out = std::string(kHeader) + "\r\n";
  for (const auto& e : estimates) {
    out += format_double(e.epsilon) + ',' + std::to_string(e.n) + ',' + std::to_string(e.hits) + ',' +
           format_double(e.phat) + ',' + format_double(e.ci_low) + ',' + format_double(e.ci_high) + ',' +
           (e.psi_defined ? format_double(e.psi) : std::string()) + "\r\n";
  }
  return out;
}

std::vector<SmallBallEstimate> read_smallball_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line() || line != kHeader) throw IoError("smallball CSV: expected header " + std::string(kHeader));
  std::vector<SmallBallEstimate> out;
  std::size_t row = 1;
  while (next_line()) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 7) throw IoError("smallball CSV row " + std::to_string(row) + ": expected 7 fields");
    try {
      SmallBallEstimate e;
      std::size_t used = 0;
      auto num = [&](const std::string& s) {
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      };
      auto whole = [&](const std::string& s) {
        const auto v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
      };
      e.epsilon = num(f[0]);
      e.n = whole(f[1]);
      e.hits = whole(f[2]);
      e.phat = num(f[3]);
      e.ci_low = num(f[4]);
      e.ci_high = num(f[5]);
      e.psi_defined = !f[6].empty();
      if (e.psi_defined) {
        e.psi = num(f[6]);
        e.psi_low = 0.0 - std::log(e.ci_high);
        e.psi_high = 0.0 - std::log(e.ci_low);
      }
      out.push_back(e);
    } catch (const std::logic_error&) {
      throw IoError("smallball CSV row " + std::to_string(row) + ": bad number");
    }
  }
  if (out.empty()) throw IoError("smallball CSV has no rows");
  return out;
}

}  // namespace gfbm::cli
