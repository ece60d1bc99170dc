#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gfbm/smallball.hpp"

namespace gfbm::cli {

/// SHA-1 of "blob <size>\0" + content, as git hash-object prints it.
std::string git_blob_sha1(const std::string& content);

/// Run output staged in a hidden sibling directory and renamed into place on
/// commit(), so a failed run leaves nothing behind.
class StagedDir {
 public:
  /// Throws IoError if target exists and overwrite is false, or if the
  /// parent cannot be created.
  StagedDir(std::filesystem::path target, bool overwrite);
  ~StagedDir();
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;

  void write(const std::string& name, const std::string& content);
  void commit();
  const std::filesystem::path& target() const { return target_; }

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool overwrite_;
  bool committed_ = false;
};

std::string read_file(const std::filesystem::path& path);

/// Columns epsilon,n,hits,phat,ci_low,ci_high,psi; psi is empty when undefined.
std::string smallball_csv(const std::vector<SmallBallEstimate>& estimates);

/// Inverse of smallball_csv; psi intervals come from the ci columns.
/// Throws IoError on a malformed file.
std::vector<SmallBallEstimate> read_smallball_csv(const std::string& text);

}  // namespace gfbm::cli
