#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ucrcd::cli {

/// Collects output files in memory and writes them together: every file goes
/// to a temporary name first and is renamed only once all writes succeeded,
/// so a failing command leaves nothing behind.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(std::string name, std::string content);
  /// Throws std::runtime_error; temporaries are removed on failure.
  std::vector<std::filesystem::path> commit() const;

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace ucrcd::cli
