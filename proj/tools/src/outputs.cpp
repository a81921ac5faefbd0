#include "outputs.hpp"

#include <fstream>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

namespace ucrcd::cli {

namespace fs = std::filesystem;

void OutputSet::add(std::string name, std::string content) {
  files_.emplace_back(std::move(name), std::move(content));
}

std::vector<fs::path> OutputSet::commit() const {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());

  const std::string tag = ".tmp-" + std::to_string(::getpid());
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    for (const auto& t : temps) fs::remove(t, ec);
  };

  try {
    for (const auto& [name, content] : files_) {
      const fs::path tmp = dir_ / (name + tag);
      temps.push_back(tmp);
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      os << content;
      os.close();
      if (!os) throw std::runtime_error("cannot write " + tmp.string());
    }
    std::vector<fs::path> written;
    for (std::size_t i = 0; i < files_.size(); ++i) {
      const fs::path target = dir_ / files_[i].first;
      fs::rename(temps[i], target);
      written.push_back(target);
    }
    return written;
  } catch (const fs::filesystem_error& e) {
    cleanup();
    throw std::runtime_error(e.what());
  } catch (...) {
    cleanup();
    throw;
  }
}

}  // namespace ucrcd::cli
