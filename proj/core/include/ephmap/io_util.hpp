#pragma once

#include "ephmap/errors.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <ios>
#include <string>

namespace ephmap {

// Writers go through a sibling temp file plus rename so an interrupted run
// never leaves a half-written artifact at the target path.
inline void atomic_write(const std::string& path, std::ios_base::openmode mode,
                         const std::function<void(std::ostream&)>& emit) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, mode);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    emit(out);
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("failed writing: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ec2;
    fs::remove(tmp, ec2);
    throw IoError("cannot move " + tmp.string() + " to " + target.string() +
                  ": " + ec.message());
  }
}

inline void atomic_write_text(const std::string& path,
                              const std::function<void(std::ostream&)>& emit) {
  atomic_write(path, std::ios_base::out, emit);
}

inline void atomic_write_binary(
    const std::string& path, const std::function<void(std::ostream&)>& emit) {
  atomic_write(path, std::ios_base::out | std::ios_base::binary, emit);
}

}  // namespace ephmap
