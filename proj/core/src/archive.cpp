#include "ephmap/archive.hpp"

#include "ephmap/ephemerality.hpp"
#include "ephmap/errors.hpp"
#include "ephmap/io_util.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace ephmap {

static_assert(std::endian::native == std::endian::little,
              "archive serialization assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'E', 'P', 'H', 'M', 'A', 'P', 'V', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError(path + ": truncated archive");
  return value;
}

}  // namespace

void save_archive(const std::string& path, const MapArchive& archive) {
  atomic_write_binary(path, [&](std::ostream& out) {
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, archive.config_hash);
    put<std::uint32_t>(out,
                       static_cast<std::uint32_t>(archive.lineage.size()));
    for (const std::string& id : archive.lineage) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
      out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
    put<std::uint64_t>(out,
                       static_cast<std::uint64_t>(archive.cloud.size()));
    std::vector<float> row(5);
    for (const AttributedPoint& p : archive.cloud.points) {
      row[0] = static_cast<float>(p.position.x());
      row[1] = static_cast<float>(p.position.y());
      row[2] = static_cast<float>(p.position.z());
      row[3] = static_cast<float>(p.eps_l);
      row[4] = static_cast<float>(p.eps_g);
      out.write(reinterpret_cast<const char*>(row.data()), 20);
    }
  });
}

MapArchive load_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open archive: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError(path + ": not a map archive (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw ValidationError(path + ": unsupported archive version " +
                          std::to_string(version));
  }

  MapArchive archive;
  archive.config_hash = get<std::uint64_t>(in, path);
  const auto lineage_count = get<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < lineage_count; ++i) {
    const auto len = get<std::uint32_t>(in, path);
    if (len > 4096) {
      throw ValidationError(path + ": implausible lineage entry length " +
                            std::to_string(len));
    }
    std::string id(len, '\0');
    in.read(id.data(), len);
    if (!in) throw ValidationError(path + ": truncated archive");
    archive.lineage.push_back(std::move(id));
  }

  const auto count = get<std::uint64_t>(in, path);
  archive.cloud.points.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    float row[5];
    in.read(reinterpret_cast<char*>(row), 20);
    if (!in) {
      throw ValidationError(path + ": truncated payload at point " +
                            std::to_string(i) + " of " +
                            std::to_string(count));
    }
    AttributedPoint p;
    p.position = {row[0], row[1], row[2]};
    p.eps_l = row[3];
    p.eps_g = row[4];
    if (!point_is_finite(p.position)) {
      throw ValidationError(path + ": non-finite position at point " +
                            std::to_string(i));
    }
    // Bounds widened to their float32 roundings: a clamped value saved at
    // the limit reads back a hair outside the double-precision interval.
    const double lo = std::min(kEphMin, archive_round(kEphMin));
    const double hi = std::max(kEphMax, archive_round(kEphMax));
    if (!(p.eps_l >= lo && p.eps_l <= hi) ||
        !(p.eps_g >= lo && p.eps_g <= hi)) {
      throw ValidationError(path + ": belief out of range at point " +
                            std::to_string(i));
    }
    archive.cloud.points.push_back(p);
  }
  in.peek();
  if (!in.eof()) {
    throw ValidationError(path + ": trailing bytes after payload");
  }
  return archive;
}

}  // namespace ephmap
