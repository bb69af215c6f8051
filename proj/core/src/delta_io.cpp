#include "ephmap/delta_io.hpp"

#include "ephmap/errors.hpp"
#include "ephmap/io_util.hpp"
#include "ephmap/voxel.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace ephmap {

namespace {

std::string hash_to_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

std::uint64_t hex_to_hash(const std::string& token,
                          const std::string& context) {
  std::uint64_t value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto res = std::from_chars(first, last, value, 16);
  if (res.ec != std::errc() || res.ptr != last || token.empty()) {
    throw ValidationError(context + ": bad hash '" + token + "'");
  }
  return value;
}

struct PositionKey {
  double x, y, z;
  friend bool operator==(const PositionKey&, const PositionKey&) = default;
};

struct PositionKeyHash {
  std::size_t operator()(const PositionKey& k) const {
    auto h = std::hash<double>{};
    std::size_t v = h(k.x);
    v = v * 1099511628211ull ^ h(k.y);
    v = v * 1099511628211ull ^ h(k.z);
    return v;
  }
};

bool is_map_side(PointCategory c) {
  return c == PointCategory::kCoexisting || c == PointCategory::kDeleted ||
         c == PointCategory::kPrevExploredOnly;
}

}  // namespace

void save_delta(const std::string& path, const DeltaMap& delta) {
  atomic_write_text(path, [&](std::ostream& out) {
    out << "ephmap_delta 1\n";
    out << "session " << delta.session_id << "\n";
    out << "config_hash " << hash_to_hex(delta.config_hash) << "\n";
    out << "records " << delta.records.size() << "\n";
    for (const DeltaRecord& r : delta.records) {
      out << format_double(r.position.x()) << " "
          << format_double(r.position.y()) << " "
          << format_double(r.position.z()) << " " << to_string(r.category)
          << " " << format_double(r.eps_g_before) << " "
          << format_double(r.eps_g_after) << " " << format_double(r.gamma)
          << "\n";
    }
  });
}

DeltaMap load_delta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open delta: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "ephmap_delta 1") {
    throw ValidationError(path + ": bad delta header");
  }
  DeltaMap delta;
  if (!std::getline(in, line) || line.rfind("session ", 0) != 0) {
    throw ValidationError(path + ": missing session line");
  }
  delta.session_id = line.substr(8);
  if (!std::getline(in, line) || line.rfind("config_hash ", 0) != 0) {
    throw ValidationError(path + ": missing config_hash line");
  }
  delta.config_hash = hex_to_hash(line.substr(12), path + ": config_hash");
  if (!std::getline(in, line) || line.rfind("records ", 0) != 0) {
    throw ValidationError(path + ": missing records line");
  }
  const long count = parse_long(line.substr(8), path + ": records");
  delta.records.reserve(count);
  for (long i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      throw ValidationError(path + ": truncated record list");
    }
    std::istringstream ls(line);
    std::string x, y, z, cat, before, after, gamma;
    if (!(ls >> x >> y >> z >> cat >> before >> after >> gamma)) {
      throw ValidationError(path + ": bad record '" + line + "'");
    }
    const std::string where = path + ": record " + std::to_string(i);
    DeltaRecord r;
    r.position = {parse_double(x, where), parse_double(y, where),
                  parse_double(z, where)};
    r.category = parse_category(cat);
    r.eps_g_before = parse_double(before, where);
    r.eps_g_after = parse_double(after, where);
    r.gamma = parse_double(gamma, where);
    delta.records.push_back(r);
  }
  return delta;
}

AttributedPointCloud replay_delta(const MapArchive& prev, const DeltaMap& delta,
                                  const PipelineConfig& cfg, bool compact) {
  if (delta.config_hash != prev.config_hash) {
    throw ValidationError(
        "delta and archive were produced with different configurations (" +
        hash_to_hex(delta.config_hash) + " vs " +
        hash_to_hex(prev.config_hash) + ")");
  }

  std::unordered_map<PositionKey, std::size_t, PositionKeyHash> by_position;
  by_position.reserve(prev.cloud.size());
  for (std::size_t i = 0; i < prev.cloud.size(); ++i) {
    const Point3& p = prev.cloud.points[i].position;
    const auto [it, inserted] =
        by_position.insert({{p.x(), p.y(), p.z()}, i});
    if (!inserted) {
      throw ValidationError(
          "archive has duplicate point positions; replay needs unique "
          "positions (was the map built without compaction?)");
    }
  }

  AttributedPointCloud merged;
  merged.frame_id = prev.cloud.frame_id;
  merged.points = prev.cloud.points;
  for (const DeltaRecord& r : delta.records) {
    if (is_map_side(r.category)) {
      const auto it = by_position.find(
          {r.position.x(), r.position.y(), r.position.z()});
      if (it == by_position.end()) {
        throw ValidationError(
            "delta record position not found in the archive; this delta "
            "does not belong to this map");
      }
      merged.points[it->second].eps_g = r.eps_g_after;
    } else {
      // Session-side additions enter with their local belief, which the
      // record keeps in the before column.
      merged.points.push_back({r.position, r.eps_g_before, r.eps_g_after});
    }
  }
  if (compact) return voxel_downsample(merged, cfg.voxel_size);
  return merged;
}

AttributedPointCloud rollback_delta(const MapArchive& next,
                                    const DeltaMap& delta) {
  if (delta.config_hash != next.config_hash) {
    throw ValidationError(
        "delta and archive were produced with different configurations");
  }

  std::unordered_map<PositionKey, std::size_t, PositionKeyHash> by_position;
  by_position.reserve(next.cloud.size());
  for (std::size_t i = 0; i < next.cloud.size(); ++i) {
    const Point3& p = next.cloud.points[i].position;
    const auto [it, inserted] =
        by_position.insert({{p.x(), p.y(), p.z()}, i});
    if (!inserted) {
      throw ValidationError("archive has duplicate point positions");
    }
  }

  std::vector<bool> drop(next.cloud.size(), false);
  AttributedPointCloud out;
  out.frame_id = next.cloud.frame_id;
  out.points = next.cloud.points;
  for (const DeltaRecord& r : delta.records) {
    // The archive stores float32 positions, so records carrying fresh
    // double positions (appended points) must be quantized the same way
    // before lookup. Map-side positions already round-trip.
    const auto it = by_position.find({archive_round(r.position.x()),
                                      archive_round(r.position.y()),
                                      archive_round(r.position.z())});
    if (it == by_position.end()) {
      throw ValidationError(
          "delta record position not found in the updated archive; the "
          "forward compaction merged cells, rollback cannot be exact");
    }
    if (is_map_side(r.category)) {
      out.points[it->second].eps_g = r.eps_g_before;
    } else {
      drop[it->second] = true;
    }
  }
  AttributedPointCloud kept;
  kept.frame_id = out.frame_id;
  kept.points.reserve(out.points.size());
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (!drop[i]) kept.points.push_back(out.points[i]);
  }
  // Surviving points keep the updated archive's cell-sorted order, which is
  // exactly the order the previous archive had.
  return kept;
}

}  // namespace ephmap
