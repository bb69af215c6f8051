#include "ephmap/session_io.hpp"

#include "ephmap/config.hpp"
#include "ephmap/errors.hpp"
#include "ephmap/io_util.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ephmap {

namespace fs = std::filesystem;

namespace {

std::string scan_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", index);
  return buf;
}

std::vector<float> read_float_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open scan: " + path);
  const std::streamsize bytes = in.tellg();
  if (bytes % 4 != 0) {
    throw ValidationError(path + ": size " + std::to_string(bytes) +
                          " is not a whole number of float32 values");
  }
  std::vector<float> data(static_cast<std::size_t>(bytes) / 4);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()), bytes);
  if (!in) throw IoError("failed reading " + path);
  return data;
}

}  // namespace

std::vector<Pose> read_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open poses: " + path);
  std::vector<Pose> poses;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (tokens.size() != 12) {
      throw ValidationError(where + ": expected 12 numbers, got " +
                            std::to_string(tokens.size()));
    }
    double v[12];
    for (int i = 0; i < 12; ++i) v[i] = parse_double(tokens[i], where);
    Pose p;
    p.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    p.translation << v[3], v[7], v[11];
    const double err = p.orthonormality_error();
    if (!(err < 1e-6)) {
      throw ValidationError(where + ": rotation deviates from orthonormal by " +
                            format_double(err));
    }
    if (err > 1e-12) p = orthonormalized(p);
    poses.push_back(p);
  }
  return poses;
}

void write_pose_file(const std::string& path, const std::vector<Pose>& poses) {
  atomic_write_text(path, [&](std::ostream& out) {
    for (const Pose& p : poses) {
      const auto& r = p.rotation;
      const auto& t = p.translation;
      out << format_double(r(0, 0)) << " " << format_double(r(0, 1)) << " "
          << format_double(r(0, 2)) << " " << format_double(t(0)) << " "
          << format_double(r(1, 0)) << " " << format_double(r(1, 1)) << " "
          << format_double(r(1, 2)) << " " << format_double(t(1)) << " "
          << format_double(r(2, 0)) << " " << format_double(r(2, 1)) << " "
          << format_double(r(2, 2)) << " " << format_double(t(2)) << "\n";
    }
  });
}

SessionData read_session_dir(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) {
    throw IoError("session directory not found: " + dir);
  }

  SessionData data;
  data.session.id = root.filename().string();
  if (data.session.id.empty()) {
    data.session.id = root.parent_path().filename().string();
  }

  data.session.poses = read_pose_file((root / "poses.txt").string());

  // meta.txt: "sensor_id = x", "scan_count = n", then "scan <i> <t>" lines.
  const std::string meta_path = (root / "meta.txt").string();
  std::ifstream meta(meta_path);
  if (!meta) throw IoError("cannot open " + meta_path);
  std::size_t scan_count = 0;
  std::vector<double> timestamps;
  std::string line;
  int lineno = 0;
  while (std::getline(meta, line)) {
    ++lineno;
    const std::string where = meta_path + ":" + std::to_string(lineno);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == "sensor_id") {
      std::string eq;
      ls >> eq >> data.sensor_id;
    } else if (head == "scan_count") {
      std::string eq, value;
      ls >> eq >> value;
      scan_count = static_cast<std::size_t>(parse_long(value, where));
    } else if (head == "scan") {
      std::string idx, ts;
      if (!(ls >> idx >> ts)) {
        throw ValidationError(where + ": expected 'scan <index> <timestamp>'");
      }
      const long i = parse_long(idx, where);
      if (i != static_cast<long>(timestamps.size())) {
        throw ValidationError(where + ": scan index " + idx +
                              " out of order");
      }
      timestamps.push_back(parse_double(ts, where));
    } else {
      throw ValidationError(where + ": unknown meta entry '" + head + "'");
    }
  }
  if (scan_count != timestamps.size()) {
    throw ValidationError(meta_path + ": scan_count " +
                          std::to_string(scan_count) + " != " +
                          std::to_string(timestamps.size()) +
                          " timestamp lines");
  }
  if (scan_count != data.session.poses.size()) {
    throw ValidationError(dir + ": " + std::to_string(scan_count) +
                          " scans but " +
                          std::to_string(data.session.poses.size()) +
                          " poses");
  }

  data.session.scans.resize(scan_count);
  bool any_labels = false;
  std::vector<std::vector<synth::PointLabel>> labels(scan_count);
  for (std::size_t i = 0; i < scan_count; ++i) {
    const std::string scan_path =
        (root / "scans" / (scan_name(i) + ".bin")).string();
    const std::vector<float> raw = read_float_file(scan_path);
    if (raw.size() % 4 != 0) {
      throw ValidationError(scan_path + ": not a whole number of " +
                            "x y z intensity records");
    }
    Scan& scan = data.session.scans[i];
    scan.timestamp = timestamps[i];
    const std::size_t n = raw.size() / 4;
    scan.points.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      scan.points.emplace_back(raw[4 * j], raw[4 * j + 1], raw[4 * j + 2]);
    }

    const fs::path label_path = root / "labels" / (scan_name(i) + ".label");
    if (fs::exists(label_path)) {
      any_labels = true;
      std::ifstream lin(label_path, std::ios::binary | std::ios::ate);
      if (!lin) throw IoError("cannot open " + label_path.string());
      const std::streamsize bytes = lin.tellg();
      if (bytes != static_cast<std::streamsize>(4 * n)) {
        throw ValidationError(label_path.string() + ": " +
                              std::to_string(bytes / 4) + " labels for " +
                              std::to_string(n) + " points");
      }
      std::vector<std::uint32_t> raw_labels(n);
      lin.seekg(0);
      lin.read(reinterpret_cast<char*>(raw_labels.data()), bytes);
      labels[i].reserve(n);
      for (std::uint32_t v : raw_labels) {
        if (v > 2) {
          throw ValidationError(label_path.string() + ": label value " +
                                std::to_string(v) + " out of range");
        }
        labels[i].push_back(static_cast<synth::PointLabel>(v));
      }
    }
  }
  if (any_labels) data.labels = std::move(labels);

  const fs::path gt_path = root / "poses_gt.txt";
  if (fs::exists(gt_path)) {
    auto gt = read_pose_file(gt_path.string());
    if (gt.size() != scan_count) {
      throw ValidationError(gt_path.string() + ": " +
                            std::to_string(gt.size()) + " poses for " +
                            std::to_string(scan_count) + " scans");
    }
    data.true_poses = std::move(gt);
  }

  return data;
}

void write_session_dir(const std::string& dir, const SessionData& data) {
  const fs::path root(dir);
  fs::create_directories(root / "scans");
  const bool with_labels = data.labels.has_value();
  if (with_labels) fs::create_directories(root / "labels");

  write_pose_file((root / "poses.txt").string(), data.session.poses);
  if (data.true_poses) {
    write_pose_file((root / "poses_gt.txt").string(), *data.true_poses);
  }

  atomic_write_text((root / "meta.txt").string(), [&](std::ostream& out) {
    out << "sensor_id = "
        << (data.sensor_id.empty() ? "unknown" : data.sensor_id) << "\n";
    out << "scan_count = " << data.session.scans.size() << "\n";
    for (std::size_t i = 0; i < data.session.scans.size(); ++i) {
      out << "scan " << i << " "
          << format_double(data.session.scans[i].timestamp) << "\n";
    }
  });

  for (std::size_t i = 0; i < data.session.scans.size(); ++i) {
    const Scan& scan = data.session.scans[i];
    atomic_write_binary(
        (root / "scans" / (scan_name(i) + ".bin")).string(),
        [&](std::ostream& out) {
          std::vector<float> raw;
          raw.reserve(scan.points.size() * 4);
          for (const Point3& p : scan.points) {
            raw.push_back(static_cast<float>(p.x()));
            raw.push_back(static_cast<float>(p.y()));
            raw.push_back(static_cast<float>(p.z()));
            raw.push_back(0.0f);
          }
          out.write(reinterpret_cast<const char*>(raw.data()),
                    static_cast<std::streamsize>(raw.size() * 4));
        });
    if (with_labels) {
      const auto& scan_labels = (*data.labels)[i];
      if (scan_labels.size() != scan.points.size()) {
        throw Error("write_session_dir: label count mismatch on scan " +
                    std::to_string(i));
      }
      atomic_write_binary(
          (root / "labels" / (scan_name(i) + ".label")).string(),
          [&](std::ostream& out) {
            std::vector<std::uint32_t> raw;
            raw.reserve(scan_labels.size());
            for (synth::PointLabel l : scan_labels) {
              raw.push_back(static_cast<std::uint32_t>(l));
            }
            out.write(reinterpret_cast<const char*>(raw.data()),
                      static_cast<std::streamsize>(raw.size() * 4));
          });
    }
  }
}

}  // namespace ephmap
