#include "ephmap/validation.hpp"

#include "ephmap/errors.hpp"

#include <sstream>

namespace ephmap {

std::string ValidationReport::to_string() const {
  if (issues.empty()) return "ok";
  std::ostringstream out;
  out << issues.size() << " issue(s):";
  for (const auto& i : issues) out << "\n  [" << i.code << "] " << i.message;
  return out.str();
}

ValidationReport validate_session(const Session& session,
                                  const PipelineConfig& config) {
  ValidationReport report;
  auto add = [&](const std::string& code, const std::string& msg) {
    report.issues.push_back({code, msg});
  };

  if (session.scans.empty()) {
    add("empty_session", "session has no scans");
    return report;
  }
  if (session.scans.size() != session.poses.size()) {
    add("pose_count_mismatch",
        "scan count " + std::to_string(session.scans.size()) +
            " != pose count " + std::to_string(session.poses.size()));
    return report;
  }

  const double max_range2 = config.max_range * config.max_range;
  for (std::size_t i = 0; i < session.scans.size(); ++i) {
    const Scan& scan = session.scans[i];
    if (scan.points.empty()) {
      add("empty_scan", "scan " + std::to_string(i) + " has no points");
      continue;
    }
    if (!std::isfinite(scan.timestamp)) {
      add("bad_timestamp",
          "scan " + std::to_string(i) + " timestamp is not finite");
    }
    if (!point_is_finite(scan.sensor_origin)) {
      add("nonfinite_origin",
          "scan " + std::to_string(i) + " sensor origin is not finite");
      continue;
    }
    std::size_t nonfinite = 0;
    std::size_t out_of_range = 0;
    for (const auto& p : scan.points) {
      if (!point_is_finite(p)) {
        ++nonfinite;
        continue;
      }
      if ((p - scan.sensor_origin).squaredNorm() > max_range2) ++out_of_range;
    }
    if (nonfinite > 0) {
      add("nonfinite_point", "scan " + std::to_string(i) + ": " +
                                 std::to_string(nonfinite) +
                                 " non-finite point(s)");
    }
    if (out_of_range > 0) {
      add("out_of_range", "scan " + std::to_string(i) + ": " +
                              std::to_string(out_of_range) +
                              " point(s) beyond max_range " +
                              format_double(config.max_range));
    }
  }

  for (std::size_t i = 1; i < session.scans.size(); ++i) {
    if (!(session.scans[i].timestamp > session.scans[i - 1].timestamp)) {
      add("timestamp_order",
          "scan " + std::to_string(i) + " timestamp " +
              format_double(session.scans[i].timestamp) +
              " not after scan " + std::to_string(i - 1) + " timestamp " +
              format_double(session.scans[i - 1].timestamp));
    }
  }

  for (std::size_t i = 0; i < session.poses.size(); ++i) {
    const double err = session.poses[i].orthonormality_error();
    if (!(err < 1e-6) || !point_is_finite(session.poses[i].translation)) {
      add("pose_not_rigid", "pose " + std::to_string(i) +
                                " is not a rigid transform (deviation " +
                                format_double(err) + ")");
    }
  }

  return report;
}

void require_valid_session(const Session& session,
                           const PipelineConfig& config) {
  ValidationReport report = validate_session(session, config);
  if (!report.ok()) {
    throw ValidationError("session '" + session.id + "' failed validation: " +
                          report.to_string());
  }
}

}  // namespace ephmap
