#include "ephmap/rays.hpp"

#include "ephmap/errors.hpp"

#include <cmath>

namespace ephmap {

void RaySampleSet::append(const RaySampleSet& other) {
  occupied.insert(occupied.end(), other.occupied.begin(), other.occupied.end());
  occupied_scan.insert(occupied_scan.end(), other.occupied_scan.begin(),
                       other.occupied_scan.end());
  free.insert(free.end(), other.free.begin(), other.free.end());
  free_scan.insert(free_scan.end(), other.free_scan.begin(),
                   other.free_scan.end());
}

RaySampleSet sample_rays(const Scan& scan, const Pose& pose, double step,
                         std::uint32_t scan_id) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw Error("sample_rays: step must be finite and > 0");
  }
  RaySampleSet out;
  out.occupied.reserve(scan.points.size());
  const Point3 origin_map = pose * scan.sensor_origin;
  for (const Point3& p : scan.points) {
    const double range = (p - scan.sensor_origin).norm();
    if (range <= 0.0) continue;
    const Point3 endpoint_map = pose * p;
    out.occupied.push_back(endpoint_map);
    out.occupied_scan.push_back(scan_id);
    const Point3 dir = (endpoint_map - origin_map) / range;
    const double limit = range - kEndpointMargin;
    // d = j * step avoids drift that an additive loop would accumulate.
    for (std::size_t j = 1;; ++j) {
      const double d = static_cast<double>(j) * step;
      if (!(d < limit)) break;
      out.free.push_back(origin_map + d * dir);
      out.free_scan.push_back(scan_id);
    }
  }
  return out;
}

RaySampleSet sample_session_rays(const Session& session,
                                 const std::vector<Pose>& poses, double step) {
  if (session.scans.size() != poses.size()) {
    throw Error("sample_session_rays: scan/pose count mismatch");
  }
  RaySampleSet all;
  for (std::size_t i = 0; i < session.scans.size(); ++i) {
    all.append(sample_rays(session.scans[i], poses[i], step,
                           static_cast<std::uint32_t>(i)));
  }
  return all;
}

}  // namespace ephmap
