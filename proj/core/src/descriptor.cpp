#include "ephmap/descriptor.hpp"

#include "ephmap/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ephmap {

double PolarDescriptor::sector_width_rad() const {
  return 2.0 * std::numbers::pi / kSectors;
}

PolarDescriptor PolarDescriptor::from_scan(const Scan& scan,
                                           double max_radius) {
  if (!(max_radius > 0.0)) {
    throw Error("PolarDescriptor: max_radius must be > 0");
  }
  PolarDescriptor d;
  const double ring_width = max_radius / kRings;
  const double two_pi = 2.0 * std::numbers::pi;
  for (const Point3& p : scan.points) {
    const double r = std::hypot(p.x(), p.y());
    if (r >= max_radius || r < 1e-6) continue;
    int ring = static_cast<int>(r / ring_width);
    ring = std::min(ring, kRings - 1);
    double theta = std::atan2(p.y(), p.x());
    if (theta < 0.0) theta += two_pi;
    int sector = static_cast<int>(theta / two_pi * kSectors);
    sector = std::min(sector, kSectors - 1);
    if (!d.occupied(ring, sector) || p.z() > d.bins(ring, sector)) {
      d.bins(ring, sector) = p.z();
      d.occupied(ring, sector) = true;
    }
  }
  return d;
}

namespace {

// Cosine distance between matched columns, averaged over columns where both
// sides have content. b is rotated by shift sectors before matching.
double shifted_distance(const PolarDescriptor& a, const PolarDescriptor& b,
                        int shift) {
  constexpr int R = PolarDescriptor::kRings;
  constexpr int S = PolarDescriptor::kSectors;
  double total = 0.0;
  int used = 0;
  for (int col = 0; col < S; ++col) {
    const int bcol = ((col - shift) % S + S) % S;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int row = 0; row < R; ++row) {
      const double va = a.occupied(row, col) ? a.bins(row, col) : 0.0;
      const double vb = b.occupied(row, bcol) ? b.bins(row, bcol) : 0.0;
      dot += va * vb;
      na += va * va;
      nb += vb * vb;
    }
    if (na <= 0.0 || nb <= 0.0) continue;
    total += 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
    ++used;
  }
  if (used == 0) return 1.0;
  return total / used;
}

}  // namespace

double PolarDescriptor::distance(const PolarDescriptor& a,
                                 const PolarDescriptor& b, int* best_shift) {
  double best = std::numeric_limits<double>::infinity();
  int arg = 0;
  for (int shift = 0; shift < kSectors; ++shift) {
    const double d = shifted_distance(a, b, shift);
    if (d < best) {
      best = d;
      arg = shift;
    }
  }
  if (best_shift) *best_shift = arg;
  return best;
}

AnchorSet build_anchor_set(const Session& session,
                           const std::vector<Pose>& map_frame_poses,
                           const PipelineConfig& cfg) {
  if (session.scans.size() != map_frame_poses.size()) {
    throw Error("build_anchor_set: scan/pose count mismatch");
  }
  AnchorSet anchors;
  anchors.descriptors.reserve(session.size());
  anchors.poses = map_frame_poses;
  for (const Scan& scan : session.scans) {
    anchors.descriptors.push_back(
        PolarDescriptor::from_scan(scan, cfg.max_range));
  }
  return anchors;
}

LoopCandidate detect_loop(const AnchorSet& anchors, const Session& session,
                          const PipelineConfig& cfg, double gate) {
  if (anchors.size() == 0 || session.size() == 0) {
    throw LoopNotFoundError("loop search needs anchors and session scans");
  }
  if (anchors.descriptors.size() != anchors.poses.size()) {
    throw Error("detect_loop: anchor descriptors/poses mismatch");
  }

  LoopCandidate best;
  best.descriptor_distance = std::numeric_limits<double>::infinity();
  int best_shift = 0;

  std::vector<PolarDescriptor> session_descriptors;
  session_descriptors.reserve(session.size());
  for (const Scan& scan : session.scans) {
    session_descriptors.push_back(
        PolarDescriptor::from_scan(scan, cfg.max_range));
  }

  for (std::size_t ai = 0; ai < anchors.size(); ++ai) {
    for (std::size_t si = 0; si < session.size(); ++si) {
      int shift = 0;
      const double d = PolarDescriptor::distance(
          anchors.descriptors[ai], session_descriptors[si], &shift);
      if (d < best.descriptor_distance) {
        best.descriptor_distance = d;
        best.anchor_index = ai;
        best.session_index = si;
        best_shift = shift;
      }
    }
  }

  if (!(best.descriptor_distance <= gate)) {
    throw LoopNotFoundError(
        "no loop candidate under gate " + format_double(gate) +
        " (best distance " + format_double(best.descriptor_distance) + ")");
  }

  // Shift counts sectors the session scan must rotate by to line up with
  // the anchor, so the relative yaw is shift * sector width (wrapped to
  // the short way around).
  int wrapped = best_shift;
  if (wrapped > PolarDescriptor::kSectors / 2) {
    wrapped -= PolarDescriptor::kSectors;
  }
  const double yaw =
      wrapped * (2.0 * std::numbers::pi / PolarDescriptor::kSectors);
  best.yaw_rad = yaw;
  best.initial_transform = anchors.poses[best.anchor_index] *
                           Pose::from_yaw(yaw) *
                           session.poses[best.session_index].inverse();
  return best;
}

}  // namespace ephmap
