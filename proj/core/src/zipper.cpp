#include "ephmap/zipper.hpp"

#include "ephmap/errors.hpp"

#include <sstream>

namespace ephmap {

std::string diagnostics_to_text(const std::vector<ScanAlignmentDiag>& diags) {
  std::ostringstream out;
  for (const auto& d : diags) {
    out << "scan " << d.scan_index << " pass " << d.pass << " iterations "
        << d.iterations << " cost " << format_double(d.final_cost)
        << " inlier_fraction " << format_double(d.inlier_fraction)
        << " converged " << (d.converged ? 1 : 0) << "\n";
  }
  return out.str();
}

AlignedSession zipper_align(const AttributedPointCloud& map, Session session,
                            const LoopCandidate& seed,
                            const PipelineConfig& cfg,
                            const GicpSettings& settings,
                            double max_failure_fraction) {
  if (map.empty()) throw Error("zipper_align: empty map");
  const std::size_t n = session.size();
  if (n == 0) throw Error("zipper_align: empty session");
  if (seed.session_index >= n) {
    throw Error("zipper_align: seed scan index out of range");
  }
  if (session.poses.size() != n) {
    throw Error("zipper_align: scan/pose count mismatch");
  }

  const MapModel model(map, settings);
  const Pose t_init = seed.initial_transform;
  const std::size_t s = seed.session_index;

  std::vector<std::vector<Point3>> thinned(n);
  for (std::size_t i = 0; i < n; ++i) {
    thinned[i] = decimate_points(session.scans[i].points,
                                 settings.decimation_cell);
  }

  AlignedSession out;
  out.diagnostics.reserve(2 * n);

  auto run = [&](std::size_t i, const Pose& guess, char pass,
                 Pose& refined) -> bool {
    bool ok = false;
    try {
      const RegistrationResult res =
          register_scan(model, thinned[i], guess, settings);
      out.diagnostics.push_back({i, pass, res.iterations, res.final_cost,
                                 res.inlier_fraction, res.converged});
      refined = res.converged ? res.transform : guess;
      ok = res.converged;
    } catch (const DegenerateGeometryError&) {
      out.diagnostics.push_back({i, pass, 0, 0.0, 0.0, false});
      refined = guess;
    }
    return ok;
  };

  // Forward sweep from the seed: correction accumulates so every later scan
  // starts from the already-corrected chain.
  std::vector<Pose> forward(n);
  for (std::size_t i = 0; i < n; ++i) forward[i] = t_init * session.poses[i];
  Pose correction = Pose::identity();
  for (std::size_t i = s; i < n; ++i) {
    const Pose guess = correction * t_init * session.poses[i];
    Pose refined = guess;
    if (run(i, guess, 'F', refined)) {
      // inverse() assumes an orthonormal rotation, so the accumulated
      // correction must be re-projected each step or roundoff compounds
      // geometrically along the chain.
      correction = orthonormalized(refined * guess.inverse() * correction);
    }
    forward[i] = refined;
  }

  // Backward sweep from the end over the whole session; scans before the
  // seed have no forward result and start from the seeded chain.
  std::vector<Pose> refined(n);
  Pose back_correction = Pose::identity();
  std::size_t failed = 0;
  for (std::size_t ii = n; ii-- > 0;) {
    const Pose base = ii >= s ? forward[ii] : t_init * session.poses[ii];
    const Pose guess = back_correction * base;
    Pose result = guess;
    if (run(ii, guess, 'B', result)) {
      back_correction = orthonormalized(result * guess.inverse() * back_correction);
    } else {
      ++failed;
    }
    refined[ii] = result;
  }

  out.failed_scans = failed;
  const double failure_fraction =
      static_cast<double>(failed) / static_cast<double>(n);
  if (failure_fraction > max_failure_fraction) {
    throw AlignmentError(
        "alignment failed on " + std::to_string(failed) + " of " +
            std::to_string(n) + " scans",
        diagnostics_to_text(out.diagnostics));
  }

  out.session = std::move(session);
  out.refined_poses = std::move(refined);
  out.forward_poses = std::move(forward);
  return out;
}

}  // namespace ephmap
