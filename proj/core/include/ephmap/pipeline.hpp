#pragma once

#include "ephmap/archive.hpp"
#include "ephmap/config.hpp"
#include "ephmap/descriptor.hpp"
#include "ephmap/gicp.hpp"
#include "ephmap/map_update.hpp"
#include "ephmap/metrics.hpp"
#include "ephmap/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ephmap {

// Sidecar files that travel with a map archive: explored-space coverage
// accumulated over every session so far, and the place-recognition anchors
// of the most recent session.
std::string coverage_sidecar_path(const std::string& archive_path);
std::string anchors_sidecar_path(const std::string& archive_path);

// Anchor persistence. Binary little-endian layout:
//   bytes 0-7   magic "EPHANCH1"
//   u32         version (1)
//   u32         anchor count
//   u32 u32     rings, sectors
//   payload     per anchor: 12 f64 pose (row-major 3x4 [R | t]),
//               rings*sectors f32 bins, rings*sectors u8 occupancy flags
void save_anchor_set(const std::string& path, const AnchorSet& anchors);
AnchorSet load_anchor_set(const std::string& path);

struct PipelineOptions {
  PipelineConfig config;
  int passes = 1;               // evidence propagation sweeps
  bool compact_session = true;  // voxel-thin the aggregated session
  bool compact_map = true;      // voxel-thin the merged map
  bool force_config = false;    // proceed when the archive hash differs
  double loop_gate = kLoopGateDefault;
  std::optional<Pose> manual_seed;  // session -> map, bypasses recognition
  GicpSettings gicp;
  std::string align_log;  // per-scan alignment diagnostics, empty = off
};

struct InitReport {
  std::string session_id;
  std::size_t ray_samples = 0;
  std::size_t aggregated_points = 0;
  std::size_t static_points = 0;
  std::size_t removed_points = 0;
};

// Builds the first archive from one session: aggregate, propagate ray
// evidence, drop transients, then persist the survivors with their local
// transiency doubling as the initial cross-session value.
InitReport run_init(const std::string& session_dir,
                    const std::string& archive_out,
                    const PipelineOptions& opt);

struct UpdateReport {
  std::string session_id;
  bool config_mismatch = false;  // archive was built with other settings
  LoopCandidate seed;
  std::size_t scan_count = 0;
  std::size_t failed_scans = 0;
  std::size_t ray_samples = 0;
  std::size_t session_static_points = 0;
  CategoryCounts counts;
  std::size_t map_points = 0;
  std::size_t delta_records = 0;
};

// Folds one new session into an existing archive: align against the map,
// clean the session on its own evidence, classify both sides, update the
// cross-session transiencies, and write the next archive, its sidecars,
// and the change ledger.
UpdateReport run_update(const std::string& archive_in,
                        const std::string& session_dir,
                        const std::string& archive_out,
                        const std::string& delta_out,
                        const PipelineOptions& opt);

struct ExtractReport {
  std::size_t points_in = 0;
  std::size_t points_out = 0;
};

// Writes the static subset (eps_g below tau_g) as a new archive, plus an
// optional plain-text x y z file.
ExtractReport run_extract_static(const std::string& archive_in,
                                 const std::string& archive_out,
                                 const std::string& xyz_out,
                                 const PipelineOptions& opt);

struct ReplayReport {
  std::string session_id;
  std::size_t points = 0;
};

ReplayReport run_delta_replay(const std::string& archive_in,
                              const std::string& delta_path,
                              const std::string& archive_out,
                              const PipelineOptions& opt);

ReplayReport run_delta_rollback(const std::string& archive_in,
                                const std::string& delta_path,
                                const std::string& archive_out);

struct DeltaInfoReport {
  std::string session_id;
  std::uint64_t config_hash = 0;
  std::size_t records = 0;
  CategoryCounts counts;
};

DeltaInfoReport run_delta_info(const std::string& delta_path);

struct HeatmapReport {
  std::size_t deltas = 0;
  std::size_t cells = 0;
};

HeatmapReport run_heatmap(const std::vector<std::string>& delta_paths,
                          const std::string& out_path, double cell_size,
                          double floor);

// Loads either a map archive or a plain-text cloud (one x y z per line,
// extra columns and # comments ignored), keyed on the archive magic.
std::vector<Point3> load_point_cloud_any(const std::string& path);

AlignmentMetrics run_eval_align(const std::string& path_a,
                                const std::string& path_b,
                                const PipelineOptions& opt);

struct CleanEvalReport {
  CleaningMetrics metrics;
  std::size_t cleaned_points = 0;
  std::size_t truth_static = 0;
  std::size_t truth_transient = 0;
};

// Runs single-session cleaning on a labeled session directory and scores
// the surviving map against the labels. Drift-free poses are used on both
// sides when the directory carries them; moving-object labels count as
// transient, everything else as structure to keep.
CleanEvalReport run_eval_clean(const std::string& session_dir,
                               const PipelineOptions& opt);

struct SynthReport {
  int sessions = 0;
  std::size_t scans = 0;
  std::size_t points = 0;
  std::string scene_path;
};

// Generates session directories (session_01, session_02, ...) from a scene
// file or the built-in "parking_lot" scenario, with reported poses,
// drift-free poses, and per-point labels. A resolved copy of the scene is
// written alongside them.
SynthReport run_synth(const std::string& scene, const std::string& out_dir,
                      std::optional<std::uint64_t> seed_override);

}  // namespace ephmap
