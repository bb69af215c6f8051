#include "ephmap/pipeline.hpp"

#include "ephmap/coverage.hpp"
#include "ephmap/delta_io.hpp"
#include "ephmap/errors.hpp"
#include "ephmap/io_util.hpp"
#include "ephmap/propagation.hpp"
#include "ephmap/rays.hpp"
#include "ephmap/render.hpp"
#include "ephmap/session_io.hpp"
#include "ephmap/validation.hpp"
#include "ephmap/zipper.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

namespace ephmap {

namespace fs = std::filesystem;

std::string coverage_sidecar_path(const std::string& archive_path) {
  return archive_path + ".coverage";
}

std::string anchors_sidecar_path(const std::string& archive_path) {
  return archive_path + ".anchors";
}

namespace {

constexpr char kAnchorMagic[8] = {'E', 'P', 'H', 'A', 'N', 'C', 'H', '1'};
constexpr std::uint32_t kAnchorVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError(path + ": truncated anchor file");
  return value;
}

void ensure_parent_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::vector<Point3> all_samples(const RaySampleSet& rays) {
  std::vector<Point3> pts;
  pts.reserve(rays.sample_count());
  pts.insert(pts.end(), rays.occupied.begin(), rays.occupied.end());
  pts.insert(pts.end(), rays.free.begin(), rays.free.end());
  return pts;
}

std::string session_dir_name(int session_1based) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "session_%02d", session_1based);
  return buf;
}

}  // namespace

void save_anchor_set(const std::string& path, const AnchorSet& anchors) {
  if (anchors.descriptors.size() != anchors.poses.size()) {
    throw Error("save_anchor_set: descriptor/pose count mismatch");
  }
  ensure_parent_dir(path);
  atomic_write_binary(path, [&](std::ostream& out) {
    out.write(kAnchorMagic, sizeof(kAnchorMagic));
    put<std::uint32_t>(out, kAnchorVersion);
    put<std::uint32_t>(out,
                       static_cast<std::uint32_t>(anchors.size()));
    put<std::uint32_t>(out, PolarDescriptor::kRings);
    put<std::uint32_t>(out, PolarDescriptor::kSectors);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const Pose& pose = anchors.poses[i];
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) put<double>(out, pose.rotation(r, c));
        put<double>(out, pose.translation(r));
      }
      const PolarDescriptor& d = anchors.descriptors[i];
      for (int r = 0; r < PolarDescriptor::kRings; ++r) {
        for (int c = 0; c < PolarDescriptor::kSectors; ++c) {
          put<float>(out, static_cast<float>(d.bins(r, c)));
        }
      }
      for (int r = 0; r < PolarDescriptor::kRings; ++r) {
        for (int c = 0; c < PolarDescriptor::kSectors; ++c) {
          put<std::uint8_t>(out, d.occupied(r, c) ? 1 : 0);
        }
      }
    }
  });
}

AnchorSet load_anchor_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open anchor file: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kAnchorMagic, sizeof(kAnchorMagic)) != 0) {
    throw ValidationError(path + ": not an anchor file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kAnchorVersion) {
    throw ValidationError(path + ": unsupported anchor version " +
                          std::to_string(version));
  }
  const auto count = get<std::uint32_t>(in, path);
  const auto rings = get<std::uint32_t>(in, path);
  const auto sectors = get<std::uint32_t>(in, path);
  if (rings != PolarDescriptor::kRings ||
      sectors != PolarDescriptor::kSectors) {
    throw ValidationError(path + ": descriptor shape " +
                          std::to_string(rings) + "x" +
                          std::to_string(sectors) + " does not match " +
                          std::to_string(PolarDescriptor::kRings) + "x" +
                          std::to_string(PolarDescriptor::kSectors));
  }

  AnchorSet anchors;
  anchors.descriptors.reserve(count);
  anchors.poses.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Pose pose;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) pose.rotation(r, c) = get<double>(in, path);
      pose.translation(r) = get<double>(in, path);
    }
    if (!pose.rotation.allFinite() || !point_is_finite(pose.translation)) {
      throw ValidationError(path + ": non-finite pose at anchor " +
                            std::to_string(i));
    }
    if (pose.orthonormality_error() > 1e-6) {
      throw ValidationError(path + ": non-rigid pose at anchor " +
                            std::to_string(i));
    }
    PolarDescriptor d;
    for (int r = 0; r < PolarDescriptor::kRings; ++r) {
      for (int c = 0; c < PolarDescriptor::kSectors; ++c) {
        d.bins(r, c) = get<float>(in, path);
      }
    }
    for (int r = 0; r < PolarDescriptor::kRings; ++r) {
      for (int c = 0; c < PolarDescriptor::kSectors; ++c) {
        d.occupied(r, c) = get<std::uint8_t>(in, path) != 0;
      }
    }
    anchors.poses.push_back(pose);
    anchors.descriptors.push_back(std::move(d));
  }
  in.peek();
  if (!in.eof()) {
    throw ValidationError(path + ": trailing bytes after payload");
  }
  return anchors;
}

InitReport run_init(const std::string& session_dir,
                    const std::string& archive_out,
                    const PipelineOptions& opt) {
  opt.config.validate();
  const SessionData data = read_session_dir(session_dir);
  const Session& session = data.session;
  require_valid_session(session, opt.config);

  const RaySampleSet rays = sample_session_rays(
      session, session.poses, opt.config.free_sample_step);
  AttributedPointCloud map = aggregate_session(session, session.poses,
                                               opt.config,
                                               opt.compact_session);
  propagate_ephemerality(map, rays, opt.config, opt.passes);
  auto [kept, removed] = extract_static(map, opt.config.tau_l);

  // The first session has no history, so its local transiency is the best
  // available cross-session estimate.
  for (AttributedPoint& p : kept.points) p.eps_g = p.eps_l;
  kept.frame_id = session.id;

  MapArchive archive;
  archive.config_hash = opt.config.hash();
  archive.lineage = {session.id};
  archive.cloud = std::move(kept);

  ensure_parent_dir(archive_out);
  save_archive(archive_out, archive);
  build_coverage(all_samples(rays))
      .save(coverage_sidecar_path(archive_out));
  save_anchor_set(anchors_sidecar_path(archive_out),
                  build_anchor_set(session, session.poses, opt.config));

  InitReport report;
  report.session_id = session.id;
  report.ray_samples = rays.sample_count();
  report.aggregated_points = map.size();
  report.static_points = archive.cloud.size();
  report.removed_points = removed.size();
  return report;
}

UpdateReport run_update(const std::string& archive_in,
                        const std::string& session_dir,
                        const std::string& archive_out,
                        const std::string& delta_out,
                        const PipelineOptions& opt) {
  opt.config.validate();
  const MapArchive prev = load_archive(archive_in);

  UpdateReport report;
  if (prev.config_hash != opt.config.hash()) {
    if (!opt.force_config) {
      throw ConfigError("archive " + archive_in +
                        " was built with different settings; rerun with the "
                        "matching config or force the update");
    }
    report.config_mismatch = true;
  }
  const CoverageGrid prev_cov =
      CoverageGrid::load(coverage_sidecar_path(archive_in));
  const AnchorSet anchors =
      load_anchor_set(anchors_sidecar_path(archive_in));

  const SessionData data = read_session_dir(session_dir);
  const Session& session = data.session;
  require_valid_session(session, opt.config);
  report.session_id = session.id;
  report.scan_count = session.size();
  for (const std::string& id : prev.lineage) {
    if (id == session.id) {
      throw ValidationError("session id '" + id +
                            "' is already in the archive lineage");
    }
  }

  LoopCandidate seed;
  if (opt.manual_seed) {
    seed.initial_transform = *opt.manual_seed;
    seed.descriptor_distance = 0.0;
  } else {
    seed = detect_loop(anchors, session, opt.config, opt.loop_gate);
  }
  report.seed = seed;

  const AlignedSession aligned =
      zipper_align(prev.cloud, session, seed, opt.config, opt.gicp);
  report.failed_scans = aligned.failed_scans;
  if (!opt.align_log.empty()) {
    ensure_parent_dir(opt.align_log);
    atomic_write_text(opt.align_log, [&](std::ostream& out) {
      out << diagnostics_to_text(aligned.diagnostics);
    });
  }

  const RaySampleSet rays = sample_session_rays(
      aligned.session, aligned.refined_poses, opt.config.free_sample_step);
  report.ray_samples = rays.sample_count();
  AttributedPointCloud session_map =
      aggregate_session(aligned.session, aligned.refined_poses, opt.config,
                        opt.compact_session);
  propagate_ephemerality(session_map, rays, opt.config, opt.passes);
  auto [cleaned, removed] = extract_static(session_map, opt.config.tau_l);
  report.session_static_points = cleaned.size();

  const CoverageGrid curr_cov = build_coverage(all_samples(rays));
  MergeResult merged =
      merge_and_update(prev.cloud, cleaned, prev_cov, curr_cov, opt.config,
                       session.id, opt.compact_map);
  report.counts = merged.counts;
  report.map_points = merged.map.size();
  report.delta_records = merged.delta.records.size();

  MapArchive next;
  next.config_hash = opt.config.hash();
  next.lineage = prev.lineage;
  next.lineage.push_back(session.id);
  next.cloud = std::move(merged.map);

  ensure_parent_dir(archive_out);
  save_archive(archive_out, next);
  merge_coverage(prev_cov, curr_cov)
      .save(coverage_sidecar_path(archive_out));
  save_anchor_set(
      anchors_sidecar_path(archive_out),
      build_anchor_set(aligned.session, aligned.refined_poses, opt.config));
  if (!delta_out.empty()) {
    ensure_parent_dir(delta_out);
    save_delta(delta_out, merged.delta);
  }
  return report;
}

ExtractReport run_extract_static(const std::string& archive_in,
                                 const std::string& archive_out,
                                 const std::string& xyz_out,
                                 const PipelineOptions& opt) {
  opt.config.validate();
  const MapArchive archive = load_archive(archive_in);
  MapArchive out = archive;
  out.cloud = extract_static_map(archive.cloud, opt.config.tau_g);

  if (!archive_out.empty()) {
    ensure_parent_dir(archive_out);
    save_archive(archive_out, out);
  }
  if (!xyz_out.empty()) {
    ensure_parent_dir(xyz_out);
    atomic_write_text(xyz_out, [&](std::ostream& os) {
      for (const AttributedPoint& p : out.cloud.points) {
        os << format_double(p.position.x()) << " "
           << format_double(p.position.y()) << " "
           << format_double(p.position.z()) << "\n";
      }
    });
  }

  ExtractReport report;
  report.points_in = archive.cloud.size();
  report.points_out = out.cloud.size();
  return report;
}

ReplayReport run_delta_replay(const std::string& archive_in,
                              const std::string& delta_path,
                              const std::string& archive_out,
                              const PipelineOptions& opt) {
  opt.config.validate();
  const MapArchive prev = load_archive(archive_in);
  const DeltaMap delta = load_delta(delta_path);

  MapArchive next;
  next.config_hash = delta.config_hash;
  next.lineage = prev.lineage;
  next.lineage.push_back(delta.session_id);
  next.cloud = replay_delta(prev, delta, opt.config, opt.compact_map);

  ensure_parent_dir(archive_out);
  save_archive(archive_out, next);

  ReplayReport report;
  report.session_id = delta.session_id;
  report.points = next.cloud.size();
  return report;
}

ReplayReport run_delta_rollback(const std::string& archive_in,
                                const std::string& delta_path,
                                const std::string& archive_out) {
  const MapArchive next = load_archive(archive_in);
  const DeltaMap delta = load_delta(delta_path);
  if (next.lineage.empty() || next.lineage.back() != delta.session_id) {
    throw ValidationError("archive " + archive_in +
                          " did not end with session '" + delta.session_id +
                          "'; rollback must undo the most recent update");
  }

  MapArchive prev;
  prev.config_hash = next.config_hash;
  prev.lineage.assign(next.lineage.begin(), next.lineage.end() - 1);
  prev.cloud = rollback_delta(next, delta);

  ensure_parent_dir(archive_out);
  save_archive(archive_out, prev);

  ReplayReport report;
  report.session_id = delta.session_id;
  report.points = prev.cloud.size();
  return report;
}

DeltaInfoReport run_delta_info(const std::string& delta_path) {
  const DeltaMap delta = load_delta(delta_path);
  DeltaInfoReport report;
  report.session_id = delta.session_id;
  report.config_hash = delta.config_hash;
  report.records = delta.records.size();
  for (const DeltaRecord& r : delta.records) {
    switch (r.category) {
      case PointCategory::kCoexisting: ++report.counts.coexisting; break;
      case PointCategory::kDeleted: ++report.counts.deleted; break;
      case PointCategory::kEmerged: ++report.counts.emerged; break;
      case PointCategory::kPrevExploredOnly:
        ++report.counts.prev_explored_only;
        break;
      case PointCategory::kNewlyExplored:
        ++report.counts.newly_explored;
        break;
    }
  }
  return report;
}

HeatmapReport run_heatmap(const std::vector<std::string>& delta_paths,
                          const std::string& out_path, double cell_size,
                          double floor) {
  if (delta_paths.empty()) throw Error("run_heatmap: no delta files given");
  std::vector<DeltaMap> deltas;
  deltas.reserve(delta_paths.size());
  for (const std::string& path : delta_paths) {
    deltas.push_back(load_delta(path));
    if (deltas.back().config_hash != deltas.front().config_hash) {
      throw ValidationError(path + ": config hash differs from " +
                            delta_paths.front() +
                            "; deltas of one heatmap must share a config");
    }
  }

  const Heatmap heatmap = export_heatmap(deltas, cell_size, floor);
  ensure_parent_dir(out_path);
  heatmap.save(out_path);

  HeatmapReport report;
  report.deltas = deltas.size();
  report.cells = heatmap.cells.size();
  return report;
}

std::vector<Point3> load_point_cloud_any(const std::string& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open cloud: " + path);
    char magic[8] = {};
    probe.read(magic, sizeof(magic));
    if (probe.gcount() == 8 && std::memcmp(magic, "EPHMAPV1", 8) == 0) {
      return load_archive(path).cloud.positions();
    }
  }

  std::ifstream in(path);
  if (!in) throw IoError("cannot open cloud: " + path);
  std::vector<Point3> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line);
    Point3 p;
    if (!(ls >> p.x() >> p.y() >> p.z())) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected at least three numbers");
    }
    if (!point_is_finite(p)) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": non-finite point");
    }
    points.push_back(p);
  }
  return points;
}

AlignmentMetrics run_eval_align(const std::string& path_a,
                                const std::string& path_b,
                                const PipelineOptions& opt) {
  opt.config.validate();
  const std::vector<Point3> a = load_point_cloud_any(path_a);
  const std::vector<Point3> b = load_point_cloud_any(path_b);
  return alignment_metrics(a, b, opt.config.sigma_inlier);
}

CleanEvalReport run_eval_clean(const std::string& session_dir,
                               const PipelineOptions& opt) {
  opt.config.validate();
  const SessionData data = read_session_dir(session_dir);
  const Session& session = data.session;
  require_valid_session(session, opt.config);
  if (!data.labels) {
    throw ValidationError(session_dir +
                          ": cleaning evaluation needs per-point labels");
  }
  const std::vector<Pose>& poses =
      data.true_poses ? *data.true_poses : session.poses;

  const RaySampleSet rays =
      sample_session_rays(session, poses, opt.config.free_sample_step);
  AttributedPointCloud map = aggregate_session(session, poses, opt.config,
                                               opt.compact_session);
  propagate_ephemerality(map, rays, opt.config, opt.passes);
  auto [cleaned, removed] = extract_static(map, opt.config.tau_l);

  std::vector<Point3> truth_static;
  std::vector<Point3> truth_transient;
  for (std::size_t i = 0; i < session.size(); ++i) {
    const Scan& scan = session.scans[i];
    const std::vector<synth::PointLabel>& labels = (*data.labels)[i];
    for (std::size_t j = 0; j < scan.points.size(); ++j) {
      const Point3 world = poses[i] * scan.points[j];
      if (labels[j] == synth::PointLabel::kSessionTransient) {
        truth_transient.push_back(world);
      } else {
        truth_static.push_back(world);
      }
    }
  }

  CleanEvalReport report;
  report.metrics = cleaning_metrics(cleaned.positions(), truth_static,
                                    truth_transient, opt.config.nn_radius);
  report.cleaned_points = cleaned.size();
  report.truth_static = truth_static.size();
  report.truth_transient = truth_transient.size();
  return report;
}

SynthReport run_synth(const std::string& scene, const std::string& out_dir,
                      std::optional<std::uint64_t> seed_override) {
  synth::SceneSpec spec = scene == "parking_lot"
                              ? synth::parking_lot_scenario()
                              : synth::SceneSpec::load(scene);
  if (seed_override) spec.seed = *seed_override;
  spec.validate();

  fs::create_directories(out_dir);
  const std::string scene_path =
      (fs::path(out_dir) / "scene.txt").string();
  spec.save(scene_path);

  SynthReport report;
  report.sessions = spec.sessions;
  report.scene_path = scene_path;
  for (int s = 1; s <= spec.sessions; ++s) {
    synth::LabeledSession rendered = synth::render_session(spec, s);
    SessionData data;
    data.session = std::move(rendered.session);
    data.session.id = session_dir_name(s);
    data.true_poses = std::move(rendered.true_poses);
    data.labels = std::move(rendered.labels);
    data.sensor_id = "synthetic";
    for (const Scan& scan : data.session.scans) {
      report.points += scan.points.size();
    }
    report.scans += data.session.size();
    write_session_dir((fs::path(out_dir) / data.session.id).string(), data);
  }
  return report;
}

}  // namespace ephmap
