#include "ephmap/map_update.hpp"

#include "ephmap/errors.hpp"
#include "ephmap/io_util.hpp"
#include "ephmap/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ephmap {

const char* to_string(PointCategory category) {
  switch (category) {
    case PointCategory::kCoexisting: return "coexisting";
    case PointCategory::kDeleted: return "deleted";
    case PointCategory::kEmerged: return "emerged";
    case PointCategory::kPrevExploredOnly: return "prev_explored_only";
    case PointCategory::kNewlyExplored: return "newly_explored";
  }
  return "unknown";
}

PointCategory parse_category(const std::string& token) {
  if (token == "coexisting") return PointCategory::kCoexisting;
  if (token == "deleted") return PointCategory::kDeleted;
  if (token == "emerged") return PointCategory::kEmerged;
  if (token == "prev_explored_only") return PointCategory::kPrevExploredOnly;
  if (token == "newly_explored") return PointCategory::kNewlyExplored;
  throw ValidationError("unknown point category '" + token + "'");
}

Classification classify_points(const AttributedPointCloud& prev_map,
                               const AttributedPointCloud& session_map,
                               const CoverageGrid& prev_coverage,
                               const CoverageGrid& curr_coverage,
                               double nn_radius) {
  if (!prev_coverage.valid() || !curr_coverage.valid()) {
    throw Error("classify_points: coverage grids are required");
  }
  if (!(nn_radius > 0.0)) {
    throw Error("classify_points: nn_radius must be > 0");
  }

  Classification cls;
  cls.map_categories.resize(prev_map.size());
  cls.map_match.assign(prev_map.size(), -1);
  cls.session_categories.resize(session_map.size());
  cls.session_match.assign(session_map.size(), -1);

  const KdIndex session_index(session_map.positions());
  const KdIndex map_index(prev_map.positions());

  parallel_blocks(
      prev_map.size(), kDefaultBlock,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const Point3& p = prev_map.points[i].position;
          const auto nb = session_index.nearest(p);
          if (nb && nb->distance <= nn_radius) {
            cls.map_categories[i] = PointCategory::kCoexisting;
            cls.map_match[i] = static_cast<std::ptrdiff_t>(nb->index);
          } else if (curr_coverage.covers(p)) {
            cls.map_categories[i] = PointCategory::kDeleted;
          } else {
            cls.map_categories[i] = PointCategory::kPrevExploredOnly;
          }
        }
      });

  parallel_blocks(
      session_map.size(), kDefaultBlock,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const Point3& p = session_map.points[i].position;
          const auto nb = map_index.nearest(p);
          if (nb && nb->distance <= nn_radius) {
            cls.session_categories[i] = PointCategory::kCoexisting;
            cls.session_match[i] = static_cast<std::ptrdiff_t>(nb->index);
          } else if (prev_coverage.covers(p)) {
            cls.session_categories[i] = PointCategory::kEmerged;
          } else {
            cls.session_categories[i] = PointCategory::kNewlyExplored;
          }
        }
      });

  return cls;
}

double objectness(const KdIndex& index, std::size_t point_id,
                  double density_radius, int density_saturation) {
  const std::size_t count =
      index.radius_count(index.point(point_id), density_radius,
                         static_cast<std::ptrdiff_t>(point_id));
  const double rho =
      std::min(1.0, static_cast<double>(count) /
                        static_cast<double>(density_saturation));
  return std::cbrt(rho);
}

MergeResult merge_and_update(const AttributedPointCloud& prev_map,
                             const AttributedPointCloud& cleaned_session,
                             const CoverageGrid& prev_coverage,
                             const CoverageGrid& curr_coverage,
                             const PipelineConfig& cfg,
                             const std::string& session_id,
                             bool compact) {
  if (prev_map.empty()) throw Error("merge_and_update: empty previous map");
  if (cleaned_session.empty()) {
    throw Error("merge_and_update: empty session map");
  }

  const Classification cls =
      classify_points(prev_map, cleaned_session, prev_coverage, curr_coverage,
                      cfg.nn_radius);

  // Objectness is evaluated inside each changed set: deleted points against
  // the other deleted points, emerged against emerged. Density of change is
  // what separates a demolished wall from scatter.
  std::vector<std::size_t> deleted_ids;
  for (std::size_t i = 0; i < prev_map.size(); ++i) {
    if (cls.map_categories[i] == PointCategory::kDeleted) {
      deleted_ids.push_back(i);
    }
  }
  std::vector<std::size_t> emerged_ids;
  for (std::size_t i = 0; i < cleaned_session.size(); ++i) {
    if (cls.session_categories[i] == PointCategory::kEmerged) {
      emerged_ids.push_back(i);
    }
  }

  auto gamma_for = [&](const AttributedPointCloud& cloud,
                       const std::vector<std::size_t>& ids) {
    std::vector<Point3> positions;
    positions.reserve(ids.size());
    for (std::size_t id : ids) positions.push_back(cloud.points[id].position);
    const KdIndex index(positions);
    std::vector<double> gammas(ids.size(), 0.0);
    parallel_blocks(ids.size(), kDefaultBlock,
                    [&](std::size_t, std::size_t begin, std::size_t end) {
                      for (std::size_t i = begin; i < end; ++i) {
                        gammas[i] = objectness(index, i, cfg.density_radius,
                                               cfg.density_saturation);
                      }
                    });
    return gammas;
  };
  const std::vector<double> deleted_gamma =
      gamma_for(prev_map, deleted_ids);
  const std::vector<double> emerged_gamma =
      gamma_for(cleaned_session, emerged_ids);

  std::vector<double> map_gamma(prev_map.size(), 0.0);
  for (std::size_t j = 0; j < deleted_ids.size(); ++j) {
    map_gamma[deleted_ids[j]] = deleted_gamma[j];
  }
  std::vector<double> session_gamma(cleaned_session.size(), 0.0);
  for (std::size_t j = 0; j < emerged_ids.size(); ++j) {
    session_gamma[emerged_ids[j]] = emerged_gamma[j];
  }

  MergeResult result;
  result.delta.session_id = session_id;
  result.delta.config_hash = cfg.hash();
  for (PointCategory c : cls.map_categories) {
    if (c == PointCategory::kCoexisting) ++result.counts.coexisting;
    else if (c == PointCategory::kDeleted) ++result.counts.deleted;
    else ++result.counts.prev_explored_only;
  }
  for (PointCategory c : cls.session_categories) {
    if (c == PointCategory::kEmerged) ++result.counts.emerged;
    else if (c == PointCategory::kNewlyExplored) ++result.counts.newly_explored;
  }

  AttributedPointCloud merged;
  merged.frame_id = prev_map.frame_id;
  merged.points.reserve(prev_map.size() + cleaned_session.size());

  for (std::size_t i = 0; i < prev_map.size(); ++i) {
    AttributedPoint p = prev_map.points[i];
    const double before = p.eps_g;
    double gamma = 0.0;
    switch (cls.map_categories[i]) {
      case PointCategory::kCoexisting:
        p.eps_g = bayes_update_global(
            before, cleaned_session.points[cls.map_match[i]].eps_l);
        break;
      case PointCategory::kDeleted:
        gamma = map_gamma[i];
        p.eps_g = update_deleted(before, gamma);
        break;
      default:  // prev explored only
        break;
    }
    merged.points.push_back(p);
    const bool record = cls.map_categories[i] == PointCategory::kDeleted ||
                        p.eps_g != before;
    if (record) {
      result.delta.records.push_back(
          {p.position, cls.map_categories[i], before, p.eps_g, gamma});
    }
  }

  for (std::size_t i = 0; i < cleaned_session.size(); ++i) {
    const AttributedPoint& sp = cleaned_session.points[i];
    switch (cls.session_categories[i]) {
      case PointCategory::kCoexisting:
        break;  // the matched map point already carries this observation
      case PointCategory::kEmerged: {
        const double gamma = session_gamma[i];
        const double eps_g = update_emerged(sp.eps_l, gamma, cfg.k_uncertainty);
        merged.points.push_back({sp.position, sp.eps_l, eps_g});
        result.delta.records.push_back(
            {sp.position, PointCategory::kEmerged, sp.eps_l, eps_g, gamma});
        break;
      }
      default: {  // newly explored
        const double eps_g = clamp_eph(sp.eps_l);
        merged.points.push_back({sp.position, sp.eps_l, eps_g});
        result.delta.records.push_back(
            {sp.position, PointCategory::kNewlyExplored, sp.eps_l, eps_g,
             0.0});
        break;
      }
    }
  }

  result.map = compact ? voxel_downsample(merged, cfg.voxel_size)
                       : std::move(merged);
  result.map.frame_id = prev_map.frame_id;
  return result;
}

AttributedPointCloud extract_static_map(const AttributedPointCloud& map,
                                        double tau_g) {
  AttributedPointCloud out;
  out.frame_id = map.frame_id;
  for (const AttributedPoint& p : map.points) {
    if (p.eps_g < tau_g) out.points.push_back(p);
  }
  return out;
}

void Heatmap::save(const std::string& path) const {
  atomic_write_text(path, [this](std::ostream& out) {
    out << "ephmap_heatmap 1\n";
    out << "cell " << format_double(cell_size) << "\n";
    out << "floor " << format_double(floor) << "\n";
    out << "count " << cells.size() << "\n";
    for (const auto& [key, value] : cells) {
      out << key.x << " " << key.y << " " << key.z << " "
          << format_double(value) << "\n";
    }
  });
}

Heatmap Heatmap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open heatmap: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "ephmap_heatmap 1") {
    throw ValidationError(path + ": bad heatmap header");
  }
  Heatmap hm;
  if (!std::getline(in, line) || line.rfind("cell ", 0) != 0) {
    throw ValidationError(path + ": missing cell line");
  }
  hm.cell_size = parse_double(line.substr(5), path + ": cell");
  if (!std::getline(in, line) || line.rfind("floor ", 0) != 0) {
    throw ValidationError(path + ": missing floor line");
  }
  hm.floor = parse_double(line.substr(6), path + ": floor");
  if (!std::getline(in, line) || line.rfind("count ", 0) != 0) {
    throw ValidationError(path + ": missing count line");
  }
  const long count = parse_long(line.substr(6), path + ": count");
  for (long i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      throw ValidationError(path + ": truncated cell list");
    }
    std::istringstream ls(line);
    CellKey k;
    std::string value;
    if (!(ls >> k.x >> k.y >> k.z >> value)) {
      throw ValidationError(path + ": bad cell line '" + line + "'");
    }
    hm.cells.push_back({k, parse_double(value, path + ": cell value")});
  }
  return hm;
}

Heatmap export_heatmap(const std::vector<DeltaMap>& deltas, double cell_size,
                       double floor) {
  if (!(cell_size > 0.0)) throw Error("export_heatmap: cell_size must be > 0");
  Heatmap hm;
  hm.cell_size = cell_size;
  hm.floor = floor;

  std::map<CellKey, std::size_t> counts;
  std::set<CellKey> touched;
  for (const DeltaMap& delta : deltas) {
    touched.clear();
    for (const DeltaRecord& rec : delta.records) {
      const bool counts_as_change =
          rec.category == PointCategory::kDeleted ||
          rec.category == PointCategory::kEmerged ||
          std::abs(rec.delta()) >= floor;
      if (!counts_as_change) continue;
      touched.insert(cell_key(rec.position, cell_size));
    }
    for (const CellKey& k : touched) ++counts[k];
  }

  std::size_t max_count = 0;
  for (const auto& [key, c] : counts) max_count = std::max(max_count, c);
  if (max_count == 0) return hm;
  hm.cells.reserve(counts.size());
  for (const auto& [key, c] : counts) {
    hm.cells.push_back({key, static_cast<double>(c) /
                                 static_cast<double>(max_count)});
  }
  return hm;
}

}  // namespace ephmap
