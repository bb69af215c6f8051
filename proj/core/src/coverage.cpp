#include "ephmap/coverage.hpp"

#include "ephmap/config.hpp"
#include "ephmap/errors.hpp"
#include "ephmap/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ephmap {

CoverageGrid::CoverageGrid(double cell_size) : cell_(cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw Error("CoverageGrid: cell size must be finite and > 0");
  }
}

void CoverageGrid::mark(const Point3& p) {
  cells_.insert(cell_key(p, cell_));
}

void CoverageGrid::mark_cell(const CellKey& key) {
  cells_.insert(key);
}

bool CoverageGrid::covers(const Point3& p) const {
  if (!valid()) return false;
  return cells_.count(cell_key(p, cell_)) > 0;
}

std::vector<CellKey> CoverageGrid::sorted_cells() const {
  std::vector<CellKey> keys(cells_.begin(), cells_.end());
  std::sort(keys.begin(), keys.end());
  return keys;
}

void CoverageGrid::write(std::ostream& out) const {
  out << "ephmap_coverage 1\n";
  out << "cell " << format_double(cell_) << "\n";
  out << "count " << cells_.size() << "\n";
  for (const CellKey& k : sorted_cells()) {
    out << k.x << " " << k.y << " " << k.z << "\n";
  }
}

void CoverageGrid::save(const std::string& path) const {
  if (!valid()) throw Error("CoverageGrid::save: grid has no cell size");
  atomic_write_text(path, [this](std::ostream& out) { write(out); });
}

CoverageGrid CoverageGrid::read(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line) || line != "ephmap_coverage 1") {
    throw ValidationError(origin + ": bad coverage header");
  }
  if (!std::getline(in, line) || line.rfind("cell ", 0) != 0) {
    throw ValidationError(origin + ": missing cell line");
  }
  CoverageGrid grid(parse_double(line.substr(5), origin + ": cell"));
  if (!std::getline(in, line) || line.rfind("count ", 0) != 0) {
    throw ValidationError(origin + ": missing count line");
  }
  const long count = parse_long(line.substr(6), origin + ": count");
  for (long i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      throw ValidationError(origin + ": truncated cell list");
    }
    std::istringstream ls(line);
    CellKey k;
    if (!(ls >> k.x >> k.y >> k.z)) {
      throw ValidationError(origin + ": bad cell line '" + line + "'");
    }
    grid.cells_.insert(k);
  }
  return grid;
}

CoverageGrid CoverageGrid::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open coverage grid: " + path);
  return read(in, path);
}

CoverageGrid build_coverage(const std::vector<Point3>& samples,
                            double cell_size) {
  CoverageGrid grid(cell_size);
  for (const Point3& p : samples) grid.mark(p);
  return grid;
}

CoverageGrid merge_coverage(const CoverageGrid& a, const CoverageGrid& b) {
  if (!a.valid() || !b.valid()) {
    throw Error("merge_coverage: both grids need a cell size");
  }
  if (a.cell_size() != b.cell_size()) {
    throw Error("merge_coverage: cell sizes differ");
  }
  CoverageGrid out(a.cell_size());
  for (const CellKey& k : a.sorted_cells()) out.mark_cell(k);
  for (const CellKey& k : b.sorted_cells()) out.mark_cell(k);
  return out;
}

}  // namespace ephmap
