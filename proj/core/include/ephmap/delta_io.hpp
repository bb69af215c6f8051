#pragma once

#include "ephmap/archive.hpp"
#include "ephmap/config.hpp"
#include "ephmap/map_update.hpp"

#include <string>

namespace ephmap {

// Per-session change ledger, text format:
//   ephmap_delta 1
//   session <id>
//   config_hash <16 hex digits>
//   records <count>
//   x y z category eps_before eps_after gamma
// Numbers are written with shortest exact round-trip formatting, so the
// doubles a reader recovers are bit-identical to what the update computed.
void save_delta(const std::string& path, const DeltaMap& delta);
DeltaMap load_delta(const std::string& path);

// Applies a delta to the archive it was produced from, reproducing the
// updated map exactly: map-side records are matched by exact position,
// session-side records append as new points, and the same cell compaction
// is re-run. Positions in the archive must be unique (always true for
// compacted maps).
AttributedPointCloud replay_delta(const MapArchive& prev, const DeltaMap& delta,
                                  const PipelineConfig& cfg,
                                  bool compact = true);

// Inverse of replay against the updated archive: removes the points the
// delta appended and restores recorded beliefs. Only exact when the forward
// compaction merged nothing, which holds whenever nn_radius exceeds the
// cell diagonal; otherwise the position lookup fails and this throws.
AttributedPointCloud rollback_delta(const MapArchive& next,
                                    const DeltaMap& delta);

}  // namespace ephmap
