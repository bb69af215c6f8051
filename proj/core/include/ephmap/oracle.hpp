#pragma once

#include "ephmap/config.hpp"
#include "ephmap/rays.hpp"
#include "ephmap/types.hpp"

#include <vector>

namespace ephmap::synth {

// Reference transiency propagation with exhaustive linear-scan neighbor
// search, same schedule and tie rules as the indexed implementation. Output
// must match it bitwise. Guarded against large instances; intended for
// validating the fast path, not for production maps.
std::vector<double> oracle_ephemerality(const AttributedPointCloud& map,
                                        const RaySampleSet& rays,
                                        const PipelineConfig& cfg,
                                        int passes = 1);

inline constexpr std::size_t kOracleMaxPoints = 5000;
inline constexpr std::size_t kOracleMaxSamples = 50000;

}  // namespace ephmap::synth
