#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace ephmap {

// Runtime parameters shared across the whole pipeline. Serialized as
// "key = value" text; the hash of the canonical form is embedded in map
// archives and delta files so mixed-parameter runs are caught early.
struct PipelineConfig {
  // Propagation kernel.
  double alpha = 0.5;    // neutral plateau
  double beta = 0.1;     // evidence strength at zero distance
  double sigma_o = 0.1;  // occupied-sample length scale, meters
  double sigma_f = 0.4;  // free-sample length scale, meters

  // Belief thresholds.
  double tau_l = 0.5;  // within-session static/transient split
  double tau_g = 0.7;  // cross-session static/transient split

  double k_uncertainty = 0.6;  // entry-belief scale for emerged points

  int knn = 6;                    // neighbors receiving each ray sample
  double free_sample_step = 0.5;  // meters between free-space samples
  double nn_radius = 0.2;         // correspondence radius for map/session match
  double density_radius = 0.5;    // neighborhood radius for objectness
  int density_saturation = 40;    // neighbor count mapping to objectness 1

  double voxel_size = 0.1;     // compaction cell, meters
  double sigma_inlier = 0.5;   // alignment-metric inlier gate, meters
  double max_range = 80.0;     // sensor range cutoff, meters

  // Throws ConfigError listing every violated constraint.
  void validate() const;

  // Canonical serialization: keys sorted, one per line, shortest exact
  // round-trip number formatting. Equal configs produce equal text.
  std::string canonical() const;

  // FNV-1a 64-bit over the canonical text.
  std::uint64_t hash() const;

  void save(const std::string& path) const;
  static PipelineConfig load(const std::string& path);
  static PipelineConfig parse(std::istream& in, const std::string& origin);
};

// Shortest text rendering of a double that parses back to the same bits.
std::string format_double(double value);
// Strict full-token parse; throws ValidationError mentioning the context.
double parse_double(const std::string& token, const std::string& context);
long parse_long(const std::string& token, const std::string& context);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace ephmap
