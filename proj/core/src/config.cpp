#include "ephmap/config.hpp"

#include "ephmap/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace ephmap {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, const std::string& context) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ValidationError(context + ": bad number '" + token + "'");
  }
  return value;
}

long parse_long(const std::string& token, const std::string& context) {
  long value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ValidationError(context + ": bad integer '" + token + "'");
  }
  return value;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Field {
  const char* key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
};

std::vector<Field> fields() {
  auto dbl = [](const char* key, double PipelineConfig::*member) {
    return Field{
        key,
        [member](const PipelineConfig& c) { return format_double(c.*member); },
        [member, key](PipelineConfig& c, const std::string& v,
                      const std::string& origin) {
          c.*member = parse_double(v, origin + ": " + key);
        }};
  };
  auto integer = [](const char* key, int PipelineConfig::*member) {
    return Field{
        key,
        [member](const PipelineConfig& c) { return std::to_string(c.*member); },
        [member, key](PipelineConfig& c, const std::string& v,
                      const std::string& origin) {
          c.*member = static_cast<int>(parse_long(v, origin + ": " + key));
        }};
  };
  // Alphabetical; canonical() relies on this order.
  return {
      dbl("alpha", &PipelineConfig::alpha),
      dbl("beta", &PipelineConfig::beta),
      dbl("density_radius", &PipelineConfig::density_radius),
      integer("density_saturation", &PipelineConfig::density_saturation),
      dbl("free_sample_step", &PipelineConfig::free_sample_step),
      dbl("k_uncertainty", &PipelineConfig::k_uncertainty),
      integer("knn", &PipelineConfig::knn),
      dbl("max_range", &PipelineConfig::max_range),
      dbl("nn_radius", &PipelineConfig::nn_radius),
      dbl("sigma_f", &PipelineConfig::sigma_f),
      dbl("sigma_inlier", &PipelineConfig::sigma_inlier),
      dbl("sigma_o", &PipelineConfig::sigma_o),
      dbl("tau_g", &PipelineConfig::tau_g),
      dbl("tau_l", &PipelineConfig::tau_l),
      dbl("voxel_size", &PipelineConfig::voxel_size),
  };
}

}  // namespace

void PipelineConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  auto finite_pos = [&](double v, const char* name) {
    check(std::isfinite(v) && v > 0.0,
          std::string(name) + " must be finite and > 0");
  };
  check(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0,
        "alpha must be in (0, 1)");
  check(std::isfinite(beta) && beta > 0.0 && beta < alpha,
        "beta must be in (0, alpha)");
  finite_pos(sigma_o, "sigma_o");
  finite_pos(sigma_f, "sigma_f");
  check(std::isfinite(tau_l) && tau_l > 0.0 && tau_l < 1.0,
        "tau_l must be in (0, 1)");
  check(std::isfinite(tau_g) && tau_g > 0.0 && tau_g < 1.0,
        "tau_g must be in (0, 1)");
  check(std::isfinite(k_uncertainty) && k_uncertainty > 0.0,
        "k_uncertainty must be > 0");
  check(knn >= 1, "knn must be >= 1");
  finite_pos(free_sample_step, "free_sample_step");
  finite_pos(nn_radius, "nn_radius");
  finite_pos(density_radius, "density_radius");
  check(density_saturation >= 1, "density_saturation must be >= 1");
  finite_pos(voxel_size, "voxel_size");
  finite_pos(sigma_inlier, "sigma_inlier");
  finite_pos(max_range, "max_range");
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

std::string PipelineConfig::canonical() const {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(*this);
    out += "\n";
  }
  return out;
}

std::uint64_t PipelineConfig::hash() const { return fnv1a64(canonical()); }

void PipelineConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open config for writing: " + path);
  out << canonical();
  if (!out) throw IoError("failed writing config: " + path);
}

PipelineConfig PipelineConfig::parse(std::istream& in,
                                     const std::string& origin) {
  PipelineConfig cfg;
  const auto all = fields();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.resize(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) {
      throw ValidationError(where + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool known = false;
    for (const auto& f : all) {
      if (key == f.key) {
        f.set(cfg, value, where);
        known = true;
        break;
      }
    }
    if (!known) throw ValidationError(where + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  return parse(in, path);
}

}  // namespace ephmap
