#pragma once

#include <string>

#include "pica/losses.hpp"
#include "pica/sim.hpp"

namespace pica {

// Flat run configuration shared by all CLI commands. Serialized as
// `key = value` lines; unknown keys are rejected.
struct RunConfig {
  // Input/output paths. Relative paths are resolved against the config
  // file's directory at load time.
  std::string body_mesh, clothing_mesh, rig, animation, dataset;
  std::string output = "out";
  std::string avatar;           // fitted avatar directory (animate/tryon input)
  std::string tryon_avatar;     // avatar directory supplying the replacement clothing
  std::string physical_params = "fit";  // parameter file path, or "fit" to estimate
  std::string camera;           // camera file used when rendering animations

  LossWeights weights;
  FitSchedule schedule;

  std::string channel = "color";  // color | mask | label
  SimOptions sim;
  int frames = 0;  // 0 = every animation frame
  bool rho_fit = false;
  int threads = 0;  // 0 = hardware default

  bool operator==(const RunConfig&) const = default;
};

RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& config);
std::string serialize_config(const RunConfig& config);
RunConfig parse_config(const std::string& text, const std::string& base_dir = "");

// Applies one `--key value` override; throws FormatError on unknown keys or
// unparsable values.
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace pica
