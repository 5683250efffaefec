#include "pica/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pica {

namespace fs = std::filesystem;

namespace {

// Single source of truth for the key set: every consumer walks the same list.
template <class F>
void visit_fields(RunConfig& c, F&& f) {
  f("body_mesh", c.body_mesh);
  f("clothing_mesh", c.clothing_mesh);
  f("rig", c.rig);
  f("animation", c.animation);
  f("dataset", c.dataset);
  f("output", c.output);
  f("avatar", c.avatar);
  f("tryon_avatar", c.tryon_avatar);
  f("physical_params", c.physical_params);
  f("camera", c.camera);

  f("lambda_seg", c.weights.lambda_seg);
  f("lambda_opac", c.weights.lambda_opac);
  f("lambda_collision", c.weights.lambda_collision);
  f("lambda_laplacian", c.weights.lambda_laplacian);
  f("lambda_normal", c.weights.lambda_normal);
  f("lambda_distance", c.weights.lambda_distance);
  f("collision_margin", c.weights.collision_margin);

  f("iterations", c.schedule.iterations);
  f("seed", c.schedule.seed);
  f("lr_color", c.schedule.lr_color);
  f("lr_pose_correction", c.schedule.lr_pose_correction);
  f("lr_opacity", c.schedule.lr_opacity);
  f("lr_scales", c.schedule.lr_scales);
  f("lr_delta", c.schedule.lr_delta);
  f("lr_vertices", c.schedule.lr_vertices);
  f("lr_weights", c.schedule.lr_weights);
  f("lr_offsets", c.schedule.lr_offsets);
  f("lambda_offset_smooth", c.schedule.lambda_offset_smooth);
  f("cosine_decay", c.schedule.cosine_decay);

  f("channel", c.channel);
  f("dt", c.sim.dt);
  f("levels", c.sim.levels);
  f("body_threshold", c.sim.body_threshold);
  f("contact_margin", c.sim.contact_margin);
  f("contact_stiffness", c.sim.contact_stiffness);
  f("gravity", c.sim.gravity);
  f("max_velocity", c.sim.max_velocity);
  f("frames", c.frames);
  f("rho_fit", c.rho_fit);
  f("threads", c.threads);
}

std::string format_value(const std::string& v) { return v; }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(unsigned v) { return std::to_string(v); }
std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void parse_value(const std::string& key, const std::string& text, std::string& out) { out = text; }
void parse_value(const std::string& key, const std::string& text, bool& out) {
  if (text == "true" || text == "1")
    out = true;
  else if (text == "false" || text == "0")
    out = false;
  else
    throw FormatError("config key '" + key + "': expected a boolean, got '" + text + "'");
}
template <class T>
void parse_number(const std::string& key, const std::string& text, T& out) {
  std::istringstream ss(text);
  T value;
  if (!(ss >> value) || !(ss >> std::ws).eof())
    throw FormatError("config key '" + key + "': bad numeric value '" + text + "'");
  out = value;
}
void parse_value(const std::string& key, const std::string& text, int& out) {
  parse_number(key, text, out);
}
void parse_value(const std::string& key, const std::string& text, unsigned& out) {
  parse_number(key, text, out);
}
void parse_value(const std::string& key, const std::string& text, double& out) {
  parse_number(key, text, out);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Path keys get resolved relative to the config file's directory.
bool is_path_key(const std::string& key) {
  return key == "body_mesh" || key == "clothing_mesh" || key == "rig" || key == "animation" ||
         key == "dataset" || key == "output" || key == "avatar" || key == "tryon_avatar" ||
         key == "physical_params" || key == "camera";
}

}  // namespace

std::string serialize_config(const RunConfig& config) {
  std::ostringstream out;
  visit_fields(const_cast<RunConfig&>(config), [&](const char* key, auto& value) {
    out << key << " = " << format_value(value) << '\n';
  });
  return out.str();
}

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
  bool found = false;
  visit_fields(config, [&](const char* name, auto& field) {
    if (key == name) {
      parse_value(key, value, field);
      found = true;
    }
  });
  if (!found) throw FormatError("unknown config key: " + key);
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(line_no) + ": expected `key = value`");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    apply_override(config, key, value);
    if (!base_dir.empty() && is_path_key(key) && !value.empty() && value != "fit" &&
        !fs::path(value).is_absolute())
      apply_override(config, key, (fs::path(base_dir) / value).lexically_normal().string());
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), fs::path(path).parent_path().string());
}

void save_config(const std::string& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write config file: " + path);
  out << serialize_config(config);
}

}  // namespace pica
