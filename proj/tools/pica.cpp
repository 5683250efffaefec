#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "pica/avatar.hpp"
#include "pica/config.hpp"
#include "pica/diagnostics.hpp"
#include "pica/losses.hpp"
#include "pica/sim.hpp"

namespace fs = std::filesystem;
using namespace pica;

namespace {

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw FormatError(std::string(what) + " path not set in the config");
  if (!fs::exists(path)) throw FormatError(std::string(what) + " not found: " + path);
}

void prepare_output(const RunConfig& config) {
  for (const char* sub : {"gaussians", "meshes", "frames", "logs"})
    fs::create_directories(fs::path(config.output) / sub);
  // Effective config echoed for provenance.
  save_config((fs::path(config.output) / "config.txt").string(), config);
}

RenderChannel parse_channel(const std::string& name) {
  if (name == "color") return RenderChannel::color;
  if (name == "mask") return RenderChannel::mask;
  if (name == "label") return RenderChannel::label;
  throw FormatError("unknown render channel: " + name);
}

int cmd_fit(const RunConfig& config) {
  require_file(config.body_mesh, "body mesh");
  require_file(config.clothing_mesh, "clothing mesh");
  require_file(config.rig, "rig");
  require_file(config.animation, "animation");
  require_file(config.dataset, "dataset manifest");
  config.weights.validate();

  TriMesh body = load_mesh(config.body_mesh, Layer::body);
  TriMesh clothing = load_mesh(config.clothing_mesh, Layer::clothing);
  validate_mesh(body);
  validate_mesh(clothing);
  SkinnedRig rig = load_rig(config.rig);
  validate_rig(rig);
  std::vector<Pose> poses = load_animation(config.animation, rig.num_bones());
  Dataset dataset = load_dataset(config.dataset, poses);

  prepare_output(config);
  Avatar avatar = make_avatar(std::move(body), std::move(clothing), std::move(rig));
  std::vector<LossReport> log = fit(avatar, dataset, config.weights, config.schedule);
  save_fit_log((fs::path(config.output) / "logs" / "fit.csv").string(), log);
  save_avatar(config.output, avatar);
  if (!log.empty())
    std::printf("fit: %d iterations, final color mse %.6g, total %.6g\n",
                static_cast<int>(log.size()), log.back().color_mse, log.back().total);
  return 0;
}

struct AnimateInputs {
  Avatar avatar;
  std::vector<Pose> poses;
  Camera cam;
};

AnimateInputs load_animate_inputs(const RunConfig& config) {
  require_file(config.avatar, "avatar directory");
  require_file(config.animation, "animation");
  require_file(config.camera, "camera");
  AnimateInputs in;
  in.avatar = load_avatar(config.avatar);
  in.poses = load_animation(config.animation, in.avatar.rig.num_bones());
  in.cam = load_camera(config.camera);
  return in;
}

PhysicalParams resolve_params(const RunConfig& config, const AnimateInputs& in) {
  AnalyticPredictor predictor(config.sim);
  if (config.physical_params == "fit" || config.rho_fit) {
    // Reconstructed per-frame geometry drives the one-step estimator.
    std::vector<std::vector<Vec3>> cloth_traj, body_traj;
    for (size_t t = 0; t < in.poses.size(); ++t) {
      cloth_traj.push_back(deform(in.avatar.clothing.vertices, in.avatar.clothing_weights,
                                  in.avatar.clothing_pose_at(static_cast<int>(t), in.poses)));
      body_traj.push_back(deform(in.avatar.body.vertices, in.avatar.rig,
                                 in.avatar.pose_at(static_cast<int>(t), in.poses)));
    }
    RhoFitResult fitres = fit_physical_params(cloth_traj, body_traj, in.avatar.clothing,
                                              in.avatar.body, predictor, config.sim);
    std::printf("rho fit: objective %.6g\n", fitres.objective);
    return fitres.rho;
  }
  require_file(config.physical_params, "physical parameter file");
  return load_params(config.physical_params);
}

int run_animation(const RunConfig& config, AnimateInputs& in) {
  prepare_output(config);
  PhysicalParams rho = resolve_params(config, in);
  rho.validate();
  save_params((fs::path(config.output) / "logs" / "params.txt").string(), rho);

  AnalyticPredictor predictor(config.sim);
  std::vector<std::vector<Vec3>> cloth_frames =
      simulate(in.avatar, in.poses, rho, predictor, config.sim);
  save_trajectory((fs::path(config.output) / "logs" / "clothing_trajectory.bin").string(),
                  cloth_frames);

  RenderChannel channel = parse_channel(config.channel);
  int n_frames = static_cast<int>(in.poses.size());
  if (config.frames > 0) n_frames = std::min(n_frames, config.frames);
  for (int t = 0; t < n_frames; ++t) {
    std::vector<Vec3> body_pos =
        deform(in.avatar.body.vertices, in.avatar.rig, in.avatar.pose_at(t, in.poses));
    RenderScene scene;
    scene.gaussians = &in.avatar.gaussians;
    scene.body = &in.avatar.body;
    scene.clothing = &in.avatar.clothing;
    scene.body_positions = &body_pos;
    scene.clothing_positions = &cloth_frames[t];
    scene.model = &in.avatar.color;
    scene.descriptor = pose_descriptor(in.poses[t]);
    Image frame = render(scene, in.cam, channel);
    char name[32];
    if (channel == RenderChannel::color) {
      std::snprintf(name, sizeof(name), "frame_%04d.png", t);
      save_png((fs::path(config.output) / "frames" / name).string(), frame);
    } else {
      std::snprintf(name, sizeof(name), "frame_%04d.pgm", t);
      save_pgm((fs::path(config.output) / "frames" / name).string(), frame);
    }
  }
  std::printf("animate: wrote %d frames to %s/frames\n", n_frames, config.output.c_str());
  return 0;
}

int cmd_animate(const RunConfig& config) {
  AnimateInputs in = load_animate_inputs(config);
  return run_animation(config, in);
}

int cmd_tryon(const RunConfig& config) {
  AnimateInputs in = load_animate_inputs(config);
  require_file(config.tryon_avatar, "try-on avatar directory");
  Avatar donor = load_avatar(config.tryon_avatar);

  // Swap the clothing layer: mesh, weights, offsets, and the clothing
  // Gaussians with their appearance features.
  Avatar& avatar = in.avatar;
  avatar.clothing = donor.clothing;
  avatar.clothing_weights = donor.clothing_weights;
  avatar.clothing_offsets = donor.clothing_offsets;
  std::vector<AnchoredGaussian> gaussians;
  std::vector<Vec3> base;
  std::vector<Eigen::Matrix<double, 4, 3>> coeffs;
  for (int i = 0; i < avatar.num_gaussians(); ++i)
    if (avatar.gaussians[i].layer_label == 0) {
      gaussians.push_back(avatar.gaussians[i]);
      base.push_back(avatar.color.base[i]);
      coeffs.push_back(avatar.color.coeffs[i]);
    }
  for (int i = 0; i < donor.num_gaussians(); ++i)
    if (donor.gaussians[i].layer_label == 1) {
      gaussians.push_back(donor.gaussians[i]);
      base.push_back(donor.color.base[i]);
      coeffs.push_back(donor.color.coeffs[i]);
    }
  avatar.gaussians = std::move(gaussians);
  avatar.color.base = std::move(base);
  avatar.color.coeffs = std::move(coeffs);

  CollisionResolveResult resolved =
      resolve_collisions(avatar.clothing.vertices, avatar.clothing, avatar.body,
                         avatar.body.vertices, config.sim.contact_margin);
  if (!resolved.converged)
    std::fprintf(stderr, "warning: collision resolve left %d violations\n", resolved.violations);
  avatar.clothing.vertices = resolved.positions;
  return run_animation(config, in);
}

int cmd_graph(const RunConfig& config) {
  require_file(config.clothing_mesh, "clothing mesh");
  TriMesh clothing = load_mesh(config.clothing_mesh, Layer::clothing);
  validate_mesh(clothing);
  prepare_output(config);
  bool warned = false;
  std::vector<EdgeSet> coarse = coarsen(clothing, config.sim.levels, &warned);
  if (warned) std::fprintf(stderr, "warning: clothing mesh has several components\n");
  std::vector<EdgeSet> sets;
  sets.push_back(mesh_edges(clothing));
  sets.insert(sets.end(), coarse.begin(), coarse.end());
  save_edge_sets((fs::path(config.output) / "logs" / "edges.txt").string(), sets);
  for (const EdgeSet& set : sets)
    std::printf("level %d: %zu edges\n", set.level, set.edges.size());
  return 0;
}

int cmd_check(const RunConfig& config, const std::string& inject_bug) {
  DiagnosticsOptions options;
  options.seed = config.schedule.seed == 0 ? 7 : config.schedule.seed;
  options.inject_bug = inject_bug;
  std::vector<DiagnosticResult> results = run_diagnostics(options);
  return print_diagnostics(results, std::cout) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"double-layer Gaussian avatar pipeline"};
  app.require_subcommand(1);

  std::string config_path, channel, inject_bug, params;
  int threads = -1;
  bool rho_fit = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration file");
    sub->add_option("--threads", threads, "worker thread cap");
    sub->allow_extras();  // --key value config overrides
    return sub;
  };
  CLI::App* fit_cmd = add_common(app.add_subcommand("fit", "optimize an avatar against a capture"));
  CLI::App* animate_cmd =
      add_common(app.add_subcommand("animate", "simulate clothing and render an animation"));
  animate_cmd->add_flag("--rho-fit", rho_fit, "estimate garment parameters first");
  animate_cmd->add_option("--channel", channel, "render channel: color|mask|label");
  CLI::App* tryon_cmd =
      add_common(app.add_subcommand("tryon", "swap the clothing layer and animate"));
  tryon_cmd->add_flag("--rho-fit", rho_fit, "estimate garment parameters first");
  tryon_cmd->add_option("--channel", channel, "render channel: color|mask|label");
  CLI::App* graph_cmd =
      add_common(app.add_subcommand("graph", "build and export the simulation graph"));
  CLI::App* check_cmd = add_common(app.add_subcommand("check", "run the diagnostic suite"));
  check_cmd->add_option("--inject-bug", inject_bug, "(testing) bias one named check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 0;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    RunConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    std::vector<std::string> extras = sub->remaining();
    for (size_t i = 0; i < extras.size(); ++i) {
      std::string key = extras[i];
      if (key.rfind("--", 0) != 0 || i + 1 >= extras.size())
        throw FormatError("expected `--key value` override, got: " + key);
      apply_override(config, key.substr(2), extras[++i]);
    }
    if (threads >= 0) config.threads = threads;
    if (!channel.empty()) config.channel = channel;
    if (rho_fit) config.rho_fit = true;
    if (config.threads > 0) set_render_threads(config.threads);

    if (sub == fit_cmd) return cmd_fit(config);
    if (sub == animate_cmd) return cmd_animate(config);
    if (sub == tryon_cmd) return cmd_tryon(config);
    if (sub == graph_cmd) return cmd_graph(config);
    if (sub == check_cmd) return cmd_check(config, inject_bug);
    throw FormatError("unknown subcommand");
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
