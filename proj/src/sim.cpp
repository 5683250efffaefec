#include "pica/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

#include "pica/avatar.hpp"
#include "pica/nearest.hpp"
#include "pica/neldermead.hpp"

namespace pica {

namespace {
const Vec3 kGravity(0, 0, -9.81);
}

Eigen::Vector4d PhysicalParams::log_vector() const {
  validate();
  return Eigen::Vector4d(std::log(mass_density), std::log(bending), std::log(stretch),
                         std::log(friction));
}

PhysicalParams PhysicalParams::from_log(const Eigen::Vector4d& v) {
  PhysicalParams p;
  p.mass_density = std::exp(v[0]);
  p.bending = std::exp(v[1]);
  p.stretch = std::exp(v[2]);
  p.friction = std::exp(v[3]);
  return p;
}

void PhysicalParams::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v))
      throw FormatError(std::string("physical params: ") + name + " must be positive and finite");
  };
  check(mass_density, "mass_density");
  check(bending, "bending");
  check(stretch, "stretch");
  check(friction, "friction");
}

PhysicalParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open params file: " + path);
  PhysicalParams p;
  if (!(in >> p.mass_density >> p.bending >> p.stretch >> p.friction))
    throw FormatError(path + ": expected 4 values (mass_density bending stretch friction)");
  p.validate();
  return p;
}

void save_params(const std::string& path, const PhysicalParams& p) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write params file: " + path);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.17g\n%.17g\n%.17g\n%.17g\n", p.mass_density, p.bending,
                p.stretch, p.friction);
  out << buf;
}

double dihedral_angle(const Vec3& x0, const Vec3& x1, const Vec3& xa, const Vec3& xb) {
  Vec3 e = x1 - x0;
  Vec3 na = e.cross(xa - x0);
  Vec3 nb = (xb - x0).cross(e);
  Vec3 e_hat = e.normalized();
  Vec3 na_hat = na.normalized();
  Vec3 nb_hat = nb.normalized();
  return std::atan2(na_hat.cross(nb_hat).dot(e_hat), na_hat.dot(nb_hat));
}

void dihedral_angle_gradient(const Vec3& x0, const Vec3& x1, const Vec3& xa, const Vec3& xb,
                             Vec3& g0, Vec3& g1, Vec3& ga, Vec3& gb) {
  Vec3 e = x1 - x0;
  double e2 = e.squaredNorm();
  double e_len = std::sqrt(e2);
  Vec3 na = e.cross(xa - x0);
  Vec3 nb = (xb - x0).cross(e);
  ga = -(e_len / na.squaredNorm()) * na;
  gb = -(e_len / nb.squaredNorm()) * nb;
  // g0 and g1 follow from exact translation and rotation invariance of the
  // angle, plus invariance to sliding an edge endpoint along the edge.
  Vec3 s = -(ga + gb);                            // g0 + g1
  Vec3 m = -(xa.cross(ga) + xb.cross(gb));        // x0 x g0 + x1 x g1
  Vec3 a = x0 - x1;
  Vec3 rhs = m - x1.cross(s);
  g0 = rhs.cross(a) / a.squaredNorm();
  g1 = s - g0;
}

HierarchicalGraph build_graph(const TriMesh& clothing, const TriMesh& body, int levels,
                              double threshold, const PhysicalParams& rho) {
  if (threshold <= 0) throw FormatError("build_graph: threshold must be positive");
  validate_mesh(clothing);
  validate_mesh(body);
  rho.validate();

  HierarchicalGraph g;
  g.num_clothing = clothing.num_vertices();
  g.num_body = body.num_vertices();
  g.threshold = threshold;
  g.rho = rho;
  g.clothing_mesh = &clothing;
  g.body_mesh = &body;

  EdgeSet fine = mesh_edges(clothing);
  for (const auto& e : fine.edges)
    g.clothing_edges.push_back(
        {e[0], e[1], (clothing.vertices[e[0]] - clothing.vertices[e[1]]).norm()});

  for (const EdgeSet& set : coarsen(clothing, levels)) {
    std::vector<GraphEdge> level;
    for (const auto& e : set.edges)
      level.push_back({e[0], e[1], (clothing.vertices[e[0]] - clothing.vertices[e[1]]).norm()});
    g.coarse_edges.push_back(std::move(level));
  }

  g.hinges = interior_hinges(clothing);
  for (const Hinge& h : g.hinges)
    g.rest_dihedral.push_back(dihedral_angle(clothing.vertices[h.v0], clothing.vertices[h.v1],
                                             clothing.vertices[h.opp0],
                                             clothing.vertices[h.opp1]));
  g.node_area = vertex_areas(clothing, clothing.vertices);

  update_body_edges(g, clothing.vertices, body.vertices);
  g.clothing_vel.assign(g.num_clothing, Vec3::Zero());
  g.body_vel.assign(g.num_body, Vec3::Zero());
  return g;
}

void update_body_edges(HierarchicalGraph& graph, const std::vector<Vec3>& clothing_positions,
                       const std::vector<Vec3>& body_positions) {
  if (static_cast<int>(clothing_positions.size()) != graph.num_clothing ||
      static_cast<int>(body_positions.size()) != graph.num_body)
    throw FormatError("update_body_edges: position counts do not match the graph");
  graph.clothing_pos = clothing_positions;
  graph.body_pos = body_positions;
  graph.clothing_normal = vertex_normals(*graph.clothing_mesh, clothing_positions);
  graph.body_normal = vertex_normals(*graph.body_mesh, body_positions);
  if (graph.clothing_vel.empty()) graph.clothing_vel.assign(graph.num_clothing, Vec3::Zero());
  if (graph.body_vel.empty()) graph.body_vel.assign(graph.num_body, Vec3::Zero());

  graph.body_edges.clear();
  auto nearest = nearest_vertex(clothing_positions, body_positions);
  for (int i = 0; i < graph.num_clothing; ++i)
    if (nearest[i].second <= graph.threshold) graph.body_edges.push_back({i, nearest[i].first});
}

std::vector<Vec3> AnalyticPredictor::predict(const HierarchicalGraph& graph,
                                             const PhysicalParams& rho) const {
  rho.validate();
  const int n = graph.num_clothing;
  for (int i = 0; i < n; ++i)
    if (!graph.clothing_pos[i].allFinite() || !graph.clothing_vel[i].allFinite())
      throw NumericalError("predict_accel: non-finite feature at clothing node " +
                           std::to_string(i));

  std::vector<Vec3> force(n, Vec3::Zero());

  auto spring = [&](const GraphEdge& e) {
    Vec3 d = graph.clothing_pos[e.b] - graph.clothing_pos[e.a];
    double len = d.norm();
    if (len <= 0) return;
    Vec3 f = rho.stretch * (len - e.rest) * (d / len);
    force[e.a] += f;
    force[e.b] -= f;
  };
  for (const GraphEdge& e : graph.clothing_edges) spring(e);
  for (const auto& level : graph.coarse_edges)
    for (const GraphEdge& e : level) spring(e);

  for (size_t h = 0; h < graph.hinges.size(); ++h) {
    const Hinge& hinge = graph.hinges[h];
    const Vec3 &x0 = graph.clothing_pos[hinge.v0], &x1 = graph.clothing_pos[hinge.v1];
    const Vec3 &xa = graph.clothing_pos[hinge.opp0], &xb = graph.clothing_pos[hinge.opp1];
    double theta = dihedral_angle(x0, x1, xa, xb);
    Vec3 g0, g1, ga, gb;
    dihedral_angle_gradient(x0, x1, xa, xb, g0, g1, ga, gb);
    double scale = -rho.bending * (theta - graph.rest_dihedral[h]);
    force[hinge.v0] += scale * g0;
    force[hinge.v1] += scale * g1;
    force[hinge.opp0] += scale * ga;
    force[hinge.opp1] += scale * gb;
  }

  for (const BodyEdge& e : graph.body_edges) {
    const Vec3& n_body = graph.body_normal[e.body];
    double margin = (graph.clothing_pos[e.clothing] - graph.body_pos[e.body]).dot(n_body);
    if (margin >= options_.contact_margin) continue;
    double depth = options_.contact_margin - margin;
    force[e.clothing] += options_.contact_stiffness * depth * depth * n_body;
    Vec3 v_rel = graph.clothing_vel[e.clothing] - graph.body_vel[e.body];
    Vec3 v_tan = v_rel - v_rel.dot(n_body) * n_body;
    force[e.clothing] -= rho.friction * v_tan;
  }

  std::vector<Vec3> accel(n);
  for (int i = 0; i < n; ++i) {
    double mass = rho.mass_density * graph.node_area[i];
    accel[i] = (options_.gravity ? kGravity : Vec3::Zero()) + force[i] / mass;
  }
  return accel;
}

SimState step(const SimState& state, HierarchicalGraph& graph, const AccelPredictor& predictor,
              const PhysicalParams& rho, double dt) {
  if (dt <= 0) throw FormatError("step: dt must be positive");
  graph.clothing_pos = state.positions;
  graph.clothing_vel = state.velocities;
  graph.body_pos = state.body_positions;
  graph.body_vel = state.body_velocities;

  std::vector<Vec3> accel = predictor.predict(graph, rho);

  SimState next = state;
  next.frame = state.frame + 1;
  for (size_t i = 0; i < state.positions.size(); ++i) {
    next.velocities[i] = state.velocities[i] + accel[i] * dt;
    if (next.velocities[i].norm() > 100.0)
      throw NumericalError("step: velocity diverged at node " + std::to_string(i) + " (|v| = " +
                           std::to_string(next.velocities[i].norm()) + " m/s)");
    next.positions[i] = state.positions[i] + next.velocities[i] * dt;
  }
  update_body_edges(graph, next.positions, next.body_positions);
  graph.clothing_vel = next.velocities;
  graph.body_vel = next.body_velocities;
  return next;
}

std::vector<std::vector<Vec3>> simulate(const Avatar& avatar, const std::vector<Pose>& animation,
                                        const PhysicalParams& rho, const AccelPredictor& predictor,
                                        const SimOptions& options) {
  if (animation.empty()) throw FormatError("simulate: empty animation");
  const int frames = static_cast<int>(animation.size());

  std::vector<std::vector<Vec3>> body_frames(frames), recon(std::min(frames, 2));
  for (int t = 0; t < frames; ++t)
    body_frames[t] = deform(avatar.body.vertices, avatar.rig.weights, avatar.pose_at(t, animation));
  for (int t = 0; t < static_cast<int>(recon.size()); ++t)
    recon[t] = deform(avatar.clothing.vertices, avatar.clothing_weights,
                      avatar.clothing_pose_at(t, animation));

  HierarchicalGraph graph =
      build_graph(avatar.clothing, avatar.body, options.levels, options.body_threshold, rho);

  SimState state;
  state.frame = 0;
  state.positions = recon[0];
  state.velocities.assign(state.positions.size(), Vec3::Zero());
  if (recon.size() > 1)
    for (size_t i = 0; i < state.positions.size(); ++i)
      state.velocities[i] = (recon[1][i] - recon[0][i]) / options.dt;
  state.body_positions = body_frames[0];
  state.body_velocities.assign(body_frames[0].size(), Vec3::Zero());
  update_body_edges(graph, state.positions, state.body_positions);

  std::vector<std::vector<Vec3>> out(frames);
  out[0] = state.positions;
  for (int t = 1; t < frames; ++t) {
    state = step(state, graph, predictor, rho, options.dt);
    state.body_positions = body_frames[t];
    for (size_t i = 0; i < body_frames[t].size(); ++i)
      state.body_velocities[i] = (body_frames[t][i] - body_frames[t - 1][i]) / options.dt;
    update_body_edges(graph, state.positions, state.body_positions);
    graph.body_vel = state.body_velocities;
    out[t] = state.positions;
  }
  return out;
}

double rho_objective(const PhysicalParams& rho,
                     const std::vector<std::vector<Vec3>>& clothing_trajectory,
                     const std::vector<std::vector<Vec3>>& body_trajectory,
                     const TriMesh& clothing, const TriMesh& body,
                     const AccelPredictor& predictor, const SimOptions& options) {
  const int frames = static_cast<int>(clothing_trajectory.size());
  if (frames < 2) throw FormatError("rho_objective: need at least two trajectory frames");
  if (body_trajectory.size() != clothing_trajectory.size())
    throw FormatError("rho_objective: clothing and body trajectories differ in length");

  HierarchicalGraph graph =
      build_graph(clothing, body, options.levels, options.body_threshold, rho);
  double objective = 0;
  const int t_begin = frames == 2 ? 0 : 1;
  for (int t = t_begin; t + 1 < frames; ++t) {
    SimState state;
    state.frame = t;
    state.positions = clothing_trajectory[t];
    state.velocities.assign(state.positions.size(), Vec3::Zero());
    state.body_velocities.assign(body_trajectory[t].size(), Vec3::Zero());
    if (t > 0) {
      for (size_t i = 0; i < state.positions.size(); ++i)
        state.velocities[i] = (clothing_trajectory[t][i] - clothing_trajectory[t - 1][i]) / options.dt;
      for (size_t i = 0; i < body_trajectory[t].size(); ++i)
        state.body_velocities[i] = (body_trajectory[t][i] - body_trajectory[t - 1][i]) / options.dt;
    }
    state.body_positions = body_trajectory[t];
    // Proximity edges come from the observed frame-t state, exactly as a
    // forward run would see them.
    update_body_edges(graph, state.positions, state.body_positions);
    SimState predicted = step(state, graph, predictor, rho, options.dt);
    for (size_t i = 0; i < predicted.positions.size(); ++i)
      objective += (clothing_trajectory[t + 1][i] - predicted.positions[i]).squaredNorm();
  }
  if (!std::isfinite(objective)) throw NumericalError("rho_objective: non-finite objective");
  return objective;
}

RhoFitResult fit_physical_params(const std::vector<std::vector<Vec3>>& clothing_trajectory,
                                 const std::vector<std::vector<Vec3>>& body_trajectory,
                                 const TriMesh& clothing, const TriMesh& body,
                                 const AccelPredictor& predictor, const SimOptions& options) {
  if (clothing_trajectory.size() < 2)
    throw FormatError("fit_physical_params: need at least two trajectory frames");

  const Eigen::Vector4d center = PhysicalParams{}.log_vector();
  const double half_width = std::log(1e3);
  Eigen::Vector4d lower = center.array() - half_width;
  Eigen::Vector4d upper = center.array() + half_width;

  auto objective = [&](const Eigen::VectorXd& log_rho) {
    PhysicalParams rho = PhysicalParams::from_log(log_rho);
    try {
      return rho_objective(rho, clothing_trajectory, body_trajectory, clothing, body, predictor,
                           options);
    } catch (const NumericalError&) {
      return 1e30;  // diverging parameter region
    }
  };

  // Coarse log-space grid seed, then simplex refinement.
  Eigen::Vector4d best = center;
  double best_value = objective(best);
  const int grid = 5;
  for (int i0 = 0; i0 < grid; ++i0)
    for (int i1 = 0; i1 < grid; ++i1)
      for (int i2 = 0; i2 < grid; ++i2)
        for (int i3 = 0; i3 < grid; ++i3) {
          Eigen::Vector4d x;
          Eigen::Vector4i idx(i0, i1, i2, i3);
          for (int d = 0; d < 4; ++d)
            x[d] = lower[d] + (upper[d] - lower[d]) * idx[d] / (grid - 1.0);
          double v = objective(x);
          if (v < best_value) {
            best_value = v;
            best = x;
          }
        }

  NelderMeadResult nm = nelder_mead(objective, best, 0.4, 600, 1e-18, lower, upper);
  // A tighter second pass around the incumbent.
  NelderMeadResult nm2 = nelder_mead(objective, nm.x, 0.05, 400, 1e-20, lower, upper);
  const Eigen::VectorXd& winner_x = nm2.value <= nm.value ? nm2.x : nm.x;
  double winner_value = std::min(nm.value, nm2.value);

  RhoFitResult result;
  result.rho = PhysicalParams::from_log(winner_x);
  result.objective = winner_value;
  return result;
}

CollisionResolveResult resolve_collisions(const std::vector<Vec3>& clothing_positions,
                                          const TriMesh& clothing, const TriMesh& body,
                                          const std::vector<Vec3>& body_positions, double margin) {
  if (body_positions.empty()) throw FormatError("resolve_collisions: empty body mesh");
  KdTree tree(body_positions);
  std::vector<Vec3> normals = vertex_normals(body, body_positions);
  std::vector<Vec3> pos = clothing_positions;
  std::set<int> moved;

  auto project_until_clean = [&](int max_iterations) {
    int violations = 0;
    for (int it = 0; it < max_iterations; ++it) {
      violations = 0;
      for (size_t i = 0; i < pos.size(); ++i) {
        auto [j, dist] = tree.nearest(pos[i]);
        double s = (pos[i] - body_positions[j]).dot(normals[j]);
        if (s < margin - 1e-12) {
          pos[i] += (margin - s) * normals[j];
          moved.insert(static_cast<int>(i));
          ++violations;
        }
      }
      if (violations == 0) break;
    }
    return violations;
  };

  int remaining = project_until_clean(50);
  if (!moved.empty()) {
    // Smooth only the vertices the projection touched, then re-project so the
    // margin post-condition survives smoothing.
    auto adjacency = vertex_adjacency(clothing);
    for (int pass = 0; pass < 5; ++pass) {
      std::vector<Vec3> next = pos;
      for (int v : moved) {
        if (adjacency[v].empty()) continue;
        Vec3 mean = Vec3::Zero();
        for (int u : adjacency[v]) mean += pos[u];
        mean /= static_cast<double>(adjacency[v].size());
        next[v] = 0.5 * (pos[v] + mean);
      }
      pos = std::move(next);
    }
    remaining = project_until_clean(50);
  }

  CollisionResolveResult result;
  result.positions = std::move(pos);
  result.violations = remaining;
  result.converged = remaining == 0;
  return result;
}

void save_trajectory(const std::string& path, const std::vector<std::vector<Vec3>>& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write trajectory: " + path);
  const char magic[8] = {'P', 'I', 'C', 'A', 'T', 'R', 'A', 'J'};
  uint32_t n_frames = static_cast<uint32_t>(frames.size());
  uint32_t n_vertices = frames.empty() ? 0 : static_cast<uint32_t>(frames[0].size());
  out.write(magic, 8);
  out.write(reinterpret_cast<const char*>(&n_frames), 4);
  out.write(reinterpret_cast<const char*>(&n_vertices), 4);
  for (const auto& frame : frames) {
    if (frame.size() != n_vertices) throw FormatError("save_trajectory: ragged frame sizes");
    for (const Vec3& p : frame) {
      float v[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                    static_cast<float>(p.z())};
      out.write(reinterpret_cast<const char*>(v), sizeof(v));
    }
  }
}

std::vector<std::vector<Vec3>> load_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open trajectory: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "PICATRAJ", 8) != 0)
    throw FormatError(path + ": bad trajectory magic");
  uint32_t n_frames = 0, n_vertices = 0;
  in.read(reinterpret_cast<char*>(&n_frames), 4);
  in.read(reinterpret_cast<char*>(&n_vertices), 4);
  std::vector<std::vector<Vec3>> frames(n_frames, std::vector<Vec3>(n_vertices));
  for (auto& frame : frames)
    for (Vec3& p : frame) {
      float v[3];
      in.read(reinterpret_cast<char*>(v), sizeof(v));
      if (!in) throw FormatError(path + ": truncated trajectory data");
      p = Vec3(v[0], v[1], v[2]);
    }
  return frames;
}

}  // namespace pica
