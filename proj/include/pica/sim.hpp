#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pica/mesh.hpp"
#include "pica/skinning.hpp"
#include "pica/types.hpp"

namespace pica {

// Garment material properties, optimized in log-space.
struct PhysicalParams {
  double mass_density = 0.15;  // kg/m^2
  double bending = 2e-3;
  double stretch = 40.0;       // N/m
  double friction = 0.3;

  Eigen::Vector4d log_vector() const;
  static PhysicalParams from_log(const Eigen::Vector4d& v);
  void validate() const;  // all components > 0, finite
};

PhysicalParams load_params(const std::string& path);
void save_params(const std::string& path, const PhysicalParams& p);

struct SimOptions {
  double dt = 1.0 / 30;
  int levels = 3;                 // coarse graph levels
  double body_threshold = 0.03;   // m, clothing-to-body edge cutoff
  double contact_margin = 0.005;  // m, matches the collision loss epsilon
  double contact_stiffness = 2e3;
  bool gravity = true;
  double max_velocity = 100.0;  // m/s divergence guard

  bool operator==(const SimOptions&) const = default;
};

struct GraphEdge {
  int a = 0, b = 0;
  double rest = 0;  // canonical rest length, m
};

struct BodyEdge {
  int clothing = 0, body = 0;
};

// Clothing + body simulation graph with per-frame proximity edges.
struct HierarchicalGraph {
  int num_clothing = 0, num_body = 0;
  std::vector<GraphEdge> clothing_edges;
  std::vector<std::vector<GraphEdge>> coarse_edges;  // per level
  std::vector<BodyEdge> body_edges;
  double threshold = 0.03;

  std::vector<Hinge> hinges;
  std::vector<double> rest_dihedral;
  std::vector<double> node_area;  // canonical clothing Voronoi areas

  // Node features.
  std::vector<Vec3> clothing_pos, clothing_vel, clothing_normal;
  std::vector<Vec3> body_pos, body_vel, body_normal;
  PhysicalParams rho;

  const TriMesh* clothing_mesh = nullptr;
  const TriMesh* body_mesh = nullptr;

  Vec3 edge_relative_position(const GraphEdge& e) const {
    return clothing_pos[e.b] - clothing_pos[e.a];
  }
};

HierarchicalGraph build_graph(const TriMesh& clothing, const TriMesh& body, int levels,
                              double threshold, const PhysicalParams& rho);

// Rebuilds E^clothing2body from the given positions (nearest body vertex per
// clothing node, kept iff within threshold) and refreshes all node features.
void update_body_edges(HierarchicalGraph& graph, const std::vector<Vec3>& clothing_positions,
                       const std::vector<Vec3>& body_positions);

// Contract for the per-step acceleration model. The default is an analytic
// force model; a learned model can be slotted in without touching
// integration or parameter fitting.
class AccelPredictor {
 public:
  virtual ~AccelPredictor() = default;
  virtual std::vector<Vec3> predict(const HierarchicalGraph& graph,
                                    const PhysicalParams& rho) const = 0;
};

// Gravity + mass-spring stretch on fine and coarse edges + dihedral bending
// + body contact penalty with tangential velocity damping, divided by the
// node mass (mass_density x Voronoi area).
class AnalyticPredictor : public AccelPredictor {
 public:
  explicit AnalyticPredictor(SimOptions options = {}) : options_(options) {}
  std::vector<Vec3> predict(const HierarchicalGraph& graph,
                            const PhysicalParams& rho) const override;
  const SimOptions& options() const { return options_; }

 private:
  SimOptions options_;
};

struct SimState {
  int frame = 0;
  std::vector<Vec3> positions, velocities;            // clothing
  std::vector<Vec3> body_positions, body_velocities;  // kinematic
};

// Semi-implicit Euler: v += a dt; p += v dt; then the graph is refreshed
// (body edges rebuilt, features updated) and the frame advances.
SimState step(const SimState& state, HierarchicalGraph& graph, const AccelPredictor& predictor,
              const PhysicalParams& rho, double dt);

// Signed dihedral angle at a hinge and its exact gradient (sums to zero over
// the four vertices).
double dihedral_angle(const Vec3& x0, const Vec3& x1, const Vec3& xa, const Vec3& xb);
void dihedral_angle_gradient(const Vec3& x0, const Vec3& x1, const Vec3& xa, const Vec3& xb,
                             Vec3& g0, Vec3& g1, Vec3& ga, Vec3& gb);

struct Avatar;  // avatar.hpp

// Clothing geometry per animation frame. G_0 comes from the deformed frame 0
// (velocity finite-differenced from the first two frames when available).
std::vector<std::vector<Vec3>> simulate(const Avatar& avatar, const std::vector<Pose>& animation,
                                        const PhysicalParams& rho, const AccelPredictor& predictor,
                                        const SimOptions& options);

struct RhoFitResult {
  PhysicalParams rho;
  double objective = 0;
};

// One-step-prediction least squares over a reconstructed trajectory,
// minimized by a coarse log-space grid scan followed by simplex search.
// Search box: [1e-3, 1e3] x defaults, in log-space.
RhoFitResult fit_physical_params(const std::vector<std::vector<Vec3>>& clothing_trajectory,
                                 const std::vector<std::vector<Vec3>>& body_trajectory,
                                 const TriMesh& clothing, const TriMesh& body,
                                 const AccelPredictor& predictor, const SimOptions& options);

// The fitting objective at a given rho, exposed for audits.
double rho_objective(const PhysicalParams& rho,
                     const std::vector<std::vector<Vec3>>& clothing_trajectory,
                     const std::vector<std::vector<Vec3>>& body_trajectory,
                     const TriMesh& clothing, const TriMesh& body,
                     const AccelPredictor& predictor, const SimOptions& options);

struct CollisionResolveResult {
  std::vector<Vec3> positions;
  bool converged = true;
  int violations = 0;  // remaining, when not converged
};

// Iterative projection of violating clothing vertices to the margin along
// the nearest body vertex normal, followed by Laplacian smoothing of the
// moved set and a final projection sweep.
CollisionResolveResult resolve_collisions(const std::vector<Vec3>& clothing_positions,
                                          const TriMesh& clothing, const TriMesh& body,
                                          const std::vector<Vec3>& body_positions, double margin);

// Binary trajectory blob: 16-byte header (magic "PICATRAJ", uint32 frame
// count, uint32 vertex count) then frames x vertices x 3 little-endian
// 32-bit floats.
void save_trajectory(const std::string& path, const std::vector<std::vector<Vec3>>& frames);
std::vector<std::vector<Vec3>> load_trajectory(const std::string& path);

}  // namespace pica
