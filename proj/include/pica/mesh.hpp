#pragma once

#include <array>
#include <string>
#include <vector>

#include "pica/types.hpp"

namespace pica {

enum class Layer { body, clothing };

// Indexed triangle mesh. `vertices` holds the canonical positions; operations
// that work on deformed geometry take a separate position sequence of the
// same length.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  Layer layer = Layer::body;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }
};

// Undirected edges over the vertex indices of a source mesh. level 0 is the
// full-resolution edge set; higher levels come from coarsen().
struct EdgeSet {
  std::vector<std::array<int, 2>> edges;
  int level = 0;
};

// Right-handed orthonormal face frame. rotation columns are (r1, r2, r3) with
// r1 the unit face normal, r2 the unit vector from the face center toward the
// first face vertex, r3 = r1 x r2.
struct FaceFrame {
  Mat3 rotation;
  Vec3 normal;  // == rotation.col(0)
};

// Interior edge with its two flap vertices, for bending terms.
// Edge (v0, v1); opp0 belongs to face_a, opp1 to face_b.
struct Hinge {
  int v0, v1, opp0, opp1;
  int face_a, face_b;
};

constexpr double kDegenerateAreaThreshold = 1e-12;  // m^2

TriMesh load_mesh(const std::string& path, Layer layer = Layer::body);
void save_mesh(const std::string& path, const TriMesh& mesh,
               const std::vector<Vec3>* positions = nullptr);

// Throws FormatError on invalid indices, degenerate faces, or inconsistent
// orientation (an interior edge appearing twice in the same direction).
void validate_mesh(const TriMesh& mesh);

double face_area(const TriMesh& mesh, const std::vector<Vec3>& positions, int face);
double total_area(const TriMesh& mesh);

FaceFrame face_frame(const TriMesh& mesh, const std::vector<Vec3>& positions, int face);
std::vector<FaceFrame> face_frames(const TriMesh& mesh, const std::vector<Vec3>& positions);

// Mean of (neighbor - v) over the 1-ring. Isolated vertices map to zero and
// are reported through `isolated` when given.
std::vector<Vec3> uniform_laplacian(const TriMesh& mesh, const std::vector<Vec3>& positions,
                                    std::vector<int>* isolated = nullptr);

std::vector<std::vector<int>> vertex_adjacency(const TriMesh& mesh);
EdgeSet mesh_edges(const TriMesh& mesh);
std::vector<Hinge> interior_hinges(const TriMesh& mesh);

// Area-weighted vertex normals (unit length; zero for isolated vertices).
std::vector<Vec3> vertex_normals(const TriMesh& mesh, const std::vector<Vec3>& positions);

// One third of the incident face areas per vertex.
std::vector<double> vertex_areas(const TriMesh& mesh, const std::vector<Vec3>& positions);

// Hierarchical coarsening: per level, a greedy maximal independent set
// (lowest-index-first) of the previous level's vertices, reconnected through
// 2-hop paths. Returned levels are 1..levels. Vertices keep their original
// indices. Sets `warned_disconnected` when the mesh has several components.
std::vector<EdgeSet> coarsen(const TriMesh& mesh, int levels,
                             bool* warned_disconnected = nullptr);

void save_edge_sets(const std::string& path, const std::vector<EdgeSet>& sets);
std::vector<EdgeSet> load_edge_sets(const std::string& path);

double mean_edge_length(const TriMesh& mesh);

}  // namespace pica
