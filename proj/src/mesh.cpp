#include "pica/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace pica {

namespace {

int parse_obj_index(const std::string& token, int vertex_count, int line_no) {
  // "f 3/1/2" style references: the vertex index is everything before '/'.
  std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  try {
    idx = std::stoi(head);
  } catch (const std::exception&) {
    throw FormatError("OBJ line " + std::to_string(line_no) + ": bad face index '" + token + "'");
  }
  if (idx < 0) idx = vertex_count + idx + 1;  // negative OBJ indices count from the end
  if (idx < 1 || idx > vertex_count)
    throw FormatError("OBJ line " + std::to_string(line_no) + ": face index " +
                      std::to_string(idx) + " out of range (vertices: " +
                      std::to_string(vertex_count) + ")");
  return idx - 1;
}

}  // namespace

TriMesh load_mesh(const std::string& path, Layer layer) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open mesh file: " + path);
  TriMesh mesh;
  mesh.layer = layer;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z()))
        throw FormatError("OBJ line " + std::to_string(line_no) + ": bad vertex record");
      mesh.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<std::string> tokens;
      std::string t;
      while (ls >> t) tokens.push_back(t);
      if (tokens.size() != 3)
        throw FormatError("OBJ line " + std::to_string(line_no) + ": face with " +
                          std::to_string(tokens.size()) + " vertices, only triangles accepted");
      std::array<int, 3> f;
      for (int j = 0; j < 3; ++j) f[j] = parse_obj_index(tokens[j], mesh.num_vertices(), line_no);
      mesh.faces.push_back(f);
    }
    // vn/vt/comments and anything else are ignored.
  }
  validate_mesh(mesh);
  return mesh;
}

void save_mesh(const std::string& path, const TriMesh& mesh, const std::vector<Vec3>* positions) {
  const std::vector<Vec3>& pos = positions ? *positions : mesh.vertices;
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write mesh file: " + path);
  char buf[128];
  for (const Vec3& p : pos) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void validate_mesh(const TriMesh& mesh) {
  const int nv = mesh.num_vertices();
  std::set<std::pair<int, int>> directed;
  for (int i = 0; i < mesh.num_faces(); ++i) {
    const auto& f = mesh.faces[i];
    for (int j = 0; j < 3; ++j) {
      if (f[j] < 0 || f[j] >= nv)
        throw FormatError("face " + std::to_string(i) + ": vertex index out of range");
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
      throw FormatError("face " + std::to_string(i) + ": repeated vertex");
    if (face_area(mesh, mesh.vertices, i) <= kDegenerateAreaThreshold)
      throw FormatError("face " + std::to_string(i) + ": degenerate (area below threshold)");
    for (int j = 0; j < 3; ++j) {
      auto e = std::make_pair(f[j], f[(j + 1) % 3]);
      if (!directed.insert(e).second)
        throw FormatError("face " + std::to_string(i) + ": inconsistent orientation, edge " +
                          std::to_string(e.first) + "->" + std::to_string(e.second) +
                          " appears twice");
    }
  }
}

double face_area(const TriMesh& mesh, const std::vector<Vec3>& positions, int face) {
  const auto& f = mesh.faces[face];
  return 0.5 * (positions[f[1]] - positions[f[0]]).cross(positions[f[2]] - positions[f[0]]).norm();
}

double total_area(const TriMesh& mesh) {
  double a = 0;
  for (int i = 0; i < mesh.num_faces(); ++i) a += face_area(mesh, mesh.vertices, i);
  return a;
}

FaceFrame face_frame(const TriMesh& mesh, const std::vector<Vec3>& positions, int face) {
  const auto& f = mesh.faces[face];
  const Vec3& p0 = positions[f[0]];
  const Vec3& p1 = positions[f[1]];
  const Vec3& p2 = positions[f[2]];
  Vec3 n = (p1 - p0).cross(p2 - p0);
  double n_len = n.norm();
  if (0.5 * n_len <= kDegenerateAreaThreshold)
    throw NumericalError("face " + std::to_string(face) + " is degenerate, no frame");
  Vec3 center = (p0 + p1 + p2) / 3.0;
  FaceFrame frame;
  Vec3 r1 = n / n_len;
  Vec3 r2 = (p0 - center).normalized();  // toward the first face vertex
  // r2 lies in the face plane, orthogonal to r1 up to roundoff; re-project.
  r2 = (r2 - r1 * r1.dot(r2)).normalized();
  Vec3 r3 = r1.cross(r2);
  frame.rotation.col(0) = r1;
  frame.rotation.col(1) = r2;
  frame.rotation.col(2) = r3;
  frame.normal = r1;
  return frame;
}

std::vector<FaceFrame> face_frames(const TriMesh& mesh, const std::vector<Vec3>& positions) {
  if (static_cast<int>(positions.size()) != mesh.num_vertices())
    throw FormatError("face_frames: position count does not match vertex count");
  std::vector<FaceFrame> out(mesh.num_faces());
  for (int i = 0; i < mesh.num_faces(); ++i) out[i] = face_frame(mesh, positions, i);
  return out;
}

std::vector<std::vector<int>> vertex_adjacency(const TriMesh& mesh) {
  std::vector<std::set<int>> adj(mesh.num_vertices());
  for (const auto& f : mesh.faces) {
    for (int j = 0; j < 3; ++j) {
      adj[f[j]].insert(f[(j + 1) % 3]);
      adj[f[(j + 1) % 3]].insert(f[j]);
    }
  }
  std::vector<std::vector<int>> out(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) out[v].assign(adj[v].begin(), adj[v].end());
  return out;
}

EdgeSet mesh_edges(const TriMesh& mesh) {
  std::set<std::pair<int, int>> seen;
  EdgeSet set;
  set.level = 0;
  for (const auto& f : mesh.faces) {
    for (int j = 0; j < 3; ++j) {
      int a = f[j], b = f[(j + 1) % 3];
      if (a > b) std::swap(a, b);
      if (seen.insert({a, b}).second) set.edges.push_back({a, b});
    }
  }
  std::sort(set.edges.begin(), set.edges.end());
  return set;
}

std::vector<Hinge> interior_hinges(const TriMesh& mesh) {
  // Undirected edge -> (face, opposite vertex) pairs.
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> edge_faces;
  for (int i = 0; i < mesh.num_faces(); ++i) {
    const auto& f = mesh.faces[i];
    for (int j = 0; j < 3; ++j) {
      int a = f[j], b = f[(j + 1) % 3], opp = f[(j + 2) % 3];
      if (a > b) std::swap(a, b);
      edge_faces[{a, b}].push_back({i, opp});
    }
  }
  std::vector<Hinge> hinges;
  for (const auto& [edge, faces] : edge_faces) {
    if (faces.size() != 2) continue;
    hinges.push_back({edge.first, edge.second, faces[0].second, faces[1].second,
                      faces[0].first, faces[1].first});
  }
  return hinges;
}

std::vector<Vec3> uniform_laplacian(const TriMesh& mesh, const std::vector<Vec3>& positions,
                                    std::vector<int>* isolated) {
  if (static_cast<int>(positions.size()) != mesh.num_vertices())
    throw FormatError("uniform_laplacian: position count mismatch");
  auto adj = vertex_adjacency(mesh);
  std::vector<Vec3> lap(mesh.num_vertices(), Vec3::Zero());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (adj[v].empty()) {
      if (isolated) isolated->push_back(v);
      continue;
    }
    Vec3 sum = Vec3::Zero();
    for (int u : adj[v]) sum += positions[u] - positions[v];
    lap[v] = sum / static_cast<double>(adj[v].size());
  }
  return lap;
}

std::vector<Vec3> vertex_normals(const TriMesh& mesh, const std::vector<Vec3>& positions) {
  std::vector<Vec3> normals(mesh.num_vertices(), Vec3::Zero());
  for (const auto& f : mesh.faces) {
    Vec3 n = (positions[f[1]] - positions[f[0]]).cross(positions[f[2]] - positions[f[0]]);
    for (int j = 0; j < 3; ++j) normals[f[j]] += 0.5 * n;  // area-weighted
  }
  for (Vec3& n : normals) {
    double len = n.norm();
    if (len > 0) n /= len;
  }
  return normals;
}

std::vector<double> vertex_areas(const TriMesh& mesh, const std::vector<Vec3>& positions) {
  std::vector<double> areas(mesh.num_vertices(), 0.0);
  for (int i = 0; i < mesh.num_faces(); ++i) {
    double a = face_area(mesh, positions, i) / 3.0;
    for (int j = 0; j < 3; ++j) areas[mesh.faces[i][j]] += a;
  }
  return areas;
}

std::vector<EdgeSet> coarsen(const TriMesh& mesh, int levels, bool* warned_disconnected) {
  if (levels < 1) throw FormatError("coarsen: levels must be >= 1");
  auto adj = vertex_adjacency(mesh);
  const int nv = mesh.num_vertices();

  if (warned_disconnected) {
    // BFS component count over vertices that appear in faces.
    std::vector<int> comp(nv, -1);
    int components = 0;
    for (int s = 0; s < nv; ++s) {
      if (comp[s] >= 0 || adj[s].empty()) continue;
      ++components;
      std::queue<int> q;
      q.push(s);
      comp[s] = components;
      while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int u : adj[v])
          if (comp[u] < 0) {
            comp[u] = components;
            q.push(u);
          }
      }
    }
    *warned_disconnected = components > 1;
  }

  std::vector<EdgeSet> out;
  std::vector<bool> active(nv, false);
  for (int v = 0; v < nv; ++v) active[v] = !adj[v].empty();
  std::vector<std::vector<int>> cur_adj = adj;

  for (int level = 1; level <= levels; ++level) {
    // Greedy maximal independent set, lowest index first.
    std::vector<bool> retained(nv, false), blocked(nv, false);
    for (int v = 0; v < nv; ++v) {
      if (!active[v] || blocked[v]) continue;
      retained[v] = true;
      for (int u : cur_adj[v]) blocked[u] = true;
    }
    // Reconnect retained vertices through 2-hop paths in the current graph.
    std::set<std::pair<int, int>> edges;
    for (int v = 0; v < nv; ++v) {
      if (!retained[v]) continue;
      for (int w : cur_adj[v]) {
        for (int u : cur_adj[w]) {
          if (u != v && retained[u]) {
            edges.insert({std::min(u, v), std::max(u, v)});
          }
        }
        if (retained[w]) edges.insert({std::min(w, v), std::max(w, v)});
      }
    }
    EdgeSet set;
    set.level = level;
    for (const auto& [a, b] : edges) set.edges.push_back({a, b});
    out.push_back(set);

    std::vector<std::vector<int>> next_adj(nv);
    for (const auto& e : set.edges) {
      next_adj[e[0]].push_back(e[1]);
      next_adj[e[1]].push_back(e[0]);
    }
    active.assign(nv, false);
    for (const auto& e : set.edges) {
      active[e[0]] = true;
      active[e[1]] = true;
    }
    cur_adj = std::move(next_adj);
  }
  return out;
}

void save_edge_sets(const std::string& path, const std::vector<EdgeSet>& sets) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write edge set file: " + path);
  for (const auto& set : sets)
    for (const auto& e : set.edges) out << set.level << ' ' << e[0] << ' ' << e[1] << '\n';
}

std::vector<EdgeSet> load_edge_sets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open edge set file: " + path);
  std::map<int, EdgeSet> by_level;
  int level, a, b;
  while (in >> level >> a >> b) {
    by_level[level].level = level;
    by_level[level].edges.push_back({a, b});
  }
  std::vector<EdgeSet> out;
  for (auto& [lv, set] : by_level) out.push_back(std::move(set));
  return out;
}

double mean_edge_length(const TriMesh& mesh) {
  EdgeSet edges = mesh_edges(mesh);
  if (edges.edges.empty()) return 0.0;
  double sum = 0;
  for (const auto& e : edges.edges) sum += (mesh.vertices[e[0]] - mesh.vertices[e[1]]).norm();
  return sum / static_cast<double>(edges.edges.size());
}

}  // namespace pica
