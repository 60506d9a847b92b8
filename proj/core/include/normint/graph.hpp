#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "normint/geometry.hpp"

namespace normint {

enum class Connectivity : int { Four = 4, Eight = 8 };

using VertexId = std::uint32_t;
using ComponentId = std::uint32_t;

inline constexpr std::int32_t kNoVertex = -1;

/// Undirected edge between two valid pixels; a < b in row-major order.
struct Edge {
  VertexId a;
  VertexId b;
};

/// Vertices are the valid pixels in row-major order, so vertex order and
/// row-major pixel order agree.
class PixelGraph {
 public:
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Connectivity connectivity() const noexcept { return connectivity_; }

  std::size_t vertex_count() const noexcept { return pixels_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  Pixel pixel(VertexId v) const noexcept { return pixels_[v]; }

  /// Vertex at (u, v), or kNoVertex if out of bounds or masked.
  std::int32_t vertex_at(int u, int v) const noexcept {
    if (u < 0 || v < 0 || u >= width_ || v >= height_) return kNoVertex;
    return vertex_of_pixel_[static_cast<std::size_t>(v) * width_ + u];
  }

  /// Point reflection of `from` through `center`: the pixel on the opposite
  /// side of `center`, if valid.
  std::int32_t opposite(VertexId center, VertexId from) const noexcept {
    const Pixel c = pixels_[center];
    const Pixel f = pixels_[from];
    return vertex_at(2 * c.u - f.u, 2 * c.v - f.v);
  }

  friend PixelGraph build_pixel_graph(const NormalMap& nmap, Connectivity connectivity);

 private:
  int width_ = 0;
  int height_ = 0;
  Connectivity connectivity_ = Connectivity::Four;
  std::vector<Pixel> pixels_;
  std::vector<std::int32_t> vertex_of_pixel_;
  std::vector<Edge> edges_;
};

/// Edges ordered by first endpoint (row-major), then by direction:
/// right, down, down-right, down-left. Throws Error(EmptyMask).
PixelGraph build_pixel_graph(const NormalMap& nmap, Connectivity connectivity);

/// arccos(n_a . n_b) with the dot product clamped to [-1, 1].
double relative_normal_angle(const Vec3& n_a, const Vec3& n_b) noexcept;

/// Assignment of every vertex to exactly one component. Component ids are
/// ranked by the smallest vertex they contain.
class Partition {
 public:
  Partition() = default;

  /// Relabels arbitrary per-vertex group keys canonically.
  static Partition from_labels(std::span<const std::uint32_t> group_of_vertex, int version);

  int version() const noexcept { return version_; }
  std::size_t component_count() const noexcept { return components_.size(); }
  std::size_t vertex_count() const noexcept { return labels_.size(); }

  ComponentId label(VertexId v) const noexcept { return labels_[v]; }
  std::span<const ComponentId> labels() const noexcept { return labels_; }
  std::span<const VertexId> component(ComponentId c) const noexcept { return components_[c]; }

 private:
  int version_ = 0;
  std::vector<ComponentId> labels_;
  std::vector<std::vector<VertexId>> components_;
};

/// Connected components of the subgraph keeping edges with angle < theta_c
/// (radians). Without a threshold every pixel is its own component.
Partition form_components(const PixelGraph& graph, const NormalMap& nmap,
                          std::optional<double> theta_c);

struct InterEdge {
  std::uint32_t edge;  // index into PixelGraph::edges()
  ComponentId comp_a;  // component of edge.a
  ComponentId comp_b;  // component of edge.b
};

struct QuotientGraph {
  std::size_t node_count = 0;
  std::vector<InterEdge> inter_edges;     // in pixel-edge order
  std::vector<std::uint32_t> intra_edges;  // pixel-edge indices, ascending
};

QuotientGraph build_quotient(const PixelGraph& graph, const Partition& partition);

/// Each component picks its incident inter-edge with the smallest residual
/// (ties: lowest inter-edge index); the new partition is the connected
/// components of the picked edges. Components without inter-edges survive
/// unchanged. `residuals` has one entry per quotient inter-edge.
Partition merge_components(const QuotientGraph& quotient, const Partition& partition,
                           std::span<const double> residuals);

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  std::uint32_t find(std::uint32_t x) noexcept;
  bool unite(std::uint32_t a, std::uint32_t b) noexcept;

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
};

}  // namespace normint
