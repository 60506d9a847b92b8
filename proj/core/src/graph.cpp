#include "normint/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "normint/error.hpp"

namespace normint {

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
  std::iota(parent_.begin(), parent_.end(), 0u);
}

std::uint32_t UnionFind::find(std::uint32_t x) noexcept {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(std::uint32_t a, std::uint32_t b) noexcept {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

PixelGraph build_pixel_graph(const NormalMap& nmap, Connectivity connectivity) {
  if (nmap.valid_count() == 0) {
    throw Error(ErrorCode::EmptyMask, "normal map has no valid pixel");
  }
  PixelGraph g;
  g.width_ = nmap.width();
  g.height_ = nmap.height();
  g.connectivity_ = connectivity;
  g.vertex_of_pixel_.assign(static_cast<std::size_t>(g.width_) * g.height_, kNoVertex);
  g.pixels_.reserve(nmap.valid_count());
  for (int v = 0; v < g.height_; ++v) {
    for (int u = 0; u < g.width_; ++u) {
      if (!nmap.valid(u, v)) continue;
      g.vertex_of_pixel_[nmap.index(u, v)] = static_cast<std::int32_t>(g.pixels_.size());
      g.pixels_.push_back({u, v});
    }
  }

  // Offsets to neighbors later in row-major order.
  static constexpr int kOffsets[4][2] = {{1, 0}, {0, 1}, {1, 1}, {-1, 1}};
  const int directions = connectivity == Connectivity::Four ? 2 : 4;
  g.edges_.reserve(g.pixels_.size() * directions);
  for (VertexId a = 0; a < g.pixels_.size(); ++a) {
    const Pixel p = g.pixels_[a];
    for (int d = 0; d < directions; ++d) {
      const std::int32_t b = g.vertex_at(p.u + kOffsets[d][0], p.v + kOffsets[d][1]);
      if (b != kNoVertex) g.edges_.push_back({a, static_cast<VertexId>(b)});
    }
  }
  return g;
}

double relative_normal_angle(const Vec3& n_a, const Vec3& n_b) noexcept {
  return std::acos(std::clamp(n_a.dot(n_b), -1.0, 1.0));
}

Partition Partition::from_labels(std::span<const std::uint32_t> group_of_vertex, int version) {
  Partition p;
  p.version_ = version;
  p.labels_.resize(group_of_vertex.size());
  // Groups are ranked by first appearance, i.e. by their smallest vertex.
  std::unordered_map<std::uint32_t, ComponentId> remap;
  for (std::size_t v = 0; v < group_of_vertex.size(); ++v) {
    const auto [it, inserted] = remap.try_emplace(
        group_of_vertex[v], static_cast<ComponentId>(p.components_.size()));
    if (inserted) p.components_.emplace_back();
    p.labels_[v] = it->second;
    p.components_[it->second].push_back(static_cast<VertexId>(v));
  }
  return p;
}

namespace {

Partition partition_from_union_find(UnionFind& uf, std::size_t n, int version) {
  std::vector<std::uint32_t> roots(n);
  for (std::uint32_t v = 0; v < n; ++v) roots[v] = uf.find(v);
  return Partition::from_labels(roots, version);
}

}  // namespace

Partition form_components(const PixelGraph& graph, const NormalMap& nmap,
                          std::optional<double> theta_c) {
  const std::size_t n = graph.vertex_count();
  if (!theta_c) {
    std::vector<std::uint32_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0u);
    return Partition::from_labels(ids, 0);
  }
  UnionFind uf(n);
  for (const Edge& e : graph.edges()) {
    const Pixel pa = graph.pixel(e.a);
    const Pixel pb = graph.pixel(e.b);
    if (relative_normal_angle(nmap.normal(pa.u, pa.v), nmap.normal(pb.u, pb.v)) < *theta_c) {
      uf.unite(e.a, e.b);
    }
  }
  return partition_from_union_find(uf, n, 0);
}

QuotientGraph build_quotient(const PixelGraph& graph, const Partition& partition) {
  QuotientGraph q;
  q.node_count = partition.component_count();
  const auto& edges = graph.edges();
  for (std::uint32_t i = 0; i < edges.size(); ++i) {
    const ComponentId ca = partition.label(edges[i].a);
    const ComponentId cb = partition.label(edges[i].b);
    if (ca == cb) {
      q.intra_edges.push_back(i);
    } else {
      q.inter_edges.push_back({i, ca, cb});
    }
  }
  return q;
}

Partition merge_components(const QuotientGraph& quotient, const Partition& partition,
                           std::span<const double> residuals) {
  if (residuals.size() != quotient.inter_edges.size()) {
    throw Error(ErrorCode::InvalidArgument, "merge needs one residual per inter-component edge");
  }
  const std::size_t nodes = partition.component_count();
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> best(nodes, kNone);
  auto consider = [&](ComponentId c, std::uint32_t i) {
    // Strict comparison keeps the lowest index among ties.
    if (best[c] == kNone || std::abs(residuals[i]) < std::abs(residuals[best[c]])) best[c] = i;
  };
  for (std::uint32_t i = 0; i < quotient.inter_edges.size(); ++i) {
    consider(quotient.inter_edges[i].comp_a, i);
    consider(quotient.inter_edges[i].comp_b, i);
  }

  UnionFind uf(nodes);
  for (std::size_t c = 0; c < nodes; ++c) {
    if (best[c] == kNone) continue;
    const InterEdge& e = quotient.inter_edges[best[c]];
    uf.unite(e.comp_a, e.comp_b);
  }
  std::vector<std::uint32_t> groups(partition.vertex_count());
  for (VertexId v = 0; v < groups.size(); ++v) groups[v] = uf.find(partition.label(v));
  return Partition::from_labels(groups, partition.version() + 1);
}

}  // namespace normint
