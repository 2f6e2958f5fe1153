#include "agcn/graph.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <string>

#include <json.hpp>

#include "agcn/error.hpp"

namespace agcn {

IntensityMap intensity_map(const Tensor& f_ffr) {
  require_rank(f_ffr, 4, "intensity_map");
  const std::size_t n = f_ffr.dim(0), c = f_ffr.dim(1), h = f_ffr.dim(2), w = f_ffr.dim(3);
  const std::size_t hw = h * w;
  IntensityMap m{Tensor({n, hw}), h, w};
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* src = f_ffr.data().data() + (b * c + ch) * hw;
      double* dst = m.values.data().data() + b * hw;
      for (std::size_t p = 0; p < hw; ++p) dst[p] += src[p];
    }
  }
  return m;
}

void validate_node_count(std::size_t k, std::size_t h, std::size_t w) {
  if (k < 4 || k % 4 != 0) {
    throw ConfigError("node count k=" + std::to_string(k) + " must be a positive multiple of 4");
  }
  if (h * w < 3 * k) {
    throw ConfigError("feature grid " + std::to_string(h) + "x" + std::to_string(w) + " has " +
                      std::to_string(h * w) + " positions; k=" + std::to_string(k) + " needs at least " +
                      std::to_string(3 * k));
  }
}

NodeSelection select_nodes(std::span<const double> intensities, std::size_t h, std::size_t w,
                           std::size_t k) {
  validate_node_count(k, h, w);
  const std::size_t hw = h * w;
  if (intensities.size() != hw) {
    throw ConfigError("select_nodes: " + std::to_string(intensities.size()) + " intensities for a " +
                      std::to_string(h) + "x" + std::to_string(w) + " grid");
  }
  std::vector<std::size_t> order(hw);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return intensities[a] > intensities[b]; });

  const std::size_t m_left = hw / 2 - k / 2;
  NodeSelection sel;
  sel.salient.assign(order.begin(), order.begin() + static_cast<long>(k));
  sel.contextual.assign(order.begin() + static_cast<long>(m_left),
                        order.begin() + static_cast<long>(m_left + k));
  std::sort(sel.salient.begin(), sel.salient.end());
  std::sort(sel.contextual.begin(), sel.contextual.end());
  return sel;
}

NodeSelection select_nodes(const IntensityMap& map, std::size_t item, std::size_t k) {
  const std::size_t hw = map.h * map.w;
  if (item >= map.values.dim(0)) throw ConfigError("select_nodes: batch item out of range");
  return select_nodes(map.values.data().subspan(item * hw, hw), map.h, map.w, k);
}

SubgraphLayout build_subgraphs(std::size_t k) {
  if (k < 4 || k % 4 != 0) {
    throw ConfigError("subgraphs: k=" + std::to_string(k) + " must be a positive multiple of 4");
  }
  const std::size_t q = k / 4;
  SubgraphLayout layout;
  layout.k = k;
  for (std::size_t i = 0; i < q; ++i) {
    layout.groups.push_back({i, i + q, i + 2 * q, i + 3 * q});
    layout.centers.push_back(i + 2 * q);
  }
  return layout;
}

std::vector<GridPos> node_positions(std::span<const std::size_t> flat_indices, std::size_t w) {
  if (w == 0) throw ConfigError("node_positions: width must be positive");
  std::vector<GridPos> out;
  out.reserve(flat_indices.size());
  for (auto idx : flat_indices) out.push_back({idx % w, idx / w});
  return out;
}

std::vector<Edge> subgraph_edges(const SubgraphLayout& layout) {
  std::vector<Edge> edges;
  for (const auto& g : layout.groups) {
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = a + 1; b < 4; ++b) edges.push_back({std::min(g[a], g[b]), std::max(g[a], g[b])});
    }
  }
  for (std::size_t c = 0; c + 1 < layout.centers.size(); ++c) {
    edges.push_back({std::min(layout.centers[c], layout.centers[c + 1]),
                     std::max(layout.centers[c], layout.centers[c + 1])});
  }
  return edges;
}

Adjacency build_adjacency(std::span<const GridPos> positions, const SubgraphLayout& layout) {
  const std::size_t k = layout.k;
  if (positions.size() != k) {
    throw ConfigError("build_adjacency: " + std::to_string(positions.size()) + " positions for k=" +
                      std::to_string(k));
  }
  Adjacency adj{Tensor({k, k}), subgraph_edges(layout)};
  for (const Edge& e : adj.edges) {
    const auto& a = positions[e.i];
    const auto& b = positions[e.j];
    const double d = static_cast<double>((a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y));
    adj.weights[e.i * k + e.j] = d;
    adj.weights[e.j * k + e.i] = d;
  }
  return adj;
}

namespace {

Tensor gather_one(const Tensor& f, std::span<const std::size_t> idx) {
  const std::size_t n = f.dim(0), c = f.dim(1), hw = f.dim(2) * f.dim(3), k = idx.size();
  Tensor out({n, k, c});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t node = 0; node < k; ++node) {
      if (idx[node] >= hw) throw ConfigError("gather_node_features: index out of range");
      for (std::size_t ch = 0; ch < c; ++ch) {
        out[(b * k + node) * c + ch] = f[(b * c + ch) * hw + idx[node]];
      }
    }
  }
  return out;
}

}  // namespace

std::pair<Tensor, Tensor> gather_node_features(const Tensor& f_ffr, const NodeSelection& selection) {
  require_rank(f_ffr, 4, "gather_node_features");
  return {gather_one(f_ffr, selection.salient), gather_one(f_ffr, selection.contextual)};
}

const char* to_string(GraphKind kind) { return kind == GraphKind::salient ? "salient" : "contextual"; }

ScenePair assemble_scene_pair(const NodeSelection& selection, std::size_t h, std::size_t w, std::size_t k) {
  const SubgraphLayout layout = build_subgraphs(k);
  auto make = [&](GraphKind kind, const std::vector<std::size_t>& idx) {
    SceneGraph g;
    g.kind = kind;
    g.flat_indices = idx;
    g.positions = node_positions(idx, w);
    Adjacency adj = build_adjacency(g.positions, layout);
    g.adjacency = std::move(adj.weights);
    g.edges = std::move(adj.edges);
    return g;
  };
  return {make(GraphKind::salient, selection.salient), make(GraphKind::contextual, selection.contextual), h, w, k};
}

std::vector<ScenePair> build_scene_graphs(const Tensor& f_ffr, std::size_t k) {
  const IntensityMap map = intensity_map(f_ffr);
  validate_node_count(k, map.h, map.w);
  const std::size_t n = f_ffr.dim(0), c = f_ffr.dim(1), hw = map.h * map.w;
  std::vector<ScenePair> out;
  for (std::size_t b = 0; b < n; ++b) {
    const NodeSelection sel = select_nodes(map, b, k);
    ScenePair pair = assemble_scene_pair(sel, map.h, map.w, k);
    const Tensor item(Shape{1, c, map.h, map.w},
                      std::vector<double>(f_ffr.data().begin() + static_cast<long>(b * c * hw),
                                          f_ffr.data().begin() + static_cast<long>((b + 1) * c * hw)));
    auto [sal, ctx] = gather_node_features(item, sel);
    pair.salient.node_features = std::move(sal);
    pair.contextual.node_features = std::move(ctx);
    out.push_back(std::move(pair));
  }
  return out;
}

std::string scene_graphs_to_json(const ScenePair& pair) {
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json edges = nlohmann::json::array();
  std::size_t base = 0;
  for (const SceneGraph* g : {&pair.salient, &pair.contextual}) {
    for (std::size_t r = 0; r < g->flat_indices.size(); ++r) {
      nodes.push_back({{"rank", r},
                       {"flat_idx", g->flat_indices[r]},
                       {"x", g->positions[r].x},
                       {"y", g->positions[r].y},
                       {"kind", to_string(g->kind)}});
    }
    const std::size_t k = g->flat_indices.size();
    for (const Edge& e : g->edges) {
      edges.push_back({{"i", base + e.i}, {"j", base + e.j}, {"weight", g->adjacency[e.i * k + e.j]}});
    }
    base += k;
  }
  nlohmann::json doc = {{"h", pair.h}, {"w", pair.w}, {"k", pair.k}, {"nodes", nodes}, {"edges", edges}};
  return doc.dump(2);
}

}  // namespace agcn
