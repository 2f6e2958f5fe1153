#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "agcn/tensor.hpp"

namespace agcn {

// Channel sum of the fused map, flattened over space: values [N, H*W].
struct IntensityMap {
  Tensor values;
  std::size_t h = 0;
  std::size_t w = 0;
};

IntensityMap intensity_map(const Tensor& f_ffr);

// Flat row-major positions of the K salient and K contextual nodes, each
// list ascending.
struct NodeSelection {
  std::vector<std::size_t> salient;
  std::vector<std::size_t> contextual;
};

// k >= 4, k % 4 == 0 and h*w >= 3k; throws ConfigError otherwise.
void validate_node_count(std::size_t k, std::size_t h, std::size_t w);

/// Ranks positions by intensity, descending, ties to the lower flat index.
/// Salient nodes are ranks [0, k); contextual nodes are the k ranks starting
/// at h*w/2 - k/2. Both lists are returned in ascending flat-index order.
NodeSelection select_nodes(std::span<const double> intensities, std::size_t h, std::size_t w,
                           std::size_t k);
NodeSelection select_nodes(const IntensityMap& map, std::size_t item, std::size_t k);

// Groups of four node ranks and their centres, 0-based. Group i holds ranks
// {i, i + k/4, i + k/2, i + 3k/4}; its centre is the third member.
struct SubgraphLayout {
  std::size_t k = 0;
  std::vector<std::array<std::size_t, 4>> groups;
  std::vector<std::size_t> centers;
};

SubgraphLayout build_subgraphs(std::size_t k);

struct GridPos {
  std::size_t x = 0;  // column
  std::size_t y = 0;  // row
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

std::vector<GridPos> node_positions(std::span<const std::size_t> flat_indices, std::size_t w);

struct Edge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Every pair inside each group, plus a chain linking consecutive centres.
std::vector<Edge> subgraph_edges(const SubgraphLayout& layout);

struct Adjacency {
  Tensor weights;  // [K,K], symmetric, zero diagonal
  std::vector<Edge> edges;
};

// Edge weight is the Manhattan distance between the two nodes' grid
// positions; non-edges are zero.
Adjacency build_adjacency(std::span<const GridPos> positions, const SubgraphLayout& layout);

// Features at the selected positions for every batch item:
// ([N,K,C] salient, [N,K,C] contextual).
std::pair<Tensor, Tensor> gather_node_features(const Tensor& f_ffr, const NodeSelection& selection);

enum class GraphKind { salient, contextual };

const char* to_string(GraphKind kind);

struct SceneGraph {
  GraphKind kind = GraphKind::salient;
  std::vector<std::size_t> flat_indices;
  Tensor node_features;  // [1,K,C]
  std::vector<GridPos> positions;
  Tensor adjacency;  // [K,K]
  std::vector<Edge> edges;
};

// Both graphs for one batch item, on an h x w feature grid.
struct ScenePair {
  SceneGraph salient;
  SceneGraph contextual;
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t k = 0;
};

// One pair per batch item of f_ffr [N,C,H,W].
std::vector<ScenePair> build_scene_graphs(const Tensor& f_ffr, std::size_t k);

// Positions, edges and adjacency for a selection; node_features stay empty.
ScenePair assemble_scene_pair(const NodeSelection& selection, std::size_t h, std::size_t w, std::size_t k);

// {h, w, k, nodes:[{rank, flat_idx, x, y, kind}], edges:[{i, j, weight}]}.
// Salient nodes come first in `nodes`; edge endpoints index into `nodes`.
std::string scene_graphs_to_json(const ScenePair& pair);

}  // namespace agcn
